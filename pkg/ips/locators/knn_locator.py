"""
Nearest-Neighbour Locators
NN, KNN and WKNN position estimation over a radio map
"""

from typing import List, Sequence

import numpy as np

from ips.base import BaseLocator, LocatorFactory, locator_component
from ips.errors import ShapeError
from ips.fingerprint import RadioMap
from schemas.positioning_schema import Algorithm, LocateConfig, Neighbor, Position

DEFAULT_EPSILON = 1e-6


def nearest_neighbors(radio_map: RadioMap, query: Sequence[float], k: int) -> List[Neighbor]:
    """
    The k reference points with the smallest fingerprint distance, ascending.
    Ties go to the lexicographically smaller (x, y).
    """
    return radio_map.nearest_neighbors(query, k)


def wknn_weights(distances: Sequence[float], epsilon: float = DEFAULT_EPSILON) -> List[float]:
    """
    Normalised reciprocal-distance weights; distances below epsilon are clamped to epsilon
    """
    values = np.asarray(distances, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ShapeError("wknn_weights needs at least one distance")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    inverse = 1.0 / np.maximum(values, epsilon)
    return [float(w) for w in inverse / inverse.sum()]


def _centroid(neighbors: List[Neighbor]) -> Position:
    coords = np.array([(n.position.x, n.position.y) for n in neighbors], dtype=float)
    x, y = coords.mean(axis=0)
    return Position(x=float(x), y=float(y))


@locator_component(Algorithm.NN)
class NearestNeighborLocator(BaseLocator):
    """Position of the single closest reference point"""

    def estimate(self, neighbors: List[Neighbor]) -> Position:
        return neighbors[0].position


@locator_component(Algorithm.KNN)
class KNearestNeighborLocator(BaseLocator):
    """Unweighted centroid of the k closest reference points"""

    def estimate(self, neighbors: List[Neighbor]) -> Position:
        return _centroid(neighbors)


@locator_component(Algorithm.WKNN)
class WeightedKNearestNeighborLocator(BaseLocator):
    """Centroid of the k closest reference points weighted by reciprocal distance"""

    def weighted_neighbors(self, radio_map: RadioMap, query: Sequence[float]) -> List[Neighbor]:
        neighbors = radio_map.nearest_neighbors(query, self.k)
        weights = wknn_weights([n.distance for n in neighbors], self.config.epsilon)
        return [
            Neighbor(position=n.position, distance=n.distance, weight=w)
            for n, w in zip(neighbors, weights)
        ]

    def estimate(self, neighbors: List[Neighbor]) -> Position:
        weights = np.asarray(
            wknn_weights([n.distance for n in neighbors], self.config.epsilon), dtype=float
        )
        coords = np.array([(n.position.x, n.position.y) for n in neighbors], dtype=float)
        x, y = weights @ coords
        return Position(x=float(x), y=float(y))


def locate(radio_map: RadioMap, query: Sequence[float], config: LocateConfig) -> Position:
    """
    Dispatch to the locator registered for config.algorithm
    """
    return LocatorFactory.create_locator(config).locate(radio_map, query)


def locate_nn(radio_map: RadioMap, query: Sequence[float]) -> Position:
    return locate(radio_map, query, LocateConfig(algorithm=Algorithm.NN, k=1))


def locate_knn(radio_map: RadioMap, query: Sequence[float], k: int) -> Position:
    return locate(radio_map, query, LocateConfig(algorithm=Algorithm.KNN, k=k))


def locate_wknn(radio_map: RadioMap, query: Sequence[float], k: int, epsilon: float = DEFAULT_EPSILON) -> Position:
    return locate(radio_map, query, LocateConfig(algorithm=Algorithm.WKNN, k=k, epsilon=epsilon))
