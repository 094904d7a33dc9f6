"""
Fingerprint Core
RSS arithmetic, fingerprint distance and offline radio-map construction
"""

import logging
import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ips.errors import CapacityError, DomainError, EmptyMapError, ShapeError
from schemas.positioning_schema import (
    RSS_CEILING_DBM, RSS_FLOOR_DBM, Fingerprint, Neighbor, Position, RssVector, clamp_rss
)

logger = logging.getLogger("FingerprintCore")


def rss_from_power(power_mw: float) -> float:
    """
    Received power in milliwatts -> RSS in dBm (10 * log10(P / 1 mW))
    """
    if not (power_mw > 0) or not math.isfinite(power_mw):
        raise DomainError(f"power must be a positive finite number of milliwatts, got {power_mw}")
    return 10.0 * math.log10(power_mw)


def fill_missing(values: Sequence[Optional[float]], ap_count: int) -> RssVector:
    """
    Substitute the -120 dBm floor for APs that were not heard
    """
    if len(values) != ap_count:
        raise ShapeError(f"expected {ap_count} AP readings, got {len(values)}")
    filled = []
    for value in values:
        if value is None or (isinstance(value, float) and math.isnan(value)):
            filled.append(RSS_FLOOR_DBM)
        else:
            filled.append(clamp_rss(value))
    return tuple(filled)


def _as_vector(values: Sequence[float], name: str) -> np.ndarray:
    vector = np.asarray(values, dtype=float)
    if vector.ndim != 1 or vector.size == 0:
        raise ShapeError(f"{name} must be a non-empty 1-D RSS vector")
    return vector


def fingerprint_distance(query: Sequence[float], reference: Sequence[float]) -> float:
    """
    RMS difference over AP dimensions:
    sqrt( (1/n_AP) * sum_j (query_j - reference_j)^2 )
    """
    q = _as_vector(query, "query")
    r = _as_vector(reference, "reference")
    if q.size != r.size:
        raise ShapeError(f"length mismatch: query has {q.size} APs, reference has {r.size}")
    return float(np.sqrt(np.mean(np.square(q - r))))


class RadioMap:
    """
    Averaged fingerprint per reference point

    Immutable once built. Points are kept in lexicographic (x, y) order,
    which is also the tie-break order for equidistant neighbours.
    """

    def __init__(
        self,
        positions: np.ndarray,
        rss: np.ndarray,
        ap_count: int,
        grid_spacing: float,
    ):
        positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        rss = np.asarray(rss, dtype=float).reshape(len(positions), -1) if len(positions) else np.empty((0, ap_count))
        if ap_count < 1:
            raise ShapeError(f"ap_count must be positive, got {ap_count}")
        if rss.shape[1] != ap_count:
            raise ShapeError(f"radio map rows have {rss.shape[1]} APs, expected {ap_count}")

        order = np.lexsort((positions[:, 1], positions[:, 0]))
        self._positions = positions[order].copy()
        self._rss = rss[order].copy()
        self._positions.setflags(write=False)
        self._rss.setflags(write=False)
        self._points = tuple(
            Position.model_construct(x=float(x), y=float(y)) for x, y in self._positions
        )
        self.ap_count = int(ap_count)
        self.grid_spacing = float(grid_spacing)

    @classmethod
    def from_arrays(cls, positions, rss, grid_spacing: float = 1.0) -> "RadioMap":
        """
        Wrap already-averaged rows: positions (N, 2) and rss (N, n_AP), one row per distinct position.
        RSS values are clamped to [-120, 0] dBm.
        """
        positions = np.asarray(positions, dtype=float)
        rss = np.asarray(rss, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != 2:
            raise ShapeError(f"positions must have shape (N, 2), got {positions.shape}")
        if rss.ndim != 2 or rss.shape[1] < 1:
            raise ShapeError(f"rss must have shape (N, n_AP), got {rss.shape}")
        if len(positions) != len(rss):
            raise ShapeError(f"{len(positions)} positions but {len(rss)} RSS rows")
        if not len(positions):
            raise EmptyMapError("cannot build a radio map from zero rows")
        if not (np.all(np.isfinite(positions)) and np.all(np.isfinite(rss))):
            raise ShapeError("positions and RSS values must be finite")
        if len(np.unique(positions, axis=0)) != len(positions):
            raise ShapeError("positions repeat; average repeated samples with build_radio_map")
        return cls(positions, np.clip(rss, RSS_FLOOR_DBM, RSS_CEILING_DBM), rss.shape[1], grid_spacing)

    @property
    def positions(self) -> np.ndarray:
        return self._positions

    @property
    def rss_matrix(self) -> np.ndarray:
        return self._rss

    @property
    def points(self) -> Tuple[Fingerprint, ...]:
        return tuple(
            Fingerprint(position=p, rss=tuple(float(v) for v in row))
            for p, row in zip(self._points, self._rss)
        )

    def __len__(self) -> int:
        return len(self._points)

    def __contains__(self, position: Position) -> bool:
        return position in self._points

    def fingerprint_at(self, position: Position) -> RssVector:
        for p, row in zip(self._points, self._rss):
            if p == position:
                return tuple(float(v) for v in row)
        raise KeyError(f"no reference point at ({position.x}, {position.y})")

    def bounding_box(self) -> Tuple[Position, Position]:
        if not len(self):
            raise EmptyMapError("radio map is empty")
        low = self._positions.min(axis=0)
        high = self._positions.max(axis=0)
        return Position(x=low[0], y=low[1]), Position(x=high[0], y=high[1])

    def distances(self, query: Sequence[float]) -> np.ndarray:
        """
        fingerprint_distance from the query to every reference point, in map order
        """
        if not len(self):
            raise EmptyMapError("radio map is empty")
        q = _as_vector(query, "query")
        if q.size != self.ap_count:
            raise ShapeError(f"query has {q.size} APs, radio map has {self.ap_count}")
        return np.sqrt(np.mean(np.square(self._rss - q), axis=1))

    def nearest_neighbors(self, query: Sequence[float], k: int) -> List[Neighbor]:
        """
        The k reference points closest to the query, ascending by distance
        """
        if k < 1:
            raise CapacityError(f"k must be at least 1, got {k}")
        distances = self.distances(query)
        if k > len(self):
            raise CapacityError(f"k={k} exceeds the {len(self)} points in the radio map")
        # stable sort keeps lexicographic map order among equal distances
        order = np.argsort(distances, kind="stable")[:k]
        return [
            Neighbor.model_construct(position=self._points[i], distance=float(distances[i]), weight=None)
            for i in order
        ]

    def __repr__(self) -> str:
        return f"RadioMap(points={len(self)}, ap_count={self.ap_count}, grid_spacing={self.grid_spacing})"


def build_radio_map(samples: Iterable[Fingerprint], ap_count: int, grid_spacing: float = 1.0) -> RadioMap:
    """
    Group samples by exact position and average each group component-wise
    """
    samples = list(samples)
    if not samples:
        raise EmptyMapError("cannot build a radio map from zero samples")

    groups: Dict[Tuple[float, float], List[RssVector]] = {}
    for sample in samples:
        if len(sample.rss) != ap_count:
            raise ShapeError(
                f"sample at ({sample.position.x}, {sample.position.y}) has {len(sample.rss)} APs, expected {ap_count}"
            )
        groups.setdefault((sample.position.x, sample.position.y), []).append(sample.rss)

    # sort each group so the floating-point sum does not depend on input order
    positions = np.array(list(groups.keys()), dtype=float)
    averaged = np.array(
        [np.mean(np.sort(np.array(rows, dtype=float), axis=0), axis=0) for rows in groups.values()],
        dtype=float,
    )
    radio_map = RadioMap.from_arrays(positions, averaged, grid_spacing)
    logger.debug(f"Built radio map: {len(radio_map)} reference points from {len(samples)} samples, {ap_count} APs")
    return radio_map
