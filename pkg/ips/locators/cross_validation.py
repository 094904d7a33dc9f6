"""
K-fold cross-validation of a locator configuration
Score = fraction of held-out fingerprints located within success_radius of their true position
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ips.base import LocatorFactory
from ips.errors import CapacityError, ConfigurationError
from ips.fingerprint import build_radio_map
from schemas.positioning_schema import Fingerprint, LocateConfig

logger = logging.getLogger("CrossValidation")

DEFAULT_FOLDS = 10
DEFAULT_SUCCESS_RADIUS = 2.0


def _evaluate_fold(
    samples: Sequence[Fingerprint],
    train_idx: np.ndarray,
    test_idx: np.ndarray,
    config: LocateConfig,
    success_radius: float,
    ap_count: int,
) -> Tuple[int, int]:
    radio_map = build_radio_map((samples[i] for i in train_idx), ap_count)
    if len(radio_map) < config.effective_k:
        raise CapacityError(
            f"training fold has {len(radio_map)} distinct positions, k={config.effective_k} needs more"
        )
    locator = LocatorFactory.create_locator(config)
    hits = 0
    for i in test_idx:
        estimate = locator.locate(radio_map, samples[i].rss)
        if estimate.distance_to(samples[i].position) <= success_radius:
            hits += 1
    return hits, len(test_idx)


def cross_validate(
    samples: Sequence[Fingerprint],
    config: LocateConfig,
    folds: int = DEFAULT_FOLDS,
    success_radius: float = DEFAULT_SUCCESS_RADIUS,
    seed: int = 0,
    max_workers: Optional[int] = None,
) -> float:
    """
    Shuffle by seed, split into folds, locate every held-out sample against a
    map built from the remaining folds and return the overall hit rate.
    """
    samples = list(samples)
    if folds < 2:
        raise ConfigurationError(f"cross-validation needs at least 2 folds, got {folds}")
    if success_radius < 0:
        raise ConfigurationError(f"success_radius must be non-negative, got {success_radius}")
    if len(samples) < folds:
        raise CapacityError(f"{len(samples)} samples cannot be split into {folds} folds")

    ap_count = samples[0].ap_count
    order = np.random.default_rng(seed).permutation(len(samples))
    parts: List[np.ndarray] = np.array_split(order, folds)
    splits = [
        (np.concatenate(parts[:i] + parts[i + 1:]), parts[i])
        for i in range(folds)
    ]

    def run(split):
        train_idx, test_idx = split
        return _evaluate_fold(samples, train_idx, test_idx, config, success_radius, ap_count)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(run, splits))
    else:
        results = [run(split) for split in splits]

    hits = sum(h for h, _ in results)
    total = sum(n for _, n in results)
    score = hits / total
    logger.debug(f"{config.label}: {folds} folds, radius {success_radius} m -> {hits}/{total} = {score:.4f}")
    return score
