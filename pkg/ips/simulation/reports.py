"""
Result tables
CSV emitters for CDFs, per-algorithm summaries, trajectories and sweeps.
Floats are written with repr and rows end in LF, so equal inputs give byte-identical files.
"""

from pathlib import Path
from typing import Dict, IO, Iterable, List, Sequence, Tuple, Union

import pandas as pd

from ips.stores.csv_store import write_frame
from schemas.positioning_schema import ErrorStats, LocateConfig, Position, Trajectory

Destination = Union[str, Path, IO[str]]


def _cell(value) -> str:
    return repr(float(value)) if not isinstance(value, (int, str)) else str(value)


def _table(columns: List[str], rows: Iterable[Sequence]) -> pd.DataFrame:
    return pd.DataFrame([[_cell(v) for v in row] for row in rows], columns=columns)


def write_cdf(cdf: Sequence[Tuple[float, float]], destination: Destination) -> None:
    write_frame(_table(["error", "probability"], cdf), destination)


def write_summary(results: Dict[LocateConfig, ErrorStats], destination: Destination) -> None:
    rows = [
        (config.algorithm.value, config.effective_k, stats.count, stats.mean, stats.median, stats.p90)
        for config, stats in results.items()
    ]
    write_frame(_table(["algorithm", "k", "count", "mean", "median", "p90"], rows), destination)


def write_trajectory(trajectory: Trajectory, destination: Destination) -> None:
    rows = [(p.t, p.position.x, p.position.y) for p in trajectory.points]
    write_frame(_table(["t", "x", "y"], rows), destination)


def write_positions(positions: Sequence[Position], destination: Destination) -> None:
    """Located waypoints as t,x,y rows, t being the waypoint index"""
    rows = [(float(i), p.x, p.y) for i, p in enumerate(positions)]
    write_frame(_table(["t", "x", "y"], rows), destination)


def write_sweep(pairs: Sequence[Tuple[int, float]], destination: Destination, key: str = "k") -> None:
    write_frame(_table([key, "score"], pairs), destination)
