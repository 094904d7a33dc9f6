"""
Pedestrian Dead Reckoning Tracker
Gait detection on acceleration magnitude, constant step length, heading projection,
and the tracker seeded by a WKNN fix
"""

import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ips.errors import NullViolationError, OrderingError, ParseError, SchemaError, StorageError
from ips.fingerprint import RadioMap
from ips.locators.knn_locator import locate_wknn
from schemas.positioning_schema import (
    LocateConfig, PdrConfig, Position, SensorSample, StepEvent, Trajectory, TrajectoryPoint
)

logger = logging.getLogger("PdrTracker")

TRACE_COLUMNS = ["t", "ax", "ay", "az", "heading"]


def acceleration_magnitude(trace: Sequence[SensorSample]) -> np.ndarray:
    if not trace:
        return np.empty(0)
    accel = np.array([s.accel for s in trace], dtype=float)
    return np.sqrt(np.sum(np.square(accel), axis=1))


def detect_steps(trace: Sequence[SensorSample], config: PdrConfig = PdrConfig()) -> List[StepEvent]:
    """
    Emit a step at every local maximum of |a| that exceeds accel_threshold and
    comes at least min_step_interval after the previously emitted step.
    A sample is a local maximum when it is strictly above its predecessor and
    not below its successor; the first and last samples never qualify, nor does a
    peak stamped with the trace start time.
    """
    trace = list(trace)
    for previous, current in zip(trace, trace[1:]):
        if current.t < previous.t:
            raise OrderingError(f"trace timestamps decrease: {previous.t} then {current.t}")

    magnitude = acceleration_magnitude(trace)
    steps: List[StepEvent] = []
    last_t: Optional[float] = None
    for i in range(1, len(trace) - 1):
        m = magnitude[i]
        if not (m > magnitude[i - 1] and m >= magnitude[i + 1]):
            continue
        if m <= config.accel_threshold:
            continue
        # steps must come strictly after the start of the trace
        if trace[i].t <= trace[0].t:
            continue
        if last_t is not None and trace[i].t - last_t < config.min_step_interval:
            continue
        steps.append(StepEvent(t=trace[i].t, heading=trace[i].heading))
        last_t = trace[i].t

    logger.debug(f"Detected {len(steps)} steps in {len(trace)} samples")
    return steps


def pdr_step(current: Position, step_length: float, heading: float) -> Position:
    """
    x' = x + d*cos(alpha), y' = y + d*sin(alpha)
    """
    return Position(
        x=current.x + step_length * math.cos(heading),
        y=current.y + step_length * math.sin(heading),
    )


def track(
    initial_fix: Position,
    steps: Sequence[StepEvent],
    config: PdrConfig = PdrConfig(),
    start_time: float = 0.0,
) -> Trajectory:
    """
    Fold pdr_step over the step events, starting from the initial fix at start_time
    """
    points = [TrajectoryPoint(t=start_time, position=initial_fix)]
    for step in steps:
        previous = points[-1]
        if step.t <= previous.t:
            raise OrderingError(f"step at t={step.t} does not follow t={previous.t}")
        points.append(
            TrajectoryPoint(t=step.t, position=pdr_step(previous.position, config.step_length, step.heading))
        )
    return Trajectory(points=points)


def fused_track(
    radio_map: RadioMap,
    initial_query: Sequence[float],
    trace: Sequence[SensorSample],
    locate_config: LocateConfig = LocateConfig(),
    pdr_config: PdrConfig = PdrConfig(),
) -> Trajectory:
    """
    WKNN fix for the starting point, then dead reckoning over the detected steps
    """
    trace = list(trace)
    initial_fix = locate_wknn(radio_map, initial_query, locate_config.k, locate_config.epsilon)
    steps = detect_steps(trace, pdr_config)
    start_time = trace[0].t if trace else 0.0
    trajectory = track(initial_fix, steps, pdr_config, start_time=start_time)
    logger.info(
        f"Fused track: fix ({initial_fix.x:.2f}, {initial_fix.y:.2f}), {len(steps)} steps, "
        f"end ({trajectory.final.x:.2f}, {trajectory.final.y:.2f})"
    )
    return trajectory


def load_trace(source: Union[str, Path]) -> List[SensorSample]:
    """
    Read a t,ax,ay,az,heading CSV into sensor samples
    """
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False)
    except FileNotFoundError as e:
        raise StorageError(f"trace file not found: {source}") from e
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise StorageError(f"cannot read trace {source}: {e}") from e

    missing = [c for c in TRACE_COLUMNS if c not in frame.columns]
    if missing:
        raise SchemaError(f"trace {source} is missing columns: {', '.join(missing)}")

    samples = []
    for row_number, row in enumerate(frame[TRACE_COLUMNS].itertuples(index=False), start=2):
        values = []
        for column, cell in zip(TRACE_COLUMNS, row):
            cell = cell.strip()
            if cell == "":
                raise NullViolationError(f"line {row_number}: empty '{column}' cell")
            try:
                values.append(float(cell))
            except ValueError as e:
                raise ParseError(f"line {row_number}: '{column}' is not numeric: {cell!r}") from e
        t, ax, ay, az, heading = values
        samples.append(SensorSample(t=t, accel=(ax, ay, az), heading=heading))
    return samples
