"""
Positioning Schema
Pydantic models shared by the fingerprint, locator, PDR, simulator, store and service layers
"""

import math
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

RSS_FLOOR_DBM = -120.0
RSS_CEILING_DBM = 0.0
TWO_PI = 2.0 * math.pi

# Ordered signal strengths in dBm, one per AP
RssVector = Tuple[float, ...]


def clamp_rss(value: float) -> float:
    """Clamp a single RSS reading into [-120, 0] dBm."""
    if not math.isfinite(value):
        raise ValueError(f"RSS value must be finite, got {value}")
    return min(max(float(value), RSS_FLOOR_DBM), RSS_CEILING_DBM)


def normalize_heading(heading: float) -> float:
    """Wrap an azimuth into [0, 2*pi)."""
    if not math.isfinite(heading):
        raise ValueError(f"heading must be finite, got {heading}")
    wrapped = math.fmod(heading, TWO_PI)
    if wrapped < 0.0:
        wrapped += TWO_PI
    # -tiny + 2*pi rounds up to 2*pi
    if wrapped >= TWO_PI:
        wrapped = 0.0
    return wrapped


class Algorithm(str, Enum):
    NN = "nn"
    KNN = "knn"
    WKNN = "wknn"


class RequestKind(str, Enum):
    INGEST = "INGEST"
    LOCATE = "LOCATE"
    TRACK_START = "TRACKSTART"
    TRACK_STEP = "TRACKSTEP"
    SHUTDOWN = "SHUTDOWN"


class ResponseStatus(str, Enum):
    OK = "OK"
    ERROR = "ERROR"


# Core Data Models
class Position(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: float = Field(..., allow_inf_nan=False, description="meters")
    y: float = Field(..., allow_inf_nan=False, description="meters")

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def sort_key(self) -> Tuple[float, float]:
        return (self.x, self.y)


class Fingerprint(BaseModel):
    """
    A position and the RSS vector observed there
    RSS values are clamped to [-120, 0] dBm on construction
    """
    model_config = ConfigDict(frozen=True)

    position: Position
    rss: RssVector

    @field_validator("rss", mode="before")
    @classmethod
    def _clamp(cls, value):
        values = tuple(clamp_rss(float(v)) for v in value)
        if not values:
            raise ValueError("rss vector must hold at least one AP reading")
        return values

    @property
    def ap_count(self) -> int:
        return len(self.rss)


class FingerprintRecord(BaseModel):
    """One row of the fingerprint table: X, Y, AP1..APn, none nullable"""
    model_config = ConfigDict(frozen=True)

    x: float = Field(..., allow_inf_nan=False)
    y: float = Field(..., allow_inf_nan=False)
    ap_rss: RssVector

    @field_validator("ap_rss", mode="before")
    @classmethod
    def _clamp(cls, value):
        values = tuple(clamp_rss(float(v)) for v in value)
        if not values:
            raise ValueError("a record needs at least one AP column")
        return values

    def to_fingerprint(self) -> Fingerprint:
        return Fingerprint(position=Position(x=self.x, y=self.y), rss=self.ap_rss)

    @classmethod
    def from_fingerprint(cls, fingerprint: Fingerprint) -> "FingerprintRecord":
        return cls(x=fingerprint.position.x, y=fingerprint.position.y, ap_rss=fingerprint.rss)


class LocateConfig(BaseModel):
    model_config = ConfigDict(frozen=True, use_enum_values=False)

    algorithm: Algorithm = Algorithm.WKNN
    k: int = Field(5, ge=1)
    epsilon: float = Field(1e-6, gt=0.0)

    @property
    def effective_k(self) -> int:
        return 1 if self.algorithm == Algorithm.NN else self.k

    @property
    def label(self) -> str:
        if self.algorithm == Algorithm.NN:
            return "nn"
        return f"{self.algorithm.value}_k{self.k}"


class Neighbor(BaseModel):
    model_config = ConfigDict(frozen=True)

    position: Position
    distance: float = Field(..., ge=0.0)
    weight: Optional[float] = Field(None, ge=0.0, le=1.0)


class SensorSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: float = Field(..., allow_inf_nan=False, description="seconds")
    accel: Tuple[float, float, float] = Field(..., description="specific force, m/s^2")
    heading: float = Field(..., description="azimuth, radians CCW from +x")

    @field_validator("heading", mode="before")
    @classmethod
    def _wrap_heading(cls, value):
        return normalize_heading(float(value))

    @field_validator("accel")
    @classmethod
    def _finite_accel(cls, value):
        if not all(math.isfinite(a) for a in value):
            raise ValueError("acceleration components must be finite")
        return value

    @property
    def magnitude(self) -> float:
        ax, ay, az = self.accel
        return math.sqrt(ax * ax + ay * ay + az * az)


class StepEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: float = Field(..., allow_inf_nan=False)
    heading: float

    @field_validator("heading", mode="before")
    @classmethod
    def _wrap_heading(cls, value):
        return normalize_heading(float(value))


class PdrConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    step_length: float = Field(0.7, gt=0.0, description="meters")
    accel_threshold: float = Field(10.8, gt=0.0, description="m/s^2")
    min_step_interval: float = Field(0.3, gt=0.0, description="seconds")


class TrajectoryPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: float = Field(..., allow_inf_nan=False)
    position: Position


class Trajectory(BaseModel):
    points: List[TrajectoryPoint]

    @model_validator(mode="after")
    def _strictly_increasing(self):
        if not self.points:
            raise ValueError("a trajectory starts with its initial fix")
        for previous, current in zip(self.points, self.points[1:]):
            if current.t <= previous.t:
                raise ValueError(
                    f"trajectory timestamps must increase: {previous.t} then {current.t}"
                )
        return self

    @property
    def start(self) -> Position:
        return self.points[0].position

    @property
    def final(self) -> Position:
        return self.points[-1].position

    def __len__(self) -> int:
        return len(self.points)


class SimConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    area: Tuple[float, float] = (20.0, 20.0)
    grid_spacing: float = Field(1.0, gt=0.0)
    ap_positions: Tuple[Position, ...] = (
        Position(x=0.0, y=0.0),
        Position(x=20.0, y=0.0),
        Position(x=0.0, y=20.0),
        Position(x=20.0, y=20.0),
    )
    tx_power_dbm_at_1m: float = -40.0
    path_loss_exponent: float = 2.5
    noise_sigma: float = Field(2.0, ge=0.0)
    samples_per_point: int = Field(5, ge=1)
    test_samples: int = Field(1000, ge=1)
    test_on_grid: bool = False
    seed: int = Field(42, ge=0)

    @field_validator("area")
    @classmethod
    def _positive_area(cls, value):
        width, height = value
        if not (width > 0 and height > 0):
            raise ValueError(f"area dimensions must be positive, got {value}")
        return value

    @field_validator("ap_positions")
    @classmethod
    def _at_least_one_ap(cls, value):
        if len(value) < 1:
            raise ValueError("at least one AP is required")
        return value

    @property
    def ap_count(self) -> int:
        return len(self.ap_positions)


class ErrorStats(BaseModel):
    """Positioning error distribution for one algorithm, in meters"""
    model_config = ConfigDict(frozen=True)

    errors: Tuple[float, ...]
    mean: float
    median: float
    p90: float

    @classmethod
    def from_errors(cls, errors) -> "ErrorStats":
        values = np.sort(np.asarray(list(errors), dtype=float))
        if values.size == 0:
            raise ValueError("error statistics need at least one error")
        return cls(
            errors=tuple(float(e) for e in values),
            mean=float(np.mean(values)),
            median=float(np.median(values)),
            p90=float(np.percentile(values, 90)),
        )

    @property
    def count(self) -> int:
        return len(self.errors)

    def cdf_at(self, threshold: float) -> float:
        """Fraction of errors that are <= threshold."""
        values = np.asarray(self.errors)
        return float(np.searchsorted(values, threshold, side="right")) / values.size
