"""Spatial gait parameters, stride velocity, and the %CV / %Sym statistics."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import UndefinedStatisticError
from .geometry import GROUND, WorldPoint
from .temporal import LEFT, RIGHT, TemporalStep


@dataclass(frozen=True)
class RigConfig:
    foot_length: float = 0.27
    initial_height_offset: float = 0.01
    theta: float = 0.2

    def __post_init__(self):
        if not self.foot_length > 0:
            raise ValueError("foot_length must be positive")

    def theta_for(self, foot: str) -> float:
        """Mounting yaw of one foot's rig; the two rigs are mirror images."""
        return self.theta if foot == LEFT else -self.theta


@dataclass(frozen=True)
class StepObservation:
    step_index: int
    foot: str
    marker_ground: WorldPoint
    t: float

    def __post_init__(self):
        if self.marker_ground.frame != GROUND:
            raise ValueError("marker position must be in the ground frame")


@dataclass
class StepRecord:
    step_index: int
    foot: str
    t: float
    gait_length: Optional[float] = None
    gait_width: Optional[float] = None
    gait_height: Optional[float] = None
    stride_length: Optional[float] = None
    step_time: Optional[float] = None
    stride_time: Optional[float] = None
    gait_cycle_time: Optional[float] = None
    swing_time: Optional[float] = None
    standing_time: Optional[float] = None
    single_support: Optional[float] = None
    double_support: Optional[float] = None
    stride_velocity: Optional[float] = None
    spatial_missing: bool = False
    negative_length: bool = False

    @classmethod
    def from_temporal(cls, ts: TemporalStep) -> "StepRecord":
        return cls(**asdict(ts))

    def as_dict(self) -> dict:
        return asdict(self)


STEP_FIELDS = tuple(f.name for f in fields(StepRecord))


def gait_vector(obs: StepObservation, cfg: RigConfig) -> tuple[float, float, float]:
    """(gait length, gait width, gait height) from the opposite marker position."""
    x, y, z = obs.marker_ground.xyz
    return float(x), float(abs(y)), float(z + cfg.initial_height_offset)


def stride_length(
    gait_len_prev: Optional[float], gait_len_cur: Optional[float], foot_length: float
) -> Optional[float]:
    """Two consecutive gait lengths plus the foot length; ``None`` without a previous step."""
    if gait_len_prev is None or gait_len_cur is None:
        return None
    if gait_len_prev < 0 or gait_len_cur < 0 or foot_length < 0:
        raise ValueError("stride_length inputs must be non-negative")
    return gait_len_prev + gait_len_cur + foot_length


def stride_velocity(stride_len: float, stride_time: float) -> float:
    if not stride_time > 0:
        raise ValueError(f"stride_time must be positive, got {stride_time}")
    return stride_len / stride_time


def coefficient_of_variation(xs: Sequence[float]) -> float:
    """Sample (N-1) standard deviation over the mean, in percent."""
    x = np.asarray(xs, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two values for %CV")
    mean = x.mean()
    if abs(mean) < 1e-12:
        raise UndefinedStatisticError("%CV undefined for zero mean")
    s = math.sqrt(((x - mean) ** 2).sum() / (x.size - 1))
    return 100.0 * s / mean


def symmetry(x_right: float, x_left: float) -> float:
    denom = x_right + x_left
    if abs(denom) < 1e-12:
        raise UndefinedStatisticError("%Sym undefined when right + left = 0")
    return 2.0 * abs((x_right - x_left) / denom) * 100.0


def _values(records: Iterable[StepRecord], attr: str, foot: Optional[str] = None) -> list[float]:
    return [
        getattr(r, attr)
        for r in records
        if getattr(r, attr) is not None and (foot is None or r.foot == foot)
    ]


def series_cv(records: Sequence[StepRecord], attr: str) -> Optional[float]:
    """%CV of one parameter over the steps where it is present."""
    xs = _values(records, attr)
    if len(xs) < 2:
        return None
    try:
        return coefficient_of_variation(xs)
    except UndefinedStatisticError:
        return None


def series_symmetry(records: Sequence[StepRecord], attr: str) -> Optional[float]:
    """Mean per-step %Sym of one parameter.

    Each step is paired with the preceding step of the opposite foot; steps
    where either value is absent are skipped.
    """
    vals = []
    for prev, cur in zip(records, records[1:]):
        a, b = getattr(prev, attr), getattr(cur, attr)
        if a is None or b is None or prev.foot == cur.foot:
            continue
        right, left = (b, a) if cur.foot == RIGHT else (a, b)
        try:
            vals.append(symmetry(right, left))
        except UndefinedStatisticError:
            continue
    return float(np.mean(vals)) if vals else None
