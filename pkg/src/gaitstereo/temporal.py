"""Heel-strike / lift events and the temporal gait parameters.

For the heel strike at ``tCur`` of one foot, with ``tPre`` the previous heel
strike of the same foot and ``tLift`` the lift ending that footfall::

    stride_time   = tCur - tPre          (= gait cycle time)
    standing_time = tLift - tPre
    swing_time    = tCur - tLift
    step_time     = tCur - previous opposite-foot heel strike
    single_support = swing time of the opposite foot's preceding step
    double_support = step_time - that same opposite swing time
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import kernels
from .errors import GaitWarning, MalformedSequenceError, OpenStepError

LEFT, RIGHT = "left", "right"
HEEL_STRIKE, LIFT = "heel_strike", "lift"
FEET = (LEFT, RIGHT)
_FOOT_ORDER = {LEFT: 0, RIGHT: 1}
_KIND_ORDER = {HEEL_STRIKE: 0, LIFT: 1}


def opposite(foot: str) -> str:
    return RIGHT if foot == LEFT else LEFT


@dataclass(frozen=True)
class FootfallEvent:
    foot: str
    kind: str
    t: float

    def __post_init__(self):
        if self.foot not in _FOOT_ORDER:
            raise ValueError(f"bad foot {self.foot!r}")
        if self.kind not in _KIND_ORDER:
            raise ValueError(f"bad event kind {self.kind!r}")

    def sort_key(self):
        return (self.t, _FOOT_ORDER[self.foot], _KIND_ORDER[self.kind])


@dataclass(frozen=True, eq=False)
class FsrTrace:
    foot: str
    t: np.ndarray
    contact: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        c = np.asarray(self.contact, dtype=bool)
        if t.shape != c.shape or t.ndim != 1:
            raise ValueError("t and contact must be 1-D arrays of equal length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("FSR sample times must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "contact", c)


@dataclass(frozen=True)
class TemporalConfig:
    count_threshold: int = 100
    period: float = 1e-3
    compensation: Optional[float] = None  # default (count_threshold - 1) * period
    debounce: float = 0.080

    def effective_compensation(self) -> float:
        if self.compensation is not None:
            return self.compensation
        return (self.count_threshold - 1) * self.period


@dataclass
class TemporalStep:
    step_index: int
    foot: str
    t: float
    step_time: Optional[float] = None
    stride_time: Optional[float] = None
    gait_cycle_time: Optional[float] = None
    swing_time: Optional[float] = None
    standing_time: Optional[float] = None
    single_support: Optional[float] = None
    double_support: Optional[float] = None


@dataclass
class WalkSummary:
    n_steps: int
    cadence: Optional[float]
    ambulation_time: float


def detect_lift(
    trace: FsrTrace,
    heel_strike_t: float,
    count_threshold: int = 100,
    compensation: Optional[float] = None,
    period: float = 1e-3,
) -> float:
    """Lift time of the footfall starting at ``heel_strike_t``.

    Scans forward for ``count_threshold`` consecutive no-contact samples; the
    time at which the run completes, minus ``compensation``, is returned.
    """
    if count_threshold < 1:
        raise ValueError("count_threshold must be >= 1")
    if compensation is None:
        compensation = (count_threshold - 1) * period
    i0 = int(np.searchsorted(trace.t, heel_strike_t, side="left"))
    if i0 >= trace.t.size:
        raise ValueError(f"heel strike {heel_strike_t} is beyond the trace")
    j = kernels.first_false_run(trace.contact, i0 + 1, count_threshold)
    if j < 0:
        raise OpenStepError(f"no lift after heel strike at {heel_strike_t:.6f} s")
    return float(trace.t[j] - compensation)


def trace_events(trace: FsrTrace, cfg: TemporalConfig = TemporalConfig()) -> list[FootfallEvent]:
    """Heel-strike/lift events of one foot, with double triggers suppressed.

    Heel strikes are false->true contact transitions.  A rising edge is
    ignored if it falls within ``cfg.debounce`` of the last accepted heel
    strike or before that footfall's lift (a contact glitch mid-stance).
    """
    c = trace.contact
    if c.size == 0 or not c.any():
        return []
    rising = np.flatnonzero(c[1:] & ~c[:-1]) + 1
    events: list[FootfallEvent] = []
    last_hs = -np.inf
    busy_until = -np.inf
    comp = cfg.effective_compensation()
    for i in rising:
        t = float(trace.t[i])
        if t - last_hs < cfg.debounce or t <= busy_until:
            continue
        events.append(FootfallEvent(trace.foot, HEEL_STRIKE, t))
        last_hs = t
        try:
            lift = detect_lift(trace, t, cfg.count_threshold, comp, cfg.period)
        except OpenStepError:
            break
        events.append(FootfallEvent(trace.foot, LIFT, lift))
        busy_until = lift
    return events


def sort_events(events: Iterable[FootfallEvent]) -> list[FootfallEvent]:
    """Canonical order: time, then left before right, then heel strike before lift."""
    return sorted(events, key=FootfallEvent.sort_key)


def events_from_traces(
    left: FsrTrace, right: FsrTrace, cfg: TemporalConfig = TemporalConfig()
) -> list[FootfallEvent]:
    """Events of both feet (traces on a common clock) in global time order."""
    return sort_events(trace_events(left, cfg) + trace_events(right, cfg))


def validate_events(events: list[FootfallEvent]) -> None:
    """Raise :class:`MalformedSequenceError` unless each foot alternates HS/lift."""
    state: dict[str, tuple[str, float]] = {}
    for i, ev in enumerate(events):
        prev = state.get(ev.foot)
        expected = HEEL_STRIKE if prev is None or prev[0] == LIFT else LIFT
        if ev.kind != expected:
            raise MalformedSequenceError(
                f"event {i} ({ev.foot} {ev.kind} at {ev.t:.6f}): expected {expected}", index=i
            )
        if prev is not None and ev.t <= prev[1]:
            raise MalformedSequenceError(
                f"event {i} ({ev.foot} {ev.kind}): time not increasing", index=i
            )
        if ev.t < 0:
            raise MalformedSequenceError(f"event {i}: negative time", index=i)
        state[ev.foot] = (ev.kind, ev.t)


def temporal_params(events: Iterable[FootfallEvent]) -> tuple[list[TemporalStep], WalkSummary]:
    events = sort_events(events)
    validate_events(events)

    heel: list[tuple[str, float]] = []
    lift_of: dict[int, float] = {}
    open_hs: dict[str, int] = {}
    for ev in events:
        if ev.kind == HEEL_STRIKE:
            open_hs[ev.foot] = len(heel)
            heel.append((ev.foot, ev.t))
        else:
            lift_of[open_hs.pop(ev.foot)] = ev.t

    steps: list[TemporalStep] = []
    last_idx: dict[str, int] = {}
    for k, (foot, t) in enumerate(heel):
        st = TemporalStep(k, foot, t)
        opp = last_idx.get(opposite(foot))
        same = last_idx.get(foot)
        if opp is not None:
            st.step_time = t - heel[opp][1]
        if same is not None and same in lift_of:
            t_pre, t_lift = heel[same][1], lift_of[same]
            st.stride_time = t - t_pre
            st.gait_cycle_time = st.stride_time
            st.standing_time = t_lift - t_pre
            st.swing_time = t - t_lift
        if opp is not None and steps[opp].swing_time is not None:
            opp_swing = steps[opp].swing_time
            st.single_support = opp_swing
            st.double_support = st.step_time - opp_swing
            if st.double_support < 0:
                warnings.warn(
                    f"negative double support at step {k} ({st.double_support:.4f} s); "
                    "running gait?",
                    GaitWarning,
                    stacklevel=2,
                )
        steps.append(st)
        last_idx[foot] = k

    if heel:
        amb = heel[-1][1] - heel[0][1]
        cadence = 60.0 * (len(heel) - 1) / amb if len(heel) >= 2 and amb > 0 else None
    else:
        amb, cadence = 0.0, None
    return steps, WalkSummary(len(heel), cadence, amb)
