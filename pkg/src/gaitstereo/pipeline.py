"""End-to-end processing: observation log + calibration -> per-step gait report.

Accuracy of a measured parameter against truth is

    accuracy = 100 * (1 - mean(|measured - truth|) / mean(truth))

rounded to 6 decimals, pooled over matched steps (per-step parameters) or
over walks (walk-level parameters).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import spearmanr

from .calibration import Calibration
from .errors import ConfigError, IllConditionedError, CheiralityError
from .geometry import PixelPoint, to_ground, triangulate
from .spatial import (
    RigConfig,
    StepObservation,
    StepRecord,
    gait_vector,
    series_cv,
    series_symmetry,
    stride_length,
    stride_velocity,
)
from .sync import align_streams, sync_report
from .temporal import LEFT, RIGHT, TemporalConfig, WalkSummary, temporal_params, trace_events

ACCURACY_FORMULA = "accuracy = 100 * (1 - mean(|measured - truth|) / mean(truth))"
MATCH_TOL = 0.040  # s, stereo capture to heel strike
DECLINE_TREND = -0.8
STEP_PARAMS = (
    "gait_length", "gait_width", "gait_height", "stride_length",
    "step_time", "stride_time", "gait_cycle_time", "swing_time", "standing_time",
    "single_support", "double_support", "stride_velocity",
)
WALK_PARAMS = (
    "n_steps", "cadence", "ambulation_time",
    "variation_gait_length", "variation_stride_velocity",
    "symmetry_gait_length", "symmetry_stride_velocity",
)
# the seventeen tabulated gait parameters and the report entries that carry them
TABLE_PARAMETERS = {
    "gait length": ("gait_length",),
    "gait width": ("gait_width",),
    "gait height": ("gait_height",),
    "stride length": ("stride_length",),
    "number of steps": ("n_steps",),
    "cadence": ("cadence",),
    "step time": ("step_time",),
    "stride time": ("stride_time",),
    "swing time": ("swing_time",),
    "standing time": ("standing_time",),
    "single support": ("single_support",),
    "double support": ("double_support",),
    "gait cycle time": ("gait_cycle_time",),
    "ambulation time": ("ambulation_time",),
    "stride velocity": ("stride_velocity",),
    "gait variation": ("variation_gait_length", "variation_stride_velocity"),
    "gait symmetry": ("symmetry_gait_length", "symmetry_stride_velocity"),
}


@dataclass
class GaitReport:
    steps: list
    summary: WalkSummary
    variation: dict
    symmetry: dict
    sync: dict = field(default_factory=dict)
    accuracy: Optional[dict] = None

    @property
    def n_spatial_missing(self) -> int:
        return sum(s.spatial_missing for s in self.steps)

    def walk_values(self) -> dict:
        return {
            "n_steps": self.summary.n_steps,
            "cadence": self.summary.cadence,
            "ambulation_time": self.summary.ambulation_time,
            "variation_gait_length": self.variation["gait_length"],
            "variation_stride_velocity": self.variation["stride_velocity"],
            "symmetry_gait_length": self.symmetry["gait_length"],
            "symmetry_stride_velocity": self.symmetry["stride_velocity"],
        }

    def to_dict(self) -> dict:
        d = {
            "header": {"accuracy_formula": ACCURACY_FORMULA, "units": "m, s, steps/min, %"},
            "summary": _rounded(self.walk_values()),
            "spatial_missing": self.n_spatial_missing,
            "steps": [_rounded(s.as_dict()) for s in self.steps],
            "sync": self.sync,
        }
        if self.accuracy is not None:
            d["accuracy"] = _rounded(self.accuracy)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = ["Gait report", ""]
        for k, v in self.walk_values().items():
            lines.append(f"  {k:<28} {_fmt(v)}")
        lines.append(f"  {'spatial_missing':<28} {self.n_spatial_missing}")
        lines += ["", "Per-step parameters (m, s, m/s)"]
        cols = ("step_index", "foot", "t") + STEP_PARAMS
        widths = [max(len(c), 10) for c in cols]
        lines.append(" ".join(f"{c:>{w}}" for c, w in zip(cols, widths)))
        for s in self.steps:
            lines.append(" ".join(f"{_fmt(getattr(s, c)):>{w}}" for c, w in zip(cols, widths)))
        if self.accuracy is not None:
            lines += ["", f"Accuracy vs truth ({ACCURACY_FORMULA})"]
            for k, v in self.accuracy.items():
                lines.append(f"  {k:<28} {_fmt(v)}")
        return "\n".join(lines) + "\n"


def _rounded(d: dict) -> dict:
    return {k: round(v, 12) if isinstance(v, float) else v for k, v in d.items()}


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


# -- processing ----------------------------------------------------------------

def _match_captures(steps, stereo, offsets) -> dict:
    """Map step index -> stereo observation (same foot, nearest aligned time)."""
    pool = {LEFT: [], RIGHT: []}
    for obs in stereo:
        pool[obs.foot].append((obs.t_device - offsets[obs.foot], obs))
    used, out = set(), {}
    for st in steps:
        best = None
        for t, obs in pool[st.foot]:
            dt = abs(t - st.t)
            if dt <= MATCH_TOL and id(obs) not in used and (best is None or dt < best[0]):
                best = (dt, obs)
        if best is not None:
            used.add(id(best[1]))
            out[st.step_index] = best[1]
    return out


def _spatial(obs, calib: Calibration, cfg: RigConfig, rec: StepRecord) -> None:
    if obs is None or not obs.found:
        rec.spatial_missing = True
        return
    try:
        X = triangulate(calib.rig, PixelPoint(*obs.uv1), PixelPoint(*obs.uv2))
    except (IllConditionedError, CheiralityError):
        rec.spatial_missing = True
        return
    g = to_ground(X, cfg.theta_for(rec.foot))
    rec.gait_length, rec.gait_width, rec.gait_height = gait_vector(
        StepObservation(rec.step_index, rec.foot, g, rec.t), cfg
    )
    rec.negative_length = rec.gait_length < 0


def process(
    log,
    calib: Calibration,
    rig_cfg: Optional[RigConfig] = None,
    temporal_cfg: TemporalConfig = TemporalConfig(),
    truth: Optional[Sequence[StepRecord]] = None,
) -> GaitReport:
    """Turn one observation log into a :class:`GaitReport`.

    Steps whose stereo capture is missing, undetected or degenerate keep
    their temporal fields and are flagged ``spatial_missing``.
    """
    if (log.image_width, log.image_height) != (calib.image_width, calib.image_height):
        raise ConfigError(
            f"observation images are {log.image_width}x{log.image_height} but the calibration "
            f"is for {calib.image_width}x{calib.image_height}"
        )
    cfg = rig_cfg or log.rig_config or RigConfig(theta=calib.theta)
    left = trace_events(log.fsr[LEFT], temporal_cfg)
    right = trace_events(log.fsr[RIGHT], temporal_cfg)
    events = align_streams(left, right, log.sync[LEFT], log.sync[RIGHT])
    tsteps, summary = temporal_params(events)
    steps = [StepRecord.from_temporal(ts) for ts in tsteps]

    offsets = {foot: est.offset_estimate for foot, est in log.sync.items()}
    captures = _match_captures(steps, log.stereo, offsets)
    for rec in steps:
        _spatial(captures.get(rec.step_index), calib, cfg, rec)
    for prev, rec in zip(steps, steps[1:]):
        if prev.negative_length or rec.negative_length:
            continue
        rec.stride_length = stride_length(prev.gait_length, rec.gait_length, cfg.foot_length)
        if rec.stride_length is not None and rec.stride_time is not None:
            rec.stride_velocity = stride_velocity(rec.stride_length, rec.stride_time)

    report = GaitReport(
        steps,
        summary,
        {p: series_cv(steps, p) for p in ("gait_length", "stride_velocity")},
        {p: series_symmetry(steps, p) for p in ("gait_length", "stride_velocity")},
        sync_report(log.sync),
    )
    if truth is not None:
        report.accuracy = corpus_accuracy([(report, truth)])
    return report


# -- accuracy ------------------------------------------------------------------

def accuracy(measured, truth) -> Optional[float]:
    m = np.asarray(measured, dtype=float)
    t = np.asarray(truth, dtype=float)
    if m.size == 0:
        return None
    denom = float(np.mean(t))
    if abs(denom) < 1e-12:
        return None
    return round(100.0 * (1.0 - float(np.mean(np.abs(m - t))) / abs(denom)), 6)


def truth_summary(truth: Sequence[StepRecord]) -> dict:
    """Walk-level values computed from ground-truth steps with the report's formulas."""
    ts = [s.t for s in truth]
    amb = ts[-1] - ts[0] if ts else 0.0
    return {
        "n_steps": len(truth),
        "cadence": 60.0 * (len(ts) - 1) / amb if len(ts) >= 2 and amb > 0 else None,
        "ambulation_time": amb,
        "variation_gait_length": series_cv(truth, "gait_length"),
        "variation_stride_velocity": series_cv(truth, "stride_velocity"),
        "symmetry_gait_length": series_symmetry(truth, "gait_length"),
        "symmetry_stride_velocity": series_symmetry(truth, "stride_velocity"),
    }


def match_steps(measured: Sequence[StepRecord], truth: Sequence[StepRecord]) -> list:
    """Pairs (measured, truth) of the same foot whose heel strikes are within MATCH_TOL."""
    pairs, j = [], 0
    for t in truth:
        while j < len(measured) and measured[j].t < t.t - MATCH_TOL:
            j += 1
        k = j
        while k < len(measured) and measured[k].t <= t.t + MATCH_TOL:
            if measured[k].foot == t.foot:
                pairs.append((measured[k], t))
                j = k + 1
                break
            k += 1
    return pairs


def step_pairs(pairs, param: str) -> tuple[list, list]:
    m, t = [], []
    for a, b in pairs:
        va, vb = getattr(a, param), getattr(b, param)
        if va is not None and vb is not None:
            m.append(va)
            t.append(vb)
    return m, t


def corpus_accuracy(walks) -> dict:
    """Accuracy of every report entry over a corpus of ``(GaitReport, truth_steps)``."""
    pairs = []
    walk_m = {p: [] for p in WALK_PARAMS}
    walk_t = {p: [] for p in WALK_PARAMS}
    for report, truth in walks:
        pairs += match_steps(report.steps, truth)
        mv, tv = report.walk_values(), truth_summary(truth)
        for p in WALK_PARAMS:
            if mv[p] is not None and tv[p] is not None:
                walk_m[p].append(mv[p])
                walk_t[p].append(tv[p])
    out = {p: accuracy(*step_pairs(pairs, p)) for p in STEP_PARAMS}
    out.update({p: accuracy(walk_m[p], walk_t[p]) for p in WALK_PARAMS})
    return out


# -- drift ---------------------------------------------------------------------

@dataclass
class DriftReport:
    k: int
    start: dict
    end: dict
    delta: dict
    mean_drift: float
    profile: list  # mean accuracy over consecutive k-step windows

    @property
    def trend(self) -> Optional[float]:
        """Spearman rank correlation of window accuracy against window position."""
        p = np.asarray(self.profile)
        if p.size < 3 or np.ptp(p) == 0:
            return None
        return round(float(spearmanr(np.arange(p.size), p)[0]), 6)

    @property
    def decline_detected(self) -> bool:
        """Accuracy falls steadily along the walk (rank trend at or below DECLINE_TREND)."""
        t = self.trend
        return t is not None and t <= DECLINE_TREND and self.profile[-1] < self.profile[0]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "start": self.start,
            "end": self.end,
            "delta": self.delta,
            "mean_drift": self.mean_drift,
            "profile": self.profile,
            "trend": self.trend,
            "decline_detected": self.decline_detected,
        }


def _window_accuracy(pairs) -> dict:
    return {p: accuracy(*step_pairs(pairs, p)) for p in STEP_PARAMS}


def drift_study(report: GaitReport, truth: Sequence[StepRecord], k: int = 10) -> DriftReport:
    """Per-parameter accuracy on the first ``k`` vs the last ``k`` steps of a long walk."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(truth) < 2 * k + 20:
        raise ValueError(f"walk has {len(truth)} steps; drift study with k={k} needs {2 * k + 20}")
    pairs = match_steps(report.steps, truth)
    first = [pr for pr in pairs if pr[1].step_index < k]
    last = [pr for pr in pairs if pr[1].step_index >= len(truth) - k]
    start, end = _window_accuracy(first), _window_accuracy(last)
    delta = {
        p: round(end[p] - start[p], 6)
        for p in STEP_PARAMS
        if start[p] is not None and end[p] is not None
    }
    mean_drift = round(float(np.mean([abs(v) for v in delta.values()])), 6) if delta else 0.0

    # windows start at step 3 so every per-step parameter is defined in each one
    profile = []
    for lo in range(3, len(truth) - k + 1, k):
        acc = _window_accuracy([pr for pr in pairs if lo <= pr[1].step_index < lo + k])
        vals = [v for v in acc.values() if v is not None]
        if vals:
            profile.append(round(float(np.mean(vals)), 6))
    return DriftReport(k, start, end, delta, mean_drift, profile)
