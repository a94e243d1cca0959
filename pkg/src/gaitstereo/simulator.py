"""Synthetic walker: ground-truth gait plus the sensor observations it produces.

Wearable geometry: each shoe carries a stereo rig whose reference point sits
on the shoe midline at mid-foot (``foot_length / 2`` ahead of the heel), at a
fixed height, level, yawed by the mounting angle.  The marker is on the toe
tip.  At the heel strike of foot F the rig on F images the marker of the
trailing foot, so with

    heel_k = heel_{k-1} + gait_length_k + foot_length / 2

(along the route) the heel-to-heel stride of one foot equals two
consecutive gait lengths plus one foot length.

Times are generated on the FSR polling grid (integer sample indices), so a
noiseless pipeline can recover them to floating-point precision.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .calibration import Calibration
from .geometry import GROUND, WorldPoint, from_ground, project
from .spatial import RigConfig, StepRecord
from .sync import ClockModel, estimate_offset
from .temporal import LEFT, RIGHT, FsrTrace

PERIOD = 1e-3  # FSR polling period, s
LEAD_IN = 1.0  # s before the first heel strike
TAIL = 1.0  # s after the last heel strike
HEADING_CHORD = 0.4  # m, half-chord used to smooth the route tangent
PARAMS = ("gait_length", "gait_width", "gait_height", "stride_time")


@dataclass(frozen=True)
class WalkerConfig:
    gait_length_mean: float = 0.55
    gait_length_sd: float = 0.02
    gait_width_mean: float = 0.10
    gait_width_sd: float = 0.01
    gait_height_mean: float = 0.03
    gait_height_sd: float = 0.005
    standing_fraction: float = 0.6
    stride_time_mean: float = 1.1
    stride_time_sd: float = 0.03
    foot_length: float = 0.27
    asymmetry: dict = field(default_factory=lambda: {"gait_length": 0.05})
    route: tuple = ((0.0, 0.0), (7.0, 0.0))
    seed: int = 0
    camera_height: float = 0.03
    marker_height: float = 0.02

    def __post_init__(self):
        for name in ("gait_length_mean", "gait_width_mean", "stride_time_mean", "foot_length"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.gait_height_mean < 0:
            raise ValueError("gait_height_mean must be >= 0")
        for name in ("gait_length_sd", "gait_width_sd", "gait_height_sd", "stride_time_sd"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.5 < self.standing_fraction < 1:
            raise ValueError("standing_fraction must be in (0.5, 1) for walking gait")
        unknown = set(self.asymmetry) - set(PARAMS)
        if unknown:
            raise ValueError(f"unknown asymmetry keys {sorted(unknown)}")
        if len(self.route) < 2:
            raise ValueError("route needs at least two waypoints")

    @property
    def height_offset(self) -> float:
        """Camera height above the resting marker (the rig's initial height offset)."""
        return self.camera_height - self.marker_height

    def rig_config(self, theta: float) -> RigConfig:
        return RigConfig(self.foot_length, self.height_offset, theta)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["route"] = [list(p) for p in self.route]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "WalkerConfig":
        d = dict(d)
        if "route" in d:
            d["route"] = tuple(tuple(float(v) for v in p) for p in d["route"])
        return cls(**d)


@dataclass(frozen=True)
class NoiseModel:
    pixel_sigma: float = 0.0
    clock_jitter_sigma: float = 0.0
    fsr_double_trigger_prob: float = 0.0
    marker_miss_prob: float = 0.0
    clock_offset_left: float = 0.0
    clock_offset_right: float = 0.0
    sync_probes: int = 64
    yaw_drift_per_step: float = 0.0  # rad per heel strike, injected rig fault

    def __post_init__(self):
        for name in ("pixel_sigma", "clock_jitter_sigma", "fsr_double_trigger_prob", "marker_miss_prob"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("fsr_double_trigger_prob", "marker_miss_prob"):
            if getattr(self, name) > 1:
                raise ValueError(f"{name} must be <= 1")

    def clock_offset(self, foot: str) -> float:
        return self.clock_offset_left if foot == LEFT else self.clock_offset_right


@dataclass
class Footfall:
    foot: str
    heel_pos: np.ndarray
    tip_pos: np.ndarray
    heading: float
    hs_index: Optional[int]  # FSR sample index of the heel strike (None: initial stance)
    lift_index: Optional[int]  # None while still in contact at trace end

    @property
    def heel_strike_t(self) -> Optional[float]:
        return None if self.hs_index is None else self.hs_index * PERIOD

    @property
    def lift_t(self) -> Optional[float]:
        return None if self.lift_index is None else self.lift_index * PERIOD


@dataclass
class MarkerView:
    """Pose of the striking foot's rig and the marker it sees at one heel strike."""

    camera_pos: np.ndarray
    axes: np.ndarray  # rows: walkway, lateral, up (ground frame of the striking foot)
    marker_pos: np.ndarray

    def marker_ground(self) -> np.ndarray:
        return self.axes @ (self.marker_pos - self.camera_pos)


@dataclass
class WalkTrace:
    config: WalkerConfig
    initial: Footfall
    footfalls: list
    marker_path: list  # one MarkerView per footfall
    true_steps: list
    n_samples: int


@dataclass
class StereoObservation:
    capture_index: int
    foot: str
    t_device: float
    uv1: Optional[tuple]
    uv2: Optional[tuple]

    @property
    def found(self) -> bool:
        return self.uv1 is not None


@dataclass
class ObservationLog:
    fsr: dict  # foot -> FsrTrace (device clock)
    stereo: list
    sync: dict  # foot -> SyncEstimate
    image_width: int
    image_height: int
    seed: int = 0
    rig_config: Optional[RigConfig] = None


# -- route ---------------------------------------------------------------------

class Route:
    def __init__(self, waypoints):
        pts = np.asarray(waypoints, dtype=float)
        seg = np.diff(pts, axis=0)
        lengths = np.linalg.norm(seg, axis=1)
        if np.any(lengths <= 0):
            raise ValueError("route has repeated waypoints")
        self.pts = pts
        self.dirs = seg / lengths[:, None]
        self.cum = np.concatenate([[0.0], np.cumsum(lengths)])
        self.length = float(self.cum[-1])

    def point(self, s: float) -> np.ndarray:
        s = min(max(s, 0.0), self.length)
        i = min(int(np.searchsorted(self.cum, s, side="right")) - 1, len(self.dirs) - 1)
        return self.pts[i] + (s - self.cum[i]) * self.dirs[i]

    def heading(self, s: float) -> float:
        a = self.point(max(s - HEADING_CHORD, 0.0))
        b = self.point(min(s + HEADING_CHORD, self.length))
        d = b - a
        return float(np.arctan2(d[1], d[0]))


def _unit(h):
    return np.array([np.cos(h), np.sin(h), 0.0])


def _left_normal(h):
    return np.array([-np.sin(h), np.cos(h), 0.0])


def _truncated(rng, mean, sd, n):
    z = rng.standard_normal(n)
    bad = np.abs(z) > 3
    while bad.any():
        z[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(z) > 3
    return mean + sd * z


def _biased(cfg: WalkerConfig, name: str, foot: str) -> float:
    a = cfg.asymmetry.get(name, 0.0)
    return getattr(cfg, f"{name}_mean") * (1 + a / 2 if foot == LEFT else 1 - a / 2)


def _draw(rng, cfg, name, feet):
    sd = getattr(cfg, f"{name}_sd")
    out = np.empty(len(feet))
    for foot in (LEFT, RIGHT):
        idx = [i for i, f in enumerate(feet) if f == foot]
        out[idx] = _truncated(rng, _biased(cfg, name, foot), sd, len(idx))
    return out


def _frame_axes(heading: float) -> np.ndarray:
    x = -_unit(heading)
    z = np.array([0.0, 0.0, 1.0])
    return np.vstack([x, np.cross(z, x), z])


def simulate_walk(cfg: WalkerConfig) -> WalkTrace:
    route = Route(cfg.route)
    L = cfg.foot_length
    if route.length < cfg.gait_length_mean + L / 2:
        raise ValueError("route shorter than one gait length")
    rng = np.random.default_rng(cfg.seed)

    max_n = int(route.length / (0.5 * cfg.gait_length_mean + L / 2)) + 4
    feet = [LEFT if k % 2 == 0 else RIGHT for k in range(max_n)]
    # index -1 is the initial standing foot (right)
    all_feet = [RIGHT] + feet
    g = _draw(rng, cfg, "gait_length", feet)
    half_w = _draw(rng, cfg, "gait_width", all_feet) / 2
    clear = _draw(rng, cfg, "gait_height", all_feet)
    T = _draw(rng, cfg, "stride_time", feet + [LEFT, RIGHT])

    s = [0.0]
    for k in range(max_n):
        nxt = s[-1] + g[k] + L / 2
        if nxt > route.length:
            break
        s.append(nxt)
    s = np.array(s)
    n = len(s) - 1
    if n < 2:
        raise ValueError("route too short for two footfalls")

    # heel-strike sample indices; step interval = half the foot's stride draw
    hs = np.empty(n + 2, dtype=np.int64)
    hs[0] = round(LEAD_IN / PERIOD)
    for k in range(1, n + 2):
        hs[k] = hs[k - 1] + max(int(round(T[k] / 2 / PERIOD)), 1)
    lift = [
        int(hs[k] + round(cfg.standing_fraction * (hs[k + 2] - hs[k]))) if k < n - 2 else None
        for k in range(n)
    ]
    init_lift = int(hs[1] - round((1 - cfg.standing_fraction) * 2 * (hs[1] - hs[0])))

    def place(j, foot, hs_idx, lift_idx):
        sj = s[j]
        h = route.heading(sj)
        side = 1.0 if foot == LEFT else -1.0
        heel = np.append(route.point(sj), 0.0) + side * half_w[j] * _left_normal(h)
        return Footfall(foot, heel, heel + L * _unit(h), h, hs_idx, lift_idx)

    initial = place(0, RIGHT, None, init_lift)
    footfalls = [place(k + 1, feet[k], int(hs[k]), lift[k]) for k in range(n)]

    views = []
    for k, ff in enumerate(footfalls):
        prev = initial if k == 0 else footfalls[k - 1]
        cam = ff.heel_pos + (L / 2) * _unit(ff.heading) + np.array([0, 0, cfg.camera_height])
        mk = prev.tip_pos + np.array([0, 0, cfg.marker_height + clear[k]])
        views.append(MarkerView(cam, _frame_axes(ff.heading), mk))

    end = int(hs[n - 1] + round(TAIL / PERIOD))
    true_steps = _truth(cfg, footfalls, views)
    return WalkTrace(cfg, initial, footfalls, views, true_steps, end + 1)


def _truth(cfg: WalkerConfig, footfalls, views) -> list:
    """Ground-truth step records straight from the generated geometry and timing."""
    steps = []
    off = cfg.height_offset
    for k, (ff, view) in enumerate(zip(footfalls, views)):
        x, y, z = view.marker_ground()
        rec = StepRecord(k, ff.foot, ff.heel_strike_t)
        rec.gait_length, rec.gait_width, rec.gait_height = float(x), float(abs(y)), float(z + off)
        if k >= 1:
            rec.step_time = ff.heel_strike_t - footfalls[k - 1].heel_strike_t
            rec.stride_length = steps[k - 1].gait_length + rec.gait_length + cfg.foot_length
        if k >= 2:
            pre = footfalls[k - 2]
            rec.stride_time = ff.heel_strike_t - pre.heel_strike_t
            rec.gait_cycle_time = rec.stride_time
            rec.standing_time = pre.lift_t - pre.heel_strike_t
            rec.swing_time = ff.heel_strike_t - pre.lift_t
            rec.stride_velocity = rec.stride_length / rec.stride_time
        if k >= 3:
            rec.single_support = steps[k - 1].swing_time
            rec.double_support = rec.step_time - steps[k - 1].swing_time
        steps.append(rec)
    return steps


# -- observation ---------------------------------------------------------------

def _foot_contact(trace: WalkTrace, foot: str, jit) -> tuple[np.ndarray, list]:
    """Contact samples for one foot plus the sample indices of every rising edge."""
    c = np.zeros(trace.n_samples, dtype=bool)
    if trace.initial.foot == foot:
        c[: jit(trace.initial.lift_index)] = True
    elif trace.footfalls:
        # the first stepping foot stands until it lifts one swing before its heel strike
        first = trace.footfalls[0]
        swing = int(round((1 - trace.config.standing_fraction) * 2 * (
            trace.footfalls[1].hs_index - first.hs_index)))
        c[: jit(first.hs_index - swing)] = True
    edges = []
    for k, ff in enumerate(trace.footfalls):
        if ff.foot != foot:
            continue
        a = jit(ff.hs_index)
        b = trace.n_samples if ff.lift_index is None else jit(ff.lift_index)
        c[a:b] = True
        edges.append((k, a))
    return c, edges


def observe(
    trace: WalkTrace,
    calib: Calibration,
    cfg: RigConfig,
    noise: NoiseModel = NoiseModel(),
    seed: Optional[int] = None,
) -> ObservationLog:
    """Sensor observations of a walk: FSR traces, stereo pixel pairs, sync estimates."""
    seed = trace.config.seed if seed is None else seed
    rng = np.random.default_rng([seed, 1])

    def jit(idx):
        if noise.clock_jitter_sigma <= 0:
            return int(idx)
        return int(idx + round(rng.normal(0.0, noise.clock_jitter_sigma) / PERIOD))

    # captures: (foot, footfall index, sample index of the triggering rising edge)
    fsr, sync, captures = {}, {}, []
    for foot in (LEFT, RIGHT):
        contact, edges = _foot_contact(trace, foot, jit)
        for k, a in edges:
            captures.append((foot, k, a))
            if noise.fsr_double_trigger_prob > 0 and rng.random() < noise.fsr_double_trigger_prob:
                start = a + int(rng.integers(5, 30))
                width = int(rng.integers(5, 30))
                contact[start:start + width] = False
                captures.append((foot, k, start + width))
        off = noise.clock_offset(foot)
        t_dev = off + np.arange(trace.n_samples) * PERIOD
        fsr[foot] = FsrTrace(foot, t_dev, contact)
        clock = ClockModel(off, 0.0, noise.clock_jitter_sigma)
        sync[foot] = estimate_offset(clock, noise.sync_probes, seed=int(rng.integers(2**31)))

    stereo = []
    for n, (foot, k, b) in enumerate(sorted(captures, key=lambda c: (c[2], c[0]))):
        uv = _pixels(trace, calib, cfg, noise, rng, k)
        t_dev = noise.clock_offset(foot) + b * PERIOD
        stereo.append(StereoObservation(n, foot, t_dev, *(uv if uv else (None, None))))
    return ObservationLog(fsr, stereo, sync, calib.image_width, calib.image_height, seed, cfg)


def _pixels(trace, calib, cfg, noise, rng, k):
    view = trace.marker_path[k]
    foot = trace.footfalls[k].foot
    theta = cfg.theta_for(foot) + noise.yaw_drift_per_step * k
    Xc = from_ground(WorldPoint.from_array(view.marker_ground(), GROUND), theta)
    if Xc.z <= 0:
        return None
    p1, p2 = project(calib.rig.P1, Xc), project(calib.rig.P2, Xc)
    uv1 = np.array([p1.u, p1.v])
    uv2 = np.array([p2.u, p2.v])
    if noise.pixel_sigma > 0:
        uv1 = uv1 + rng.normal(0.0, noise.pixel_sigma, 2)
        uv2 = uv2 + rng.normal(0.0, noise.pixel_sigma, 2)
    if not (calib.in_frame(uv1) and calib.in_frame(uv2)):
        return None
    if noise.marker_miss_prob > 0 and rng.random() < noise.marker_miss_prob:
        return None
    return (float(uv1[0]), float(uv1[1])), (float(uv2[0]), float(uv2[1]))


# -- personas ------------------------------------------------------------------

def loop_route(scale: float = 1.0) -> tuple:
    """L-shaped closed loop with six corners."""
    pts = [(0, 0), (25, 0), (25, 10), (12, 10), (12, 20), (0, 20), (0, 0)]
    return tuple((x * scale, y * scale) for x, y in pts)


def default_personas(route=None) -> list:
    """Six synthetic walkers with means at least 1.5 pooled sd apart in some parameter."""
    route = route or loop_route()
    means = [
        # length, width, height, stride time, asymmetry(length)
        (0.50, 0.08, 0.025, 1.02, 0.03),
        (0.56, 0.12, 0.035, 1.10, 0.06),
        (0.62, 0.09, 0.030, 1.18, 0.04),
        (0.53, 0.14, 0.040, 1.20, 0.08),
        (0.59, 0.07, 0.045, 1.05, 0.05),
        (0.65, 0.11, 0.028, 1.12, 0.02),
    ]
    return [
        WalkerConfig(
            gait_length_mean=gl, gait_length_sd=0.02,
            gait_width_mean=gw, gait_width_sd=0.01,
            gait_height_mean=gh, gait_height_sd=0.005,
            stride_time_mean=st, stride_time_sd=0.03,
            asymmetry={"gait_length": asym},
            route=route,
        )
        for gl, gw, gh, st, asym in means
    ]
