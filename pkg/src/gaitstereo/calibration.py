"""Calibration file ingestion and a synthetic checkerboard audit fixture.

Calibration is solved elsewhere; this module only validates and loads the
resulting intrinsics/extrinsics, and audits them by reprojection.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CalibrationError, ParseError
from .geometry import (
    Extrinsics,
    Intrinsics,
    PixelPoint,
    ReprojectionStats,
    StereoRig,
    WorldPoint,
    axis_angle,
    build_rig,
    project_many,
    reprojection_error,
)

FIELDS = (
    "fx1", "fy1", "cx1", "cy1",
    "fx2", "fy2", "cx2", "cy2",
    "R2", "t2", "theta_rad", "image_width", "image_height",
)


@dataclass(frozen=True)
class Calibration:
    rig: StereoRig
    theta: float
    image_width: int
    image_height: int

    def in_frame(self, uv) -> bool:
        u, v = uv
        return 0.0 <= u < self.image_width and 0.0 <= v < self.image_height

    def to_dict(self) -> dict:
        r = self.rig
        return {
            "fx1": r.K1.fx, "fy1": r.K1.fy, "cx1": r.K1.cx, "cy1": r.K1.cy,
            "fx2": r.K2.fx, "fy2": r.K2.fy, "cx2": r.K2.cx, "cy2": r.K2.cy,
            "R2": [float(x) for x in r.R2.ravel()],
            "t2": [float(x) for x in r.t2],
            "theta_rad": self.theta,
            "image_width": self.image_width,
            "image_height": self.image_height,
        }


def default_calibration(
    focal: float = 1400.0,
    baseline: float = 0.06,
    theta: float = 0.2,
    width: int = 1280,
    height: int = 960,
) -> Calibration:
    """Identical level cameras side by side; camera 2 sits ``baseline`` to the right."""
    K = Intrinsics(focal, focal, width / 2.0, height / 2.0)
    rig = build_rig(K, K, Extrinsics(np.eye(3), np.array([-baseline, 0.0, 0.0])))
    return Calibration(rig, theta, width, height)


def _field_line(text: str, name: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(name), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _where(text: str, name: str) -> str:
    line = _field_line(text, name)
    return f"field {name!r}" + (f" (line {line})" if line else "")


def _number(text, data, name, integer=False):
    v = data[name]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"{_where(text, name)}: expected a number, got {v!r}")
    if integer and (not float(v).is_integer() or v <= 0):
        raise ParseError(f"{_where(text, name)}: expected a positive integer, got {v!r}")
    if not np.isfinite(v):
        raise ParseError(f"{_where(text, name)}: not finite")
    return int(v) if integer else float(v)


def _vector(text, data, name, n):
    v = data[name]
    if not isinstance(v, list) or len(v) != n:
        raise ParseError(f"{_where(text, name)}: expected a list of {n} numbers")
    out = []
    for x in v:
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not np.isfinite(x):
            raise ParseError(f"{_where(text, name)}: non-numeric entry {x!r}")
        out.append(float(x))
    return np.array(out)


def parse_calibration(text: str, source: str = "<string>") -> Calibration:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{source}: top level must be an object")
    missing = [f for f in FIELDS if f not in data]
    if missing:
        raise ParseError(f"{source}: missing field(s) {', '.join(missing)}")
    try:
        nums = {f: _number(text, data, f) for f in FIELDS[:8] + ("theta_rad",)}
        width = _number(text, data, "image_width", integer=True)
        height = _number(text, data, "image_height", integer=True)
        R2 = _vector(text, data, "R2", 9).reshape(3, 3)
        t2 = _vector(text, data, "t2", 3)
    except ParseError as exc:
        raise ParseError(f"{source}: {exc}") from None

    def checked(build, name):
        try:
            return build()
        except CalibrationError as exc:
            raise CalibrationError(f"{source}: {_where(text, name)}: {exc}") from None

    K1 = checked(lambda: Intrinsics(nums["fx1"], nums["fy1"], nums["cx1"], nums["cy1"]), "fx1")
    K2 = checked(lambda: Intrinsics(nums["fx2"], nums["fy2"], nums["cx2"], nums["cy2"]), "fx2")
    ext = checked(lambda: Extrinsics(R2, t2), "R2")
    rig = checked(lambda: build_rig(K1, K2, ext), "t2")
    return Calibration(rig, nums["theta_rad"], width, height)


def load_calibration(path) -> Calibration:
    path = Path(path)
    return parse_calibration(path.read_text(encoding="utf-8"), str(path))


def save_calibration(calib: Calibration, path) -> None:
    Path(path).write_text(json.dumps(calib.to_dict(), indent=2) + "\n", encoding="utf-8")


# -- synthetic checkerboard audit ---------------------------------------------

@dataclass
class CheckerboardFixture:
    world_pts: list
    observed: list
    n_poses: int


def checkerboard_fixture(
    calib: Calibration,
    seed: int = 0,
    noise_px: float = 0.25,
    distances=(0.30, 0.45, 0.65),
    n_poses: int = 20,
    corners=(9, 6),
    square: float = 0.02,
) -> CheckerboardFixture:
    """Board corners at several depths/rolls/tilts with Gaussian corner noise.

    Only corners visible in both images are kept.
    """
    rng = np.random.default_rng(seed)
    nx, ny = corners
    gx, gy = np.meshgrid(np.arange(nx) - (nx - 1) / 2, np.arange(ny) - (ny - 1) / 2)
    board = np.column_stack([gx.ravel() * square, gy.ravel() * square, np.zeros(nx * ny)])
    rolls = (0.0, np.pi / 2, -np.pi / 2)
    centre_x = calib.rig.baseline / 2  # aim between the two cameras
    world, observed = [], []
    for i in range(n_poses):
        depth = distances[i % len(distances)]
        R = (
            axis_angle([0, 0, 1], rolls[(i // len(distances)) % len(rolls)])
            @ axis_angle([1, 0, 0], rng.uniform(-0.35, 0.35))
            @ axis_angle([0, 1, 0], rng.uniform(-0.35, 0.35))
        )
        offset = np.array([centre_x + rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02), depth])
        pts = board @ R.T + offset
        uv1 = project_many(calib.rig.P1, pts)
        uv2 = project_many(calib.rig.P2, pts)
        uv1 = uv1 + rng.normal(0.0, noise_px, uv1.shape)
        uv2 = uv2 + rng.normal(0.0, noise_px, uv2.shape)
        for p, a, b in zip(pts, uv1, uv2):
            if calib.in_frame(a) and calib.in_frame(b):
                world.append(WorldPoint.from_array(p))
                observed.append((PixelPoint(*a), PixelPoint(*b)))
    return CheckerboardFixture(world, observed, n_poses)


def audit(calib: Calibration, fixture: CheckerboardFixture) -> ReprojectionStats:
    return reprojection_error(calib.rig, fixture.world_pts, fixture.observed)
