"""Pinhole/stereo camera model, DLT triangulation and the ground transform.

Frame conventions (the only place they are defined):

* reference camera frame: ``x`` image-right, ``y`` image-down, ``z`` along the
  optical axis;
* ground frame of the striking foot: ``x`` along the walkway (pointing from
  the camera toward the trailing shoe), ``y`` lateral, ``z`` height (up).

A level camera point ``(x, y, z)`` is relabelled to ``(z, -x, -y)`` and the
horizontal pair is then rotated by the mounting yaw ``theta``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    CalibrationError,
    CheiralityError,
    IllConditionedError,
    PointAtInfinityError,
)

ORTHO_TOL = 1e-9
MIN_RAY_ANGLE = 1e-4  # rad
W_EPS = 1e-12

CAMERA = "camera"
GROUND = "ground"


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    skew: float = 0.0

    def __post_init__(self):
        vals = (self.fx, self.fy, self.cx, self.cy)
        if not all(np.isfinite(v) for v in vals):
            raise CalibrationError(f"non-finite intrinsics: {vals}")
        if self.fx <= 0 or self.fy <= 0:
            raise CalibrationError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if self.skew != 0:
            raise CalibrationError("skew must be 0")

    @property
    def K(self) -> np.ndarray:
        return np.array(
            [[self.fx, self.skew, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )


@dataclass(frozen=True, eq=False)
class Extrinsics:
    """Pose of a camera relative to the reference camera (``X2 = R X1 + t``)."""

    R: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float).reshape(3, 3)
        t = np.asarray(self.t, dtype=float).reshape(3)
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t))):
            raise CalibrationError("non-finite extrinsics")
        if np.max(np.abs(R.T @ R - np.eye(3))) > ORTHO_TOL:
            raise CalibrationError("rotation matrix is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > ORTHO_TOL:
            raise CalibrationError("rotation matrix must have det = +1")
        R.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)


@dataclass(frozen=True)
class PixelPoint:
    u: float
    v: float

    def homogeneous(self) -> np.ndarray:
        return np.array([self.u, self.v, 1.0])


@dataclass(frozen=True)
class WorldPoint:
    x: float
    y: float
    z: float
    frame: str = CAMERA

    def __post_init__(self):
        if self.frame not in (CAMERA, GROUND):
            raise ValueError(f"unknown frame label {self.frame!r}")

    @property
    def xyz(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @classmethod
    def from_array(cls, a, frame: str = CAMERA) -> "WorldPoint":
        return cls(float(a[0]), float(a[1]), float(a[2]), frame)


@dataclass(frozen=True, eq=False)
class StereoRig:
    K1: Intrinsics
    K2: Intrinsics
    ext2: Extrinsics
    P1: np.ndarray = field(repr=False)
    P2: np.ndarray = field(repr=False)
    baseline: float = 0.0

    @property
    def R2(self) -> np.ndarray:
        return self.ext2.R

    @property
    def t2(self) -> np.ndarray:
        return self.ext2.t


class ReprojectionStats(NamedTuple):
    rms: float
    max: float


def axis_angle(axis, angle: float) -> np.ndarray:
    """Rotation matrix from an axis and an angle (Rodrigues)."""
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    Kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle) * Kx + (1 - np.cos(angle)) * (Kx @ Kx)


def build_rig(K1: Intrinsics, K2: Intrinsics, ext2: Extrinsics) -> StereoRig:
    """Compose ``P1 = K1 [I|0]`` and ``P2 = K2 [R2|t2]``."""
    P1 = K1.K @ np.hstack([np.eye(3), np.zeros((3, 1))])
    P2 = K2.K @ np.hstack([ext2.R, ext2.t.reshape(3, 1)])
    baseline = float(np.linalg.norm(-ext2.R.T @ ext2.t))
    if baseline <= 0:
        raise CalibrationError("zero stereo baseline")
    P1.flags.writeable = False
    P2.flags.writeable = False
    return StereoRig(K1, K2, ext2, P1, P2, baseline)


def project(P: np.ndarray, X) -> PixelPoint:
    """Project a world point through a 3x4 camera matrix and dehomogenize."""
    xyz = X.xyz if isinstance(X, WorldPoint) else np.asarray(X, dtype=float)[:3]
    x = P @ np.append(xyz, 1.0)
    if abs(x[2]) < W_EPS:
        raise PointAtInfinityError(f"point {xyz} projects to infinity")
    return PixelPoint(float(x[0] / x[2]), float(x[1] / x[2]))


def project_many(P: np.ndarray, xyz: np.ndarray) -> np.ndarray:
    """Vectorised :func:`project` for an ``(N, 3)`` array; returns ``(N, 2)``."""
    xyz = np.atleast_2d(np.asarray(xyz, dtype=float))
    h = xyz @ P[:, :3].T + P[:, 3]
    if np.any(np.abs(h[:, 2]) < W_EPS):
        raise PointAtInfinityError("point projects to infinity")
    return h[:, :2] / h[:, 2:3]


def _homog(o) -> np.ndarray:
    if isinstance(o, PixelPoint):
        return o.homogeneous()
    o = np.asarray(o, dtype=float)
    return o if o.shape == (3,) else np.array([o[0], o[1], 1.0])


def dlt_matrix(P1: np.ndarray, P2: np.ndarray, o1, o2) -> np.ndarray:
    """Stack the four cross-product constraints into the 4x4 system ``A X = 0``.

    Pixel points may be given homogeneously; with ``o = (x, y, 1)`` the rows
    are exactly ``x P^3 - P^1`` and ``y P^3 - P^2``.
    """
    a1, a2 = _homog(o1), _homog(o2)
    return np.vstack(
        [
            a1[0] * P1[2] - a1[2] * P1[0],
            a1[1] * P1[2] - a1[2] * P1[1],
            a2[0] * P2[2] - a2[2] * P2[0],
            a2[1] * P2[2] - a2[2] * P2[1],
        ]
    )


def dlt_solve(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unit-norm least-squares null vector of ``A`` and its singular values."""
    _, s, Vt = np.linalg.svd(A)
    return Vt[-1], s


def ray_angle(rig: StereoRig, o1, o2) -> float:
    """Angle between the two back-projected viewing rays (reference frame)."""
    d1 = np.linalg.solve(rig.K1.K, _homog(o1))
    d2 = rig.R2.T @ np.linalg.solve(rig.K2.K, _homog(o2))
    c = np.dot(d1, d2) / (np.linalg.norm(d1) * np.linalg.norm(d2))
    return float(np.arccos(np.clip(abs(c), -1.0, 1.0)))


def triangulate(rig: StereoRig, o1, o2, min_angle: float = MIN_RAY_ANGLE) -> WorldPoint:
    """Recover the 3D point seen at ``o1`` / ``o2`` in the reference-camera frame."""
    angle = ray_angle(rig, o1, o2)
    if angle < min_angle:
        raise IllConditionedError(f"rays nearly parallel (angle {angle:.3g} rad)")
    Xh, _ = dlt_solve(dlt_matrix(rig.P1, rig.P2, o1, o2))
    if abs(Xh[3]) < W_EPS:
        raise IllConditionedError("triangulated point at infinity")
    X = Xh[:3] / Xh[3]
    if X[2] <= 0:
        raise CheiralityError(f"point behind reference camera (z={X[2]:.4g})")
    return WorldPoint.from_array(X, CAMERA)


def camera_to_level(xyz) -> np.ndarray:
    """Relabel camera axes to (walkway, lateral, height) before the yaw rotation."""
    x, y, z = np.asarray(xyz, dtype=float)
    return np.array([z, -x, -y])


def level_to_camera(g) -> np.ndarray:
    a, b, c = np.asarray(g, dtype=float)
    return np.array([-b, -c, a])


def _rot2(v, theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]])


def to_ground(X: WorldPoint, theta: float) -> WorldPoint:
    """Camera-frame point to the ground frame of the striking foot.

    The horizontal (walkway, lateral) pair is rotated by ``theta``, the angle
    between the camera's line of sight and the walking direction; height is
    untouched.
    """
    if X.frame != CAMERA:
        raise ValueError("to_ground expects a camera-frame point")
    return WorldPoint.from_array(_rot2(camera_to_level(X.xyz), theta), GROUND)


def rotate_ground(X: WorldPoint, theta: float) -> WorldPoint:
    """Apply only the yaw rotation to a ground-frame point."""
    return WorldPoint.from_array(_rot2(X.xyz, theta), X.frame)


def from_ground(X: WorldPoint, theta: float) -> WorldPoint:
    """Inverse of :func:`to_ground`."""
    if X.frame != GROUND:
        raise ValueError("from_ground expects a ground-frame point")
    return WorldPoint.from_array(level_to_camera(_rot2(X.xyz, -theta)), CAMERA)


def reprojection_error(
    rig: StereoRig,
    world_pts: Sequence,
    observed: Sequence,
) -> ReprojectionStats:
    """RMS and max pixel distance between observations and reprojections.

    ``observed[j]`` is the ``(camera-1, camera-2)`` pixel pair for
    ``world_pts[j]``.
    """
    if len(world_pts) == 0 or len(world_pts) != len(observed):
        raise ValueError("need equal, non-empty lists of world points and observations")
    xyz = np.array([p.xyz if isinstance(p, WorldPoint) else p for p in world_pts], dtype=float)
    obs = np.array(
        [[[q.u, q.v] if isinstance(q, PixelPoint) else q for q in pair] for pair in observed],
        dtype=float,
    )
    d1 = np.linalg.norm(project_many(rig.P1, xyz) - obs[:, 0], axis=1)
    d2 = np.linalg.norm(project_many(rig.P2, xyz) - obs[:, 1], axis=1)
    d = np.concatenate([d1, d2])
    return ReprojectionStats(float(np.sqrt(np.mean(d**2))), float(d.max()))
