import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaitstereo.calibration import default_calibration
from gaitstereo.errors import CalibrationError, IllConditionedError, PointAtInfinityError
from gaitstereo.geometry import (
    CAMERA,
    GROUND,
    Extrinsics,
    Intrinsics,
    PixelPoint,
    WorldPoint,
    axis_angle,
    build_rig,
    dlt_matrix,
    dlt_solve,
    from_ground,
    project,
    reprojection_error,
    rotate_ground,
    to_ground,
    triangulate,
)

K600 = Intrinsics(600, 600, 320, 240)


def rig600(baseline=0.06):
    return build_rig(K600, K600, Extrinsics(np.eye(3), [-baseline, 0, 0]))


def test_build_rig_baseline_and_projection_matrices():
    rig = rig600()
    assert rig.baseline == pytest.approx(0.06, abs=1e-12)
    expected = K600.K @ np.hstack([np.eye(3), np.array([[-0.06], [0], [0]])])
    assert np.max(np.abs(rig.P2 - expected)) < 1e-12
    assert np.max(np.abs(rig.P1 - K600.K @ np.hstack([np.eye(3), np.zeros((3, 1))]))) < 1e-12


def test_build_rig_rejects_zero_baseline():
    with pytest.raises(CalibrationError):
        build_rig(K600, K600, Extrinsics(np.eye(3), [0, 0, 0]))


@pytest.mark.parametrize(
    "bad",
    [
        dict(fx=0, fy=600, cx=320, cy=240),
        dict(fx=600, fy=-1, cx=320, cy=240),
        dict(fx=np.nan, fy=600, cx=320, cy=240),
        dict(fx=600, fy=600, cx=320, cy=240, skew=1.0),
    ],
)
def test_intrinsics_validation(bad):
    with pytest.raises(CalibrationError):
        Intrinsics(**bad)


def test_extrinsics_rejects_non_rotation():
    with pytest.raises(CalibrationError):
        Extrinsics(np.diag([1.0, 1.0, -1.0]), [0.1, 0, 0])
    with pytest.raises(CalibrationError):
        Extrinsics(np.eye(3) * 1.01, [0.1, 0, 0])


def test_project_principal_point_and_offset():
    P = rig600().P1
    assert project(P, WorldPoint(0, 0, 1)) == PixelPoint(320.0, 240.0)
    p = project(P, WorldPoint(0.1, 0, 1))
    assert p.u == pytest.approx(380.0, abs=1e-12) and p.v == pytest.approx(240.0, abs=1e-12)


def test_project_point_at_infinity():
    with pytest.raises(PointAtInfinityError):
        project(rig600().P1, WorldPoint(0.1, 0.0, 0.0))


def test_triangulate_round_trip_exact():
    rig = rig600()
    X = np.array([0.05, -0.02, 0.5])
    got = triangulate(rig, project(rig.P1, X), project(rig.P2, X))
    assert got.frame == CAMERA
    assert np.max(np.abs(got.xyz - X)) < 1e-9


def test_triangulate_parallel_rays_ill_conditioned():
    rig = rig600()
    # identical pixels in both cameras: rays are parallel (point at infinity)
    with pytest.raises(IllConditionedError):
        triangulate(rig, PixelPoint(320, 240), PixelPoint(320, 240))


def _depth_error_p95(rig, depth, sigma, n=2000, seed=0):
    rng = np.random.default_rng(seed)
    errs = []
    for _ in range(n):
        X = np.array([rng.uniform(-0.05, 0.05), rng.uniform(-0.03, 0.03), depth])
        o1 = np.array([project(rig.P1, X).u, project(rig.P1, X).v]) + rng.normal(0, sigma, 2)
        o2 = np.array([project(rig.P2, X).u, project(rig.P2, X).v]) + rng.normal(0, sigma, 2)
        errs.append(np.linalg.norm(triangulate(rig, o1, o2).xyz - X))
    return float(np.percentile(errs, 95))


def test_triangulation_noise_band_default_rig():
    # Monte-Carlo oracle at 0.45 m, 0.5 px: the shipped rig (f=1400 px, 6 cm) stays under 5 mm.
    p95 = _depth_error_p95(default_calibration().rig, 0.45, 0.5)
    assert p95 < 5e-3


def test_triangulation_noise_band_short_focal_rig():
    # The 600 px rig has ~2.3x the depth error; its frozen oracle bound is 1 cm.
    p95 = _depth_error_p95(rig600(), 0.45, 0.5)
    assert 5e-3 < p95 < 1e-2


def test_to_ground_quarter_turn():
    # camera (0,0,1) is 1 m straight ahead: level (1,0,0), then a quarter turn -> (0,1,0)
    g = to_ground(WorldPoint(0, 0, 1), np.pi / 2)
    assert g.frame == GROUND
    assert np.allclose(g.xyz, [0, 1, 0], atol=1e-12)


def test_to_ground_zero_theta_is_axis_relabel_only():
    g = to_ground(WorldPoint(0.1, 0.2, 0.5), 0.0)
    assert np.allclose(g.xyz, [0.5, -0.1, -0.2], atol=1e-15)


def test_frame_label_checks():
    with pytest.raises(ValueError):
        to_ground(WorldPoint(0, 0, 1, GROUND), 0.1)
    with pytest.raises(ValueError):
        from_ground(WorldPoint(0, 0, 1, CAMERA), 0.1)
    with pytest.raises(ValueError):
        WorldPoint(0, 0, 0, "sky")


def test_reprojection_error_known_offset():
    rig = rig600()
    X = WorldPoint(0.0, 0.0, 1.0)
    p1, p2 = project(rig.P1, X), project(rig.P2, X)
    obs = [(PixelPoint(p1.u + 0.3, p1.v + 0.4), p2)]
    stats = reprojection_error(rig, [X], obs)
    assert stats.max == pytest.approx(0.5, abs=1e-12)
    assert stats.rms == pytest.approx(np.sqrt(0.25 / 2), abs=1e-12)


# -- properties ------------------------------------------------------------------

coords = st.tuples(
    st.floats(-0.15, 0.15), st.floats(-0.1, 0.1), st.floats(0.2, 1.0)
)
angles = st.floats(-np.pi, np.pi)


@given(coords)
def test_triangulate_project_round_trip(X):
    rig = default_calibration().rig
    X = np.array(X)
    got = triangulate(rig, project(rig.P1, X), project(rig.P2, X))
    assert np.max(np.abs(got.xyz - X)) < 1e-9


@given(coords, st.floats(0.01, 100.0))
def test_homogeneous_scale_invariance(X, w):
    rig = default_calibration().rig
    X = np.array(X)
    p1, p2 = project(rig.P1, X), project(rig.P2, X)
    a = triangulate(rig, p1, p2).xyz
    b = triangulate(rig, w * p1.homogeneous(), w * p2.homogeneous()).xyz
    assert np.max(np.abs(a - b)) < 1e-9


@given(coords)
def test_dlt_null_vector_residual(X):
    rig = default_calibration().rig
    X = np.array(X)
    A = dlt_matrix(rig.P1, rig.P2, project(rig.P1, X), project(rig.P2, X))
    v, s = dlt_solve(A)
    assert abs(np.linalg.norm(v) - 1.0) < 1e-12
    assert np.linalg.norm(A @ v) <= s[0] * 1e-12 + 1e-12


@given(coords, angles)
def test_to_ground_inverse(X, theta):
    W = WorldPoint.from_array(X)
    back = from_ground(to_ground(W, theta), theta)
    assert np.max(np.abs(back.xyz - W.xyz)) < 1e-12


@given(coords, angles)
def test_to_ground_preserves_norm_and_height(X, theta):
    g = to_ground(WorldPoint.from_array(X), theta)
    assert abs(np.linalg.norm(g.xyz) - np.linalg.norm(X)) < 1e-12
    assert g.z == pytest.approx(-X[1], abs=1e-15)


@given(coords, angles, angles)
def test_yaw_rotations_compose(X, a, b):
    g = to_ground(WorldPoint.from_array(X), a)
    assert np.allclose(rotate_ground(g, b).xyz, to_ground(WorldPoint.from_array(X), a + b).xyz, atol=1e-12)


@given(st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)), angles)
def test_axis_angle_is_rotation(axis, angle):
    if np.linalg.norm(axis) < 1e-3:
        return
    R = axis_angle(axis, angle)
    assert np.max(np.abs(R.T @ R - np.eye(3))) < 1e-12
    assert abs(np.linalg.det(R) - 1) < 1e-12
