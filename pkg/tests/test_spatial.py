import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from gaitstereo.errors import UndefinedStatisticError
from gaitstereo.geometry import CAMERA, GROUND, WorldPoint
from gaitstereo.spatial import (
    RigConfig,
    StepObservation,
    StepRecord,
    coefficient_of_variation,
    gait_vector,
    series_cv,
    series_symmetry,
    stride_length,
    stride_velocity,
    symmetry,
)
from gaitstereo.temporal import LEFT, RIGHT


def obs(x, y, z):
    return StepObservation(0, LEFT, WorldPoint(x, y, z, GROUND), 0.0)


def test_gait_vector_components_with_offset():
    got = gait_vector(obs(0.65, 0.12, -0.02), RigConfig(initial_height_offset=0.02))
    assert got == pytest.approx((0.65, 0.12, 0.0), abs=1e-15)


def test_gait_width_is_absolute():
    assert gait_vector(obs(0.60, -0.10, 0.0), RigConfig(initial_height_offset=0.0))[1] == pytest.approx(0.10)


def test_observation_must_be_ground_frame():
    with pytest.raises(ValueError):
        StepObservation(0, LEFT, WorldPoint(0.6, 0.1, 0.0, CAMERA), 0.0)


def test_rig_config_mirrors_theta():
    rc = RigConfig(theta=0.3)
    assert rc.theta_for(LEFT) == 0.3 and rc.theta_for(RIGHT) == -0.3
    with pytest.raises(ValueError):
        RigConfig(foot_length=0.0)


def test_stride_length_sum():
    assert stride_length(0.65, 0.63, 0.27) == pytest.approx(1.55, abs=1e-12)
    assert stride_length(0.0, 0.0, 0.27) == 0.27
    assert stride_length(None, 0.6, 0.27) is None
    with pytest.raises(ValueError):
        stride_length(-0.1, 0.6, 0.27)


def test_stride_velocity():
    assert stride_velocity(1.55, 1.1) == pytest.approx(1.409, abs=1e-3)
    assert stride_velocity(1.3, 1.3) == 1.0
    with pytest.raises(ValueError):
        stride_velocity(1.0, 0.0)


def test_cv_examples():
    assert coefficient_of_variation([1, 1, 1, 1]) == 0.0
    assert coefficient_of_variation([2, 4]) == pytest.approx(100 * math.sqrt(2) / 3, abs=1e-12)
    assert coefficient_of_variation([2, 4]) == pytest.approx(47.140452, abs=1e-6)


def test_cv_errors():
    with pytest.raises(ValueError):
        coefficient_of_variation([1.0])
    with pytest.raises(UndefinedStatisticError):
        coefficient_of_variation([-1.0, 1.0])


def test_symmetry_examples():
    assert symmetry(1.0, 1.0) == 0.0
    assert symmetry(1.1, 0.9) == pytest.approx(20.0, abs=1e-12)
    with pytest.raises(UndefinedStatisticError):
        symmetry(1.0, -1.0)


def rec(k, foot, length=None, vel=None):
    return StepRecord(k, foot, float(k), gait_length=length, stride_velocity=vel)


def test_series_symmetry_pairs_consecutive_opposite_steps():
    steps = [rec(0, LEFT, 0.5), rec(1, RIGHT, 0.6), rec(2, LEFT, 0.5), rec(3, RIGHT, None)]
    # pairs (L0,R1) and (R1,L2) both give 2*0.1/1.1
    assert series_symmetry(steps, "gait_length") == pytest.approx(200 * 0.1 / 1.1, abs=1e-12)
    assert series_symmetry(steps[:1], "gait_length") is None


def test_series_cv_skips_missing():
    steps = [rec(0, LEFT, 2.0), rec(1, RIGHT, None), rec(2, LEFT, 4.0)]
    assert series_cv(steps, "gait_length") == pytest.approx(coefficient_of_variation([2, 4]))
    assert series_cv(steps[:2], "gait_length") is None


# -- properties ------------------------------------------------------------------

series = st.lists(st.floats(0.1, 10.0), min_size=2, max_size=30)


@given(series, st.floats(1e-3, 1e3))
def test_cv_scale_invariant(xs, lam):
    a = coefficient_of_variation(xs)
    b = coefficient_of_variation([lam * x for x in xs])
    assert abs(a - b) <= 1e-9 * max(1.0, abs(a))


@given(series, st.floats(0.5, 50.0))
def test_cv_not_shift_invariant(xs, c):
    assume(np.std(xs) > 1e-3)
    assert coefficient_of_variation([x + c for x in xs]) < coefficient_of_variation(xs)


@given(st.floats(0.01, 100.0), st.floats(0.01, 100.0))
def test_symmetry_identities(a, b):
    assert symmetry(a, b) == symmetry(b, a)
    assert symmetry(a, a) == 0.0
    assert 0.0 <= symmetry(a, b) < 200.0


@given(
    st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.05, 0.4), st.floats(1e-4, 0.1),
    st.integers(0, 2),
)
def test_stride_length_monotone(a, b, L, d, which):
    args = [a, b, L]
    bumped = list(args)
    bumped[which] += d
    assert stride_length(*bumped) > stride_length(*args)
