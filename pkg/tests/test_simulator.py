import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaitstereo.corpus import DECLARED_NOISE, run_walk
from gaitstereo.pipeline import process
from gaitstereo.simulator import (
    NoiseModel,
    WalkerConfig,
    default_personas,
    loop_route,
    observe,
    simulate_walk,
)
from gaitstereo.temporal import LEFT, RIGHT
from oracle import closure_errors, heel_stride

STILL = dict(gait_length_sd=0.0, gait_width_sd=0.0, gait_height_sd=0.0, stride_time_sd=0.0, asymmetry={})


def test_zero_variance_mat_walk():
    cfg = WalkerConfig(gait_length_mean=0.65, stride_time_mean=1.1, **STILL)
    trace = simulate_walk(cfg)
    # heels advance by gait length + half a foot: floor(7 / 0.785) footfalls fit on the mat
    assert len(trace.footfalls) == int(7.0 // (0.65 + 0.27 / 2)) == 8
    assert all(s.gait_length == pytest.approx(0.65, abs=1e-12) for s in trace.true_steps)


def test_footfalls_alternate_and_lift_after_strike():
    trace = simulate_walk(WalkerConfig(seed=3))
    feet = [f.foot for f in trace.footfalls]
    assert feet[0] == LEFT and all(a != b for a, b in zip(feet, feet[1:]))
    for f in trace.footfalls:
        if f.lift_index is not None:
            assert f.lift_index > f.hs_index


def test_corner_route_headings_and_positive_lengths():
    trace = simulate_walk(WalkerConfig(route=loop_route(), seed=1))
    headings = np.unwrap([f.heading for f in trace.footfalls])
    turns = np.diff(headings)
    assert np.sum(np.abs(turns) > 0.1) >= 6  # corner steps turn the heading
    assert all(s.gait_length > 0 for s in trace.true_steps)


def test_determinism_bit_for_bit(calib):
    cfg = WalkerConfig(seed=11)
    a, b = simulate_walk(cfg), simulate_walk(cfg)
    assert all(np.array_equal(x.heel_pos, y.heel_pos) for x, y in zip(a.footfalls, b.footfalls))
    assert a.true_steps == b.true_steps
    la = observe(a, calib, cfg.rig_config(calib.theta), DECLARED_NOISE, seed=5)
    lb = observe(b, calib, cfg.rig_config(calib.theta), DECLARED_NOISE, seed=5)
    assert all(np.array_equal(la.fsr[f].contact, lb.fsr[f].contact) for f in (LEFT, RIGHT))
    assert [(o.uv1, o.uv2, o.t_device) for o in la.stereo] == [(o.uv1, o.uv2, o.t_device) for o in lb.stereo]


def test_route_too_short():
    with pytest.raises(ValueError):
        simulate_walk(WalkerConfig(route=((0, 0), (0.3, 0))))


@pytest.mark.parametrize(
    "bad",
    [dict(gait_length_mean=0), dict(stride_time_sd=-1), dict(standing_fraction=0.4), dict(asymmetry={"x": 1})],
)
def test_walker_validation(bad):
    with pytest.raises(ValueError):
        WalkerConfig(**bad)


def test_noise_validation():
    with pytest.raises(ValueError):
        NoiseModel(pixel_sigma=-1)
    with pytest.raises(ValueError):
        NoiseModel(marker_miss_prob=1.5)


def test_walker_dict_round_trip():
    cfg = WalkerConfig(route=loop_route(0.5), seed=4)
    assert WalkerConfig.from_dict(cfg.to_dict()) == cfg


def test_truth_satisfies_temporal_invariants():
    for seed in range(5):
        for s in simulate_walk(WalkerConfig(seed=seed)).true_steps:
            if s.stride_time is not None:
                assert abs(s.stride_time - (s.standing_time + s.swing_time)) < 1e-9
            if s.double_support is not None:
                assert s.double_support >= 0


def test_flat_ground_mean_height_zero():
    trace = simulate_walk(WalkerConfig(gait_height_mean=0.0, **STILL))
    assert abs(np.mean([s.gait_height for s in trace.true_steps])) < 1e-12


def test_stride_length_matches_heel_to_heel(calib):
    cfg = WalkerConfig(seed=2)
    report, trace = run_walk(cfg, calib, NoiseModel())
    for k, rec in enumerate(report.steps):
        if rec.stride_length is not None and k >= 2:
            assert abs(rec.stride_length - heel_stride(trace.footfalls, k)) < 2e-3


def test_commanded_gait_length_recovered(calib):
    cfg = WalkerConfig(gait_length_mean=0.65, **STILL)
    report, _ = run_walk(cfg, calib, NoiseModel())
    assert all(abs(s.gait_length - 0.65) < 1e-6 for s in report.steps)


def test_constant_speed_velocity_band(calib):
    # stride = 2 g + L = 1.3 m/s * 1.1 s  ->  g = 0.58 m
    cfg = WalkerConfig(gait_length_mean=0.58, stride_time_mean=1.1, **STILL)
    vel = []
    for seed in range(20):
        report, _ = run_walk(cfg, calib, NoiseModel(pixel_sigma=0.5), seed=seed)
        vel += [s.stride_velocity for s in report.steps if s.stride_velocity is not None]
    assert len(vel) > 50
    assert np.max(np.abs(np.array(vel) / 1.3 - 1)) < 0.02


def test_spatial_error_band(calib):
    errs = {"gait_length": [], "gait_width": [], "gait_height": []}
    for seed in range(20):
        report, trace = run_walk(WalkerConfig(seed=seed), calib, NoiseModel(pixel_sigma=0.5))
        for m, t in zip(report.steps, trace.true_steps):
            for k in errs:
                errs[k].append(abs(getattr(m, k) - getattr(t, k)))
    for k, e in errs.items():
        assert np.percentile(e, 95) < 0.01, k


def test_height_offset_calibration_identity(calib):
    cfg = WalkerConfig(gait_height_mean=0.0, gait_height_sd=0.0, seed=6)
    trace = simulate_walk(cfg)
    right = cfg.rig_config(calib.theta)
    wrong = type(right)(right.foot_length, right.initial_height_offset + 0.004, right.theta)
    heights = {}
    for name, rc in (("right", right), ("wrong", wrong)):
        log = observe(trace, calib, right, NoiseModel(pixel_sigma=0.5), seed=1)
        heights[name] = np.mean([s.gait_height for s in process(log, calib, rc).steps])
    assert abs(heights["right"]) < 1e-3
    assert heights["wrong"] == pytest.approx(heights["right"] + 0.004, abs=1e-12)


def test_double_trigger_step_count_restored(calib):
    noise = NoiseModel(fsr_double_trigger_prob=0.05)
    extra = 0
    for seed in range(100):
        cfg = WalkerConfig(seed=seed)
        report, trace = run_walk(cfg, calib, noise, seed=seed)
        extra += sum(1 for _ in report.steps) - len(trace.true_steps)
        assert report.summary.n_steps == len(trace.true_steps)
    assert extra == 0


def test_double_triggers_actually_injected(calib):
    cfg = WalkerConfig(seed=0)
    trace = simulate_walk(cfg)
    log = observe(trace, calib, cfg.rig_config(calib.theta), NoiseModel(fsr_double_trigger_prob=1.0))
    assert len(log.stereo) == 2 * len(trace.footfalls)


def test_all_markers_missed(calib):
    report, trace = run_walk(WalkerConfig(seed=1), calib, NoiseModel(marker_miss_prob=1.0))
    assert report.n_spatial_missing == len(trace.true_steps)
    assert all(s.gait_length is None and s.step_time is not None for s in report.steps[1:])


def test_healthy_symmetry_band(calib):
    for seed in range(10):
        report, _ = run_walk(WalkerConfig(seed=seed), calib, DECLARED_NOISE)
        assert report.symmetry["gait_length"] < 10
        assert report.symmetry["stride_velocity"] < 10


def test_personas_are_separated():
    ps = default_personas()
    assert len(ps) == 6
    names = ("gait_length", "gait_width", "gait_height", "stride_time")
    for i in range(6):
        for j in range(i + 1, 6):
            gaps = [
                abs(getattr(ps[i], f"{n}_mean") - getattr(ps[j], f"{n}_mean"))
                / np.sqrt((getattr(ps[i], f"{n}_sd") ** 2 + getattr(ps[j], f"{n}_sd") ** 2) / 2)
                for n in names
            ]
            assert max(gaps) >= 1.5, (i, j)


@given(st.integers(0, 2**31 - 1), st.floats(0.45, 0.7), st.floats(0.0, 0.08))
def test_noiseless_oracle_closure(seed, length, asym):
    from gaitstereo.calibration import default_calibration

    calib = default_calibration()
    cfg = WalkerConfig(seed=seed, gait_length_mean=length, asymmetry={"gait_length": asym})
    noise = NoiseModel(clock_offset_left=0.25, clock_offset_right=-0.125)
    report, trace = run_walk(cfg, calib, noise)
    assert closure_errors(report.steps, trace.true_steps) == []


@given(st.integers(0, 2**31 - 1))
def test_simulation_deterministic_under_seed(seed):
    a, b = simulate_walk(WalkerConfig(seed=seed)), simulate_walk(WalkerConfig(seed=seed))
    assert a.true_steps == b.true_steps and a.n_samples == b.n_samples
