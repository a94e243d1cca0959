"""Seeded synthetic corpora: short mat walks and long multi-persona walking cycles."""
from __future__ import annotations

from dataclasses import replace

from .calibration import Calibration, default_calibration
from .pipeline import GaitReport, process
from .simulator import NoiseModel, WalkerConfig, default_personas, observe, simulate_walk

DECLARED_NOISE = NoiseModel(pixel_sigma=0.5, clock_jitter_sigma=1e-3)
IDENT_NOISE = NoiseModel(pixel_sigma=0.5, clock_jitter_sigma=1e-3, marker_miss_prob=0.01)


def run_walk(cfg: WalkerConfig, calib: Calibration, noise: NoiseModel, seed=None):
    """Simulate, observe and process one walk; returns ``(report, trace)``."""
    trace = simulate_walk(cfg)
    rc = cfg.rig_config(calib.theta)
    log = observe(trace, calib, rc, noise, seed=seed)
    return process(log, calib, rc), trace


def mat_corpus(
    n_steps: int = 710,
    seed: int = 0,
    noise: NoiseModel = DECLARED_NOISE,
    calib: Calibration = None,
) -> list[tuple[GaitReport, list]]:
    """Straight 7 m walks with the default walker until ``n_steps`` true steps are collected.

    The final walk is kept whole, so the corpus may slightly exceed ``n_steps``.
    """
    calib = calib or default_calibration()
    walks, total, i = [], 0, 0
    while total < n_steps:
        report, trace = run_walk(WalkerConfig(seed=seed * 100003 + i), calib, noise)
        walks.append((report, trace.true_steps))
        total += len(trace.true_steps)
        i += 1
    return walks


def persona_cycles(
    cycles_per_persona: int = 18,
    seed: int = 0,
    noise: NoiseModel = IDENT_NOISE,
    calib: Calibration = None,
    personas=None,
) -> list[tuple[str, int, list]]:
    """``(name, label, measured steps)`` for every walking cycle of every persona."""
    calib = calib or default_calibration()
    personas = personas or default_personas()
    out = []
    for label, base in enumerate(personas):
        for c in range(cycles_per_persona):
            cfg = replace(base, seed=seed * 1_000_003 + label * 1009 + c)
            report, _ = run_walk(cfg, calib, noise)
            out.append((f"p{label}_c{c:03d}", label, report.steps))
    return out
