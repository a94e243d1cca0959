"""Gait-feature sequences, windowing, standardization and the dataset directory format."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..errors import ParseError
from ..io import atomic_write, read_steps, steps_csv
from ..spatial import StepRecord, coefficient_of_variation, symmetry
from ..temporal import RIGHT

FEATURES = (
    "gait_height", "gait_width", "gait_length", "length_symmetry", "length_variation",
    "step_time", "stride_time", "swing_time", "double_support", "stride_velocity",
)
VARIATION_SPAN = 10  # steps in the rolling %CV of gait length
DATASET_MANIFEST = "manifest.json"
DATASET_VERSION = 1


@dataclass
class GaitSequence:
    features: np.ndarray  # (steps, len(FEATURES)); NaN where a value could not be filled
    label: int
    name: str = ""

    def __post_init__(self):
        f = np.asarray(self.features, dtype=float)
        if f.ndim != 2 or f.shape[1] != len(FEATURES) or f.shape[0] == 0:
            raise ValueError(f"features must be (steps>0, {len(FEATURES)}), got {f.shape}")
        self.features = f


def _fill(col: np.ndarray) -> np.ndarray:
    """Forward fill, then back fill the leading gap."""
    out = col.copy()
    ok = ~np.isnan(out)
    if not ok.any():
        return out
    idx = np.where(ok, np.arange(out.size), 0)
    np.maximum.accumulate(idx, out=idx)
    out = out[idx]
    first = int(np.argmax(ok))
    out[:first] = out[first]
    return out


def step_features(steps: Sequence[StepRecord]) -> np.ndarray:
    """Per-step feature matrix in FEATURES order, gaps filled along the walk."""
    n = len(steps)
    raw = np.full((n, len(FEATURES)), np.nan)
    lengths = [s.gait_length for s in steps]
    for i, s in enumerate(steps):
        for j, name in enumerate(FEATURES):
            v = getattr(s, name, None)
            if v is not None:
                raw[i, j] = v
        prev = steps[i - 1] if i else None
        if prev is not None and prev.foot != s.foot and s.gait_length is not None \
                and prev.gait_length is not None:
            r, l = (s.gait_length, prev.gait_length) if s.foot == RIGHT else (prev.gait_length, s.gait_length)
            if r + l != 0:
                raw[i, FEATURES.index("length_symmetry")] = symmetry(r, l)
        recent = [v for v in lengths[max(0, i - VARIATION_SPAN + 1): i + 1] if v is not None]
        if len(recent) >= 2 and abs(np.mean(recent)) > 1e-12:
            raw[i, FEATURES.index("length_variation")] = coefficient_of_variation(recent)
    return np.column_stack([_fill(raw[:, j]) for j in range(raw.shape[1])])


def sequence_from_steps(steps: Sequence[StepRecord], label: int, name: str = "") -> GaitSequence:
    if not steps:
        raise ValueError("a gait sequence needs at least one step")
    return GaitSequence(step_features(steps), label, name)


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, seqs: Sequence[GaitSequence]) -> "Standardizer":
        x = np.vstack([s.features for s in seqs])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN columns
            mean = np.nanmean(x, axis=0)
            std = np.nanstd(x, axis=0)
        mean = np.where(np.isnan(mean), 0.0, mean)
        std = np.where(np.isnan(std) | (std < 1e-12), 1.0, std)
        return cls(mean, std)

    def __call__(self, features: np.ndarray) -> np.ndarray:
        z = (features - self.mean) / self.std
        return np.where(np.isnan(z), 0.0, z)  # unfilled gaps take the training mean


def segment(
    features: np.ndarray, window: int = 128, stride: Optional[int] = None
) -> tuple[np.ndarray, np.ndarray]:
    """Windows of ``window`` steps starting every ``stride`` steps, last one zero-padded.

    ``stride`` defaults to ``window`` (non-overlapping).  Returns
    ``(windows, masks)`` with shapes (n, window, F) and (n, window); mask is
    True at real steps.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    stride = window if stride is None else stride
    if not 1 <= stride <= window:
        raise ValueError("stride must be in 1..window")
    f = np.asarray(features, dtype=float)
    if f.ndim != 2 or f.shape[0] == 0:
        raise ValueError("need a non-empty (steps, features) matrix")
    n = 1 + max(0, -(-(f.shape[0] - window) // stride))
    wins = np.zeros((n, window, f.shape[1]))
    masks = np.zeros((n, window), dtype=bool)
    for i in range(n):
        chunk = f[i * stride:i * stride + window]
        wins[i, : len(chunk)] = chunk
        masks[i, : len(chunk)] = True
    return wins, masks


# -- dataset directory ---------------------------------------------------------

def write_dataset(cycles: Sequence[tuple[str, int, Sequence[StepRecord]]], out_dir) -> Path:
    """Write ``(name, label, steps)`` walking cycles as StepRecord CSVs plus a manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for name, label, steps in cycles:
        fname = f"{name}.csv"
        atomic_write(out / fname, steps_csv(steps))
        entries.append({"file": fname, "label": int(label)})
    manifest = {"version": DATASET_VERSION, "features": list(FEATURES), "sequences": entries}
    atomic_write(out / DATASET_MANIFEST, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def read_dataset(path) -> list[GaitSequence]:
    d = Path(path)
    mpath = d / DATASET_MANIFEST
    try:
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"{mpath}: cannot read ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{mpath}:{exc.lineno}: {exc.msg}") from exc
    if manifest.get("version") != DATASET_VERSION:
        raise ParseError(f"{mpath}: unsupported dataset version {manifest.get('version')!r}")
    seqs = []
    for i, e in enumerate(manifest.get("sequences", [])):
        try:
            fname, label = e["file"], int(e["label"])
        except (KeyError, TypeError, ValueError):
            raise ParseError(f"{mpath}: sequence entry {i} needs 'file' and integer 'label'") from None
        steps = read_steps(d / fname)
        if not steps:
            raise ParseError(f"{d / fname}: no steps")
        seqs.append(sequence_from_steps(steps, label, Path(fname).stem))
    if not seqs:
        raise ParseError(f"{mpath}: dataset lists no sequences")
    return seqs
