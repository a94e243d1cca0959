"""Adam training and stratified k-fold evaluation of the identification model.

Folds are assigned per sequence (one walking cycle each), stratified by
label, so windows from one cycle never straddle train and validation.
Features are standardized with training-fold statistics only.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .data import FEATURES, GaitSequence, Standardizer, segment
from .model import IdentModel, ModelConfig


@dataclass(frozen=True)
class TrainConfig:
    window: int = 128
    folds: int = 10
    epochs: int = 50
    lr: float = 1e-3
    seed: int = 0
    dropout: float = 0.1
    batch_size: int = 16
    d_model: int = 32
    n_heads: int = 4
    n_layers: int = 2
    d_ff: int = 64
    window_stride: Optional[int] = None  # None: non-overlapping windows

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if not self.lr > 0:
            raise ValueError("lr must be positive")

    def model_config(self, n_classes: int) -> ModelConfig:
        return ModelConfig(
            n_features=len(FEATURES), n_classes=n_classes, d_model=self.d_model,
            n_heads=self.n_heads, n_layers=self.n_layers, d_ff=self.d_ff,
            max_len=self.window, dropout=self.dropout,
        )

    def to_dict(self) -> dict:
        return asdict(self)


class Adam:
    def __init__(self, params: dict, lr: float = 1e-3, b1=0.9, b2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        c1 = 1 - self.b1 ** self.t
        c2 = 1 - self.b2 ** self.t
        for k, g in grads.items():
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


@dataclass
class KFoldResult:
    labels: list  # original label of each class index
    fold_accuracy: list
    confusion: np.ndarray  # rows: true class, columns: predicted
    model: Optional[IdentModel] = field(default=None, repr=False)
    standardizer: Optional[Standardizer] = field(default=None, repr=False)

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracy))

    def to_dict(self) -> dict:
        return {
            "labels": self.labels,
            "fold_accuracy": self.fold_accuracy,
            "mean_accuracy": self.mean_accuracy,
            "confusion": self.confusion.tolist(),
        }


def _windows(seqs, classes, std, cfg: TrainConfig):
    xs, ms, ys = [], [], []
    for s in seqs:
        w, m = segment(std(s.features), cfg.window, cfg.window_stride)
        xs.append(w)
        ms.append(m)
        ys += [classes[s.label]] * len(w)
    return np.concatenate(xs), np.concatenate(ms), np.array(ys, dtype=int)


def fit(
    seqs: Sequence[GaitSequence], classes: dict, cfg: TrainConfig, seed: int
) -> tuple[IdentModel, Standardizer]:
    """Train one model on ``seqs``; ``classes`` maps label -> class index."""
    std = Standardizer.fit(seqs)
    x, m, y = _windows(seqs, classes, std, cfg)
    model = IdentModel(cfg.model_config(len(classes)), seed=seed)
    opt = Adam(model.params, cfg.lr)
    rng = np.random.default_rng([seed, 7])
    bucket = (m.sum(1) - 1) // max(cfg.window // 4, 1)
    for _ in range(cfg.epochs):
        for b in _batches(bucket, cfg.batch_size, rng):
            # padding never changes the output, so trim to the batch's longest window
            t = int(m[b].sum(1).max())
            _, g = model.loss_and_grads(x[b, :t], m[b, :t], y[b], rng=rng)
            opt.step(model.params, g)
    return model, std


def _batches(bucket: np.ndarray, size: int, rng) -> list:
    """Shuffled minibatches drawn within length buckets, in shuffled order.

    Grouping windows of similar real length lets each batch be trimmed to
    its longest member instead of the full window.
    """
    order = rng.permutation(len(bucket))
    order = order[np.argsort(bucket[order], kind="stable")]
    batches = []
    for k in np.unique(bucket):
        idx = order[bucket[order] == k]
        batches += [idx[i:i + size] for i in range(0, len(idx), size)]
    return [batches[i] for i in rng.permutation(len(batches))]


def fold_assignment(labels: Sequence[int], folds: int, seed: int) -> np.ndarray:
    """Stratified fold index per sequence (labels dealt round-robin after a shuffle)."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    out = np.empty(len(labels), dtype=int)
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        idx = idx[rng.permutation(len(idx))]
        out[idx] = np.arange(len(idx)) % folds
    return out


def train_kfold(dataset: Sequence[GaitSequence], cfg: TrainConfig = TrainConfig()) -> KFoldResult:
    labels = [s.label for s in dataset]
    uniq = sorted(set(labels))
    if len(uniq) < 2:
        raise ValueError("need at least two labels")
    for lab in uniq:
        n = labels.count(lab)
        if n < cfg.folds:
            raise ValueError(f"label {lab} has {n} sequences, fewer than {cfg.folds} folds")
    classes = {lab: i for i, lab in enumerate(uniq)}
    fold = fold_assignment(labels, cfg.folds, cfg.seed)
    conf = np.zeros((len(uniq), len(uniq)), dtype=int)
    accs = []
    model = std = None
    for k in range(cfg.folds):
        train = [s for s, f in zip(dataset, fold) if f != k]
        val = [s for s, f in zip(dataset, fold) if f == k]
        model, std = fit(train, classes, cfg, seed=cfg.seed * 1000 + k)
        x, m, y = _windows(val, classes, std, cfg)
        pred = model.predict(x, m)
        np.add.at(conf, (y, pred), 1)
        accs.append(float(np.mean(pred == y)))
    return KFoldResult(uniq, accs, conf, model, std)


def shuffled_labels(dataset: Sequence[GaitSequence], seed: int) -> list[GaitSequence]:
    """Copy of ``dataset`` with labels permuted across sequences (chance baseline)."""
    perm = np.random.default_rng(seed).permutation([s.label for s in dataset])
    return [GaitSequence(s.features, int(l), s.name) for s, l in zip(dataset, perm)]
