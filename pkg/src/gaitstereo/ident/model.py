"""Transformer encoder classifier in numpy with hand-written backpropagation.

Per block (post-norm): ``X1 = LN(X + Attn(X))``, ``X2 = LN(X1 + FF(X1))``.
The encoder output is mean-pooled over real (unpadded) positions and fed to
a linear head.  Padded positions are excluded from attention keys and from
pooling, so whatever they hold cannot change the output.  An all-padded
window pools to zero and the head returns ``softmax(head_b)``.

All arithmetic is float64.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

LN_EPS = 1e-5
GRAD_FLOOR = 1e-6


@dataclass(frozen=True)
class ModelConfig:
    n_features: int = 10
    n_classes: int = 6
    d_model: int = 32
    n_heads: int = 4
    n_layers: int = 2
    d_ff: int = 64
    max_len: int = 128
    dropout: float = 0.1

    def __post_init__(self):
        if self.d_model % self.n_heads:
            raise ValueError(f"d_model {self.d_model} not divisible by n_heads {self.n_heads}")
        for name in ("n_features", "n_classes", "d_model", "n_heads", "n_layers", "d_ff", "max_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must be in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


def positional_encoding(max_len: int, d: int) -> np.ndarray:
    """Fixed sinusoidal encodings, shape (max_len, d)."""
    pos = np.arange(max_len)[:, None]
    i = np.arange(d)[None, :]
    angle = pos / np.power(10000.0, (2 * (i // 2)) / d)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle))


def init_params(cfg: ModelConfig, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    d, f = cfg.d_model, cfg.d_ff

    def w(n_in, n_out):
        return rng.normal(0.0, 1.0 / np.sqrt(n_in), (n_in, n_out))

    p = {"embed_W": w(cfg.n_features, d), "embed_b": np.zeros(d)}
    for l in range(cfg.n_layers):
        for n in ("Wq", "Wk", "Wv", "Wo"):
            p[f"b{l}.{n}"] = w(d, d)
        for n in ("bq", "bk", "bv", "bo", "ln1_b", "b2", "ln2_b"):
            p[f"b{l}.{n}"] = np.zeros(d)
        p[f"b{l}.ln1_g"] = np.ones(d)
        p[f"b{l}.ln2_g"] = np.ones(d)
        p[f"b{l}.W1"] = w(d, f)
        p[f"b{l}.b1"] = np.zeros(f)
        p[f"b{l}.W2"] = w(f, d)
    p["head_W"] = w(d, cfg.n_classes)
    p["head_b"] = np.zeros(cfg.n_classes)
    return p


def param_shapes(cfg: ModelConfig) -> dict:
    return {k: v.shape for k, v in init_params(cfg).items()}


# -- layer pieces --------------------------------------------------------------

def _ln_fwd(x, g, b):
    mu = x.mean(-1, keepdims=True)
    xc = x - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(-1, keepdims=True) + LN_EPS)
    xh = xc * inv
    return xh * g + b, (xh, inv, g)


def _ln_bwd(dy, cache):
    xh, inv, g = cache
    dg = (dy * xh).sum(axis=(0, 1))
    db = dy.sum(axis=(0, 1))
    dxh = dy * g
    dx = inv * (dxh - dxh.mean(-1, keepdims=True) - xh * (dxh * xh).mean(-1, keepdims=True))
    return dx, dg, db


def _outer_sum(a, b):
    """Sum over batch and time of per-position outer products (``einsum bti,btj->ij``)."""
    return a.reshape(-1, a.shape[-1]).T @ b.reshape(-1, b.shape[-1])


def _split(x, h):
    B, T, d = x.shape
    return x.reshape(B, T, h, d // h).transpose(0, 2, 1, 3)


def _merge(x):
    B, h, T, dk = x.shape
    return x.transpose(0, 2, 1, 3).reshape(B, T, h * dk)


def _attn_fwd(X, keymask, p, l, h):
    Q = _split(X @ p[f"b{l}.Wq"] + p[f"b{l}.bq"], h)
    K = _split(X @ p[f"b{l}.Wk"] + p[f"b{l}.bk"], h)
    V = _split(X @ p[f"b{l}.Wv"] + p[f"b{l}.bv"], h)
    scale = 1.0 / np.sqrt(Q.shape[-1])
    S = (Q @ K.transpose(0, 1, 3, 2)) * scale
    S = np.where(keymask[:, None, None, :], S, -np.inf)
    smax = S.max(-1, keepdims=True)
    smax[~np.isfinite(smax)] = 0.0  # rows with no real key
    E = np.exp(S - smax, out=S)  # exp(-inf) = 0: masked keys get exactly zero weight
    Z = E.sum(-1, keepdims=True)
    Z[Z == 0] = 1.0
    P = E / Z
    O = _merge(P @ V)
    A = O @ p[f"b{l}.Wo"] + p[f"b{l}.bo"]
    return A, (X, Q, K, V, P, O, scale)


def _attn_bwd(dA, cache, p, l, h, g):
    X, Q, K, V, P, O, scale = cache
    g[f"b{l}.Wo"] = _outer_sum(O, dA)
    g[f"b{l}.bo"] = dA.sum(axis=(0, 1))
    dO = _split(dA @ p[f"b{l}.Wo"].T, h)
    dP = dO @ V.transpose(0, 1, 3, 2)
    dV = P.transpose(0, 1, 3, 2) @ dO
    dS = P * (dP - (dP * P).sum(-1, keepdims=True)) * scale
    dQ = _merge(dS @ K)
    dK = _merge(dS.transpose(0, 1, 3, 2) @ Q)
    dV = _merge(dV)
    dX = np.zeros_like(X)
    for name, d in (("q", dQ), ("k", dK), ("v", dV)):
        g[f"b{l}.W{name}"] = _outer_sum(X, d)
        g[f"b{l}.b{name}"] = d.sum(axis=(0, 1))
        dX += d @ p[f"b{l}.W{name}"].T
    return dX


def _dropout(x, rate, rng):
    if rate <= 0 or rng is None:
        return x, None
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * keep, keep


class IdentModel:
    def __init__(self, cfg: ModelConfig, params: Optional[dict] = None, seed: int = 0):
        self.cfg = cfg
        self.params = params if params is not None else init_params(cfg, seed)
        self.pos = positional_encoding(cfg.max_len, cfg.d_model)
        shapes = param_shapes(cfg)
        if set(shapes) != set(self.params):
            raise ValueError("parameter names do not match the model configuration")
        for k, s in shapes.items():
            if self.params[k].shape != s:
                raise ValueError(f"parameter {k} has shape {self.params[k].shape}, expected {s}")

    # forward ---------------------------------------------------------------
    def _check(self, x, mask):
        x = np.asarray(x, dtype=float)
        mask = np.asarray(mask, dtype=bool)
        if x.ndim != 3 or x.shape[2] != self.cfg.n_features:
            raise ValueError(f"expected input (batch, steps, {self.cfg.n_features}), got {x.shape}")
        if mask.shape != x.shape[:2]:
            raise ValueError(f"mask shape {mask.shape} does not match input {x.shape[:2]}")
        if x.shape[1] > self.cfg.max_len:
            raise ValueError(f"window of {x.shape[1]} steps exceeds max_len {self.cfg.max_len}")
        return x, mask

    def _forward(self, x, mask, rng=None):
        p, cfg = self.params, self.cfg
        x = np.where(mask[..., None], x, 0.0)
        T = x.shape[1]
        X = x @ p["embed_W"] + p["embed_b"] + self.pos[:T]
        X, drop0 = _dropout(X, cfg.dropout, rng)
        caches = []
        for l in range(cfg.n_layers):
            A, ac = _attn_fwd(X, mask, p, l, cfg.n_heads)
            A, da = _dropout(A, cfg.dropout, rng)
            X1, ln1 = _ln_fwd(X + A, p[f"b{l}.ln1_g"], p[f"b{l}.ln1_b"])
            H = X1 @ p[f"b{l}.W1"] + p[f"b{l}.b1"]
            R = np.maximum(H, 0.0)
            F = R @ p[f"b{l}.W2"] + p[f"b{l}.b2"]
            F, df = _dropout(F, cfg.dropout, rng)
            X2, ln2 = _ln_fwd(X1 + F, p[f"b{l}.ln2_g"], p[f"b{l}.ln2_b"])
            caches.append((ac, da, ln1, X1, H, R, df, ln2))
            X = X2
        m = mask[..., None]
        cnt = mask.sum(1, keepdims=True).astype(float)
        pooled = np.where(m, X, 0.0).sum(1) / np.maximum(cnt, 1.0)
        logits = pooled @ p["head_W"] + p["head_b"]
        z = logits - logits.max(-1, keepdims=True)
        e = np.exp(z)
        probs = e / e.sum(-1, keepdims=True)
        return probs, (x, drop0, caches, mask, cnt, pooled)

    def forward(self, x, mask) -> np.ndarray:
        """Class probabilities, eval mode (no dropout)."""
        x, mask = self._check(x, mask)
        return self._forward(x, mask)[0]

    def attention_weights(self, x, mask) -> list:
        """Per-layer attention matrices (batch, heads, T, T), eval mode."""
        x, mask = self._check(x, mask)
        caches = self._forward(x, mask)[1][2]
        return [c[0][4] for c in caches]

    # loss and gradients ----------------------------------------------------
    def loss_and_grads(self, x, mask, y, rng=None) -> tuple[float, dict]:
        """Mean cross-entropy and its gradient w.r.t. every parameter.

        Dropout is applied only when ``rng`` is given (training mode).
        """
        x, mask = self._check(x, mask)
        y = np.asarray(y, dtype=int)
        p, cfg = self.params, self.cfg
        probs, (x, drop0, caches, mask, cnt, pooled) = self._forward(x, mask, rng)
        B = x.shape[0]
        loss = float(-np.log(np.maximum(probs[np.arange(B), y], 1e-300)).mean())

        g = {}
        dlogits = probs.copy()
        dlogits[np.arange(B), y] -= 1.0
        dlogits /= B
        g["head_W"] = pooled.T @ dlogits
        g["head_b"] = dlogits.sum(0)
        dpooled = dlogits @ p["head_W"].T
        dX = np.where(mask[..., None], (dpooled / np.maximum(cnt, 1.0))[:, None, :], 0.0)
        for l in reversed(range(cfg.n_layers)):
            ac, da, ln1, X1, H, R, df, ln2 = caches[l]
            dsum2, g[f"b{l}.ln2_g"], g[f"b{l}.ln2_b"] = _ln_bwd(dX, ln2)
            dF = dsum2 if df is None else dsum2 * df
            g[f"b{l}.W2"] = _outer_sum(R, dF)
            g[f"b{l}.b2"] = dF.sum(axis=(0, 1))
            dH = (dF @ p[f"b{l}.W2"].T) * (H > 0)
            g[f"b{l}.W1"] = _outer_sum(X1, dH)
            g[f"b{l}.b1"] = dH.sum(axis=(0, 1))
            dX1 = dsum2 + dH @ p[f"b{l}.W1"].T
            dsum1, g[f"b{l}.ln1_g"], g[f"b{l}.ln1_b"] = _ln_bwd(dX1, ln1)
            dA = dsum1 if da is None else dsum1 * da
            dX = dsum1 + _attn_bwd(dA, ac, p, l, cfg.n_heads, g)
        if drop0 is not None:
            dX = dX * drop0
        g["embed_W"] = _outer_sum(x, dX)
        g["embed_b"] = dX.sum(axis=(0, 1))
        return loss, g

    def loss(self, x, mask, y) -> float:
        probs = self.forward(x, mask)
        y = np.asarray(y, dtype=int)
        return float(-np.log(np.maximum(probs[np.arange(len(y)), y], 1e-300)).mean())

    def predict(self, x, mask) -> np.ndarray:
        return self.forward(x, mask).argmax(-1)


def grad_check(
    model: IdentModel, x, mask, y, epsilon: float = 1e-5, n_coords: int = 200, seed: int = 0
) -> dict:
    """Max relative error of analytic vs central-difference gradients, per parameter tensor.

    At least ``n_coords`` coordinates are checked in total, spread over every
    tensor (small tensors are checked in full).  Relative error is
    ``|a - n| / max(|a|, |n|, GRAD_FLOOR)``; the floor keeps gradients that
    are exactly zero (the key biases, which shift every score in a softmax
    row equally) from dividing finite-difference round-off by ~0.
    """
    _, grads = model.loss_and_grads(x, mask, y)
    rng = np.random.default_rng(seed)
    names = sorted(model.params)
    per = max(4, int(np.ceil(n_coords / len(names))))
    out = {}
    for name in names:
        w = model.params[name]
        flat = w.reshape(-1)
        idx = np.arange(flat.size) if flat.size <= per else rng.choice(flat.size, per, replace=False)
        worst = 0.0
        for i in idx:
            old = flat[i]
            flat[i] = old + epsilon
            lp = model.loss(x, mask, y)
            flat[i] = old - epsilon
            lm = model.loss(x, mask, y)
            flat[i] = old
            num = (lp - lm) / (2 * epsilon)
            ana = grads[name].reshape(-1)[i]
            worst = max(worst, abs(ana - num) / max(abs(ana), abs(num), GRAD_FLOOR))
        out[name] = worst
    return out
