"""Synthetic cross-marker renders and a classical sub-pixel center detector.

The marker is a 3 x 3 cm white square with a dark border ring and a dark
centred cross, on a mid-grey background.  Detection: threshold the dark
pattern, take the largest connected component, estimate size and a rough
centre from it, refine by normalised cross-correlation against ideal
templates over a set of in-plane rotations, and interpolate the correlation
peak with a parabola in each axis.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import ndimage

from . import kernels
from .geometry import PixelPoint

MARKER_CM = 3.0
BACKGROUND = 0.5
WHITE = 1.0
DARK = 0.0
RING = 0.10  # ring width, fraction of side
CROSS_HALF = 0.05  # cross half-width, fraction of side
DARK_FRACTION = (1 - (1 - 2 * RING) ** 2) + 2 * (2 * CROSS_HALF) * (1 - 2 * RING) - (2 * CROSS_HALF) ** 2
SUPERSAMPLE = 4
MIN_CONFIDENCE = 0.5
COARSE_ANGLES = np.deg2rad(np.arange(-45.0, 45.0, 15.0))
FINE_STEPS = np.deg2rad((5.0, 2.5))


@dataclass(frozen=True, eq=False)
class Image:
    width: int
    height: int
    pixels: np.ndarray  # (height, width), row-major, values in [0, 1]

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=float)
        if p.shape != (self.height, self.width):
            raise ValueError(f"pixel grid {p.shape} does not match {self.height}x{self.width}")
        p.flags.writeable = False
        object.__setattr__(self, "pixels", p)


@dataclass(frozen=True)
class Detection:
    center: Optional[PixelPoint]
    confidence: float
    found: bool

    def __post_init__(self):
        if not self.found and self.center is not None:
            raise ValueError("a failed detection carries no centre")


def _pattern(lx: np.ndarray, ly: np.ndarray) -> np.ndarray:
    """Intensity at marker-local coordinates (units of the side length)."""
    ax, ay = np.abs(lx), np.abs(ly)
    inside = (ax <= 0.5) & (ay <= 0.5)
    dark = (ax > 0.5 - RING) | (ay > 0.5 - RING) | (ax < CROSS_HALF) | (ay < CROSS_HALF)
    return np.where(inside, np.where(dark, DARK, WHITE), BACKGROUND)


def _rasterize(width, height, cx, cy, side, rotation, tilt=0.0, ss=SUPERSAMPLE):
    img = np.full((height, width), BACKGROUND)
    reach = side * 0.75 + 2
    x0, x1 = max(int(np.floor(cx - reach)), 0), min(int(np.ceil(cx + reach)) + 1, width)
    y0, y1 = max(int(np.floor(cy - reach)), 0), min(int(np.ceil(cy + reach)) + 1, height)
    if x0 >= x1 or y0 >= y1:
        return img
    off = (np.arange(ss) + 0.5) / ss - 0.5
    xs = (np.arange(x0, x1)[:, None] + off[None, :]).ravel()
    ys = (np.arange(y0, y1)[:, None] + off[None, :]).ravel()
    X, Y = np.meshgrid(xs - cx, ys - cy)
    c, s = np.cos(rotation), np.sin(rotation)
    lx = (c * X + s * Y) / (side * np.cos(tilt))
    ly = (-s * X + c * Y) / side
    sub = _pattern(lx, ly)
    img[y0:y1, x0:x1] = sub.reshape(y1 - y0, ss, x1 - x0, ss).mean(axis=(1, 3))
    return img


def render_marker(
    size: tuple[int, int],
    center: PixelPoint,
    scale: float,
    rotation: float = 0.0,
    noise_sigma: float = 0.0,
    seed: int = 0,
    tilt: float = 0.0,
    blur_sigma: float = 0.0,
) -> Image:
    """Render the marker at a sub-pixel ``center``.

    ``size`` is ``(width, height)``; ``scale`` is pixels per cm; ``tilt`` is an
    out-of-plane rotation (foreshortening along the marker x axis).  Pixels
    outside the frame are simply not drawn.
    """
    width, height = size
    side = MARKER_CM * scale
    if side < 8:
        raise ValueError(f"marker would be {side:.1f} px wide; need at least 8 px")
    img = _rasterize(width, height, center.u, center.v, side, rotation, tilt)
    if blur_sigma > 0:
        img = ndimage.gaussian_filter(img, blur_sigma, mode="nearest")
    if noise_sigma > 0:
        img = img + np.random.default_rng(seed).normal(0.0, noise_sigma, img.shape)
    return Image(width, height, np.clip(img, 0.0, 1.0))


def _template(side: float, rotation: float) -> np.ndarray:
    n = int(np.ceil(side * 1.25)) | 1
    c = (n - 1) / 2.0
    return _rasterize(n, n, c, c, side, rotation)


def _parabola(fm, f0, fp) -> float:
    den = fm - 2.0 * f0 + fp
    if den >= 0:
        return 0.0
    return float(np.clip(0.5 * (fm - fp) / den, -0.5, 0.5))


def detect_center(img: Image, radius: int = 3) -> Detection:
    px = img.pixels
    smooth = ndimage.gaussian_filter(px, 1.0, mode="nearest")
    thr = 0.5 * float(np.median(smooth))
    mask = smooth < thr
    labels, n = ndimage.label(mask, structure=np.ones((3, 3)))
    if n == 0:
        return Detection(None, 0.0, False)
    areas = ndimage.sum_labels(mask, labels, index=np.arange(1, n + 1))
    best = int(np.argmax(areas)) + 1
    if float(areas[best - 1]) < DARK_FRACTION * 64:
        return Detection(None, 0.0, False)
    # the ring encloses the whole square, so the filled area is side**2
    side = np.sqrt(ndimage.binary_fill_holes(labels == best).sum())

    comp = ndimage.binary_dilation(labels == best, iterations=2)
    w = np.where(comp, np.clip(np.median(px) - px, 0.0, None), 0.0)
    if w.sum() <= 0:
        return Detection(None, 0.0, False)
    cy, cx = ndimage.center_of_mass(w)
    iy, ix = int(round(cy)), int(round(cx))

    cache = {}

    def search(angle):
        if angle not in cache:
            cache[angle] = kernels.ncc_search(px, _template(side, angle), iy, ix, radius)
        return cache[angle]

    interior = False
    for _ in range(4):
        cache.clear()
        best_angle = max(COARSE_ANGLES, key=lambda a: search(a).max())
        for step in FINE_STEPS:
            best_angle = max(
                (best_angle - step, best_angle, best_angle + step), key=lambda a: search(a).max()
            )
        surface = search(best_angle)
        dy, dx = np.unravel_index(int(np.argmax(surface)), surface.shape)
        score = float(surface[dy, dx])
        interior = 0 < dy < 2 * radius and 0 < dx < 2 * radius
        if interior:
            break
        iy += dy - radius
        ix += dx - radius
    if not interior:
        return Detection(None, max(score, 0.0), False)

    sub_x = _parabola(surface[dy, dx - 1], surface[dy, dx], surface[dy, dx + 1])
    sub_y = _parabola(surface[dy - 1, dx], surface[dy, dx], surface[dy + 1, dx])
    conf = float(np.clip(score, 0.0, 1.0))
    if conf < MIN_CONFIDENCE:
        return Detection(None, conf, False)
    u = ix + (dx - radius) + sub_x
    v = iy + (dy - radius) + sub_y
    return Detection(PixelPoint(float(u), float(v)), conf, True)


# -- PGM (P5) ------------------------------------------------------------------

def write_pgm(img: Image, path, maxval: int = 65535) -> None:
    if not 0 < maxval < 65536:
        raise ValueError("maxval must be in 1..65535")
    q = np.round(img.pixels * maxval)
    data = q.astype(">u2" if maxval > 255 else "u1").tobytes()
    header = f"P5\n{img.width} {img.height}\n{maxval}\n".encode("ascii")
    Path(path).write_bytes(header + data)


def read_pgm(path) -> Image:
    raw = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(raw[start:pos])
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    width, height, maxval = (int(t) for t in tokens[1:])
    pos += 1  # single whitespace after maxval
    dtype = ">u2" if maxval > 255 else "u1"
    n = width * height
    arr = np.frombuffer(raw, dtype=dtype, count=n, offset=pos)
    return Image(width, height, arr.reshape(height, width).astype(float) / maxval)
