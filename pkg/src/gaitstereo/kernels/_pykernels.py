"""Pure-numpy reference versions of the compiled kernels."""
import numpy as np


def ncc_search(image, template, cy, cx, radius):
    """Normalised cross-correlation of ``template`` centred at each offset.

    Returns a ``(2r+1, 2r+1)`` map; entry ``[dy+r, dx+r]`` scores the template
    centred on pixel ``(cy+dy, cx+dx)``.  Only the in-frame overlap is used;
    offsets with fewer than 3x3 overlapping pixels score -1.
    """
    H, W = image.shape
    th, tw = template.shape
    hy, hx = th // 2, tw // 2
    n_side = 2 * radius + 1
    out = np.full((n_side, n_side), -1.0)
    for iy in range(n_side):
        for ix in range(n_side):
            y0 = cy + iy - radius - hy
            x0 = cx + ix - radius - hx
            r0, c0 = max(0, -y0), max(0, -x0)
            r1, c1 = min(th, H - y0), min(tw, W - x0)
            if r1 - r0 < 3 or c1 - c0 < 3:
                continue
            a = template[r0:r1, c0:c1]
            b = image[y0 + r0:y0 + r1, x0 + c0:x0 + c1]
            n = a.size
            sa, sb = a.sum(), b.sum()
            va = (a * a).sum() - sa * sa / n
            vb = (b * b).sum() - sb * sb / n
            den = va * vb
            out[iy, ix] = 0.0 if den <= 1e-300 else ((a * b).sum() - sa * sb / n) / np.sqrt(den)
    return out


def first_false_run(contact, start, count):
    """Index at which ``count`` consecutive false samples (from ``start``) complete, or -1."""
    c = np.asarray(contact, dtype=bool)[max(start, 0):]
    if count <= 0 or c.size < count:
        return -1
    false = (~c).astype(np.int64)
    run = np.convolve(false, np.ones(count, dtype=np.int64), mode="valid")
    hits = np.flatnonzero(run == count)
    return -1 if hits.size == 0 else int(hits[0] + count - 1 + max(start, 0))
