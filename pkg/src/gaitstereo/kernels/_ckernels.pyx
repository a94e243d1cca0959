# cython: language_level=3
"""Compiled inner loops. Semantics must match ``_pykernels`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def ncc_search(const double[:, ::1] image, const double[:, ::1] template,
               int cy, int cx, int radius):
    cdef Py_ssize_t H = image.shape[0], W = image.shape[1]
    cdef Py_ssize_t th = template.shape[0], tw = template.shape[1]
    cdef Py_ssize_t hy = th // 2, hx = tw // 2
    cdef Py_ssize_t n_side = 2 * radius + 1
    out_arr = np.full((n_side, n_side), -1.0)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t iy, ix, r, c, y0, x0, r0, r1, c0, c1, n
    cdef double a, b, sa, sb, saa, sbb, sab, va, vb, den
    for iy in range(n_side):
        for ix in range(n_side):
            y0 = cy + iy - radius - hy
            x0 = cx + ix - radius - hx
            r0 = 0 if y0 >= 0 else -y0
            c0 = 0 if x0 >= 0 else -x0
            r1 = th if y0 + th <= H else H - y0
            c1 = tw if x0 + tw <= W else W - x0
            if r1 - r0 < 3 or c1 - c0 < 3:
                continue
            sa = sb = saa = sbb = sab = 0.0
            for r in range(r0, r1):
                for c in range(c0, c1):
                    a = template[r, c]
                    b = image[y0 + r, x0 + c]
                    sa += a
                    sb += b
                    saa += a * a
                    sbb += b * b
                    sab += a * b
            n = (r1 - r0) * (c1 - c0)
            va = saa - sa * sa / n
            vb = sbb - sb * sb / n
            den = va * vb
            if den <= 1e-300:
                out[iy, ix] = 0.0
            else:
                out[iy, ix] = (sab - sa * sb / n) / sqrt(den)
    return out_arr


def first_false_run(const unsigned char[::1] contact, Py_ssize_t start, Py_ssize_t count):
    cdef Py_ssize_t i, n = contact.shape[0], run = 0
    if start < 0:
        start = 0
    for i in range(start, n):
        if contact[i]:
            run = 0
        else:
            run += 1
            if run >= count:
                return i
    return -1
