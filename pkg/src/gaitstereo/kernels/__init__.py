"""Hot inner loops, compiled when available.

The Cython extension ``_ckernels`` is used if it was built; otherwise (or
when ``GAITSTEREO_PURE_PYTHON`` is set) the numpy versions in ``_pykernels``
are used.  ``BACKEND`` names the active implementation.
"""
import os

import numpy as np

from . import _pykernels

if os.environ.get("GAITSTEREO_PURE_PYTHON"):
    _impl = None
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = None

BACKEND = "cython" if _impl is not None else "python"


def ncc_search(image, template, cy, cx, radius):
    image = np.ascontiguousarray(image, dtype=np.float64)
    template = np.ascontiguousarray(template, dtype=np.float64)
    if _impl is None:
        return _pykernels.ncc_search(image, template, int(cy), int(cx), int(radius))
    return _impl.ncc_search(image, template, int(cy), int(cx), int(radius))


def first_false_run(contact, start, count):
    if count < 1:
        raise ValueError("count must be >= 1")
    if _impl is None:
        return _pykernels.first_false_run(contact, int(start), int(count))
    c = np.ascontiguousarray(contact, dtype=np.uint8)
    return int(_impl.first_false_run(c, int(start), int(count)))


__all__ = ["BACKEND", "ncc_search", "first_false_run"]
