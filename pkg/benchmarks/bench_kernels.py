"""Compare the compiled kernels against their numpy fallbacks.

Times each kernel on workloads shaped like the real call sites, then the two
end-to-end paths that use them (marker detection and FSR event extraction)
with the backend switched in-process.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from gaitstereo import kernels
from gaitstereo.calibration import default_calibration
from gaitstereo.kernels import _pykernels
from gaitstereo.marker import PixelPoint, _template, detect_center, render_marker
from gaitstereo.simulator import WalkerConfig, observe, simulate_walk
from gaitstereo.temporal import LEFT, trace_events

try:
    from gaitstereo.kernels import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def row(name, py, cy):
    ratio = f"{py / cy:7.1f}x" if cy else "    n/a"
    cy_s = f"{cy * 1e6:12.1f}" if cy else "         n/a"
    print(f"{name:<34} {py * 1e6:12.1f} {cy_s} {ratio}")


def with_backend(impl, fn):
    saved = kernels._impl
    kernels._impl = impl
    try:
        return fn()
    finally:
        kernels._impl = saved


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rep = args.repeat

    img = render_marker((128, 128), PixelPoint(63.3, 61.8), 10.0, 0.2, 0.03, seed=1)
    tmpl = _template(30.0, 0.2)
    px = np.ascontiguousarray(img.pixels)

    cfg = WalkerConfig(seed=0)
    calib = default_calibration()
    fsr = observe(simulate_walk(cfg), calib, cfg.rig_config(calib.theta)).fsr[LEFT]
    contact = fsr.contact
    c8 = np.ascontiguousarray(contact, dtype=np.uint8)
    lift = int(np.argmax(~contact[np.argmax(contact):])) + int(np.argmax(contact))

    print(f"{'workload':<34} {'python us':>12} {'cython us':>12} {'speedup':>8}")
    for r in (3, 8):
        py = best_of(lambda: _pykernels.ncc_search(px, tmpl, 62, 63, r), rep, 20)
        cy = _ckernels and best_of(lambda: _ckernels.ncc_search(px, tmpl, 62, 63, r), rep, 20)
        row(f"ncc_search r={r} ({tmpl.shape[0]}px template)", py, cy)
    py = best_of(lambda: _pykernels.first_false_run(contact, lift - 5, 100), rep, 200)
    cy = _ckernels and best_of(lambda: _ckernels.first_false_run(c8, lift - 5, 100), rep, 200)
    row("first_false_run (one lift)", py, cy)

    py = best_of(lambda: with_backend(None, lambda: detect_center(img)), rep, 5)
    cy = _ckernels and best_of(lambda: with_backend(_ckernels, lambda: detect_center(img)), rep, 5)
    row("detect_center (end to end)", py, cy)
    py = best_of(lambda: with_backend(None, lambda: trace_events(fsr)), rep, 5)
    cy = _ckernels and best_of(
        lambda: with_backend(_ckernels, lambda: trace_events(fsr)), rep, 5)
    row("FSR events, one 7 m walk", py, cy)
    print(f"active backend: {kernels.BACKEND}")


if __name__ == "__main__":
    main()
