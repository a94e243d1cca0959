"""Command-line entry point: ``gaitstereo <subcommand> [options]``.

Every subcommand takes ``--seed``, ``--config FILE`` (JSON; any subset of the
sections printed by ``--print-config``) and ``--out DIR``.  Exit status is 0 on
success, 2 for invalid input or configuration, 1 for internal errors.
"""
from __future__ import annotations

import argparse
import copy
import json
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import Calibration, audit, checkerboard_fixture, default_calibration, load_calibration
from .corpus import persona_cycles, run_walk
from .errors import ConfigError, GaitError
from .geometry import PixelPoint
from .io import atomic_write, read_log, read_steps, write_log, write_steps
from .marker import detect_center, read_pgm, render_marker, write_pgm
from .pipeline import drift_study, process
from .simulator import NoiseModel, WalkerConfig, loop_route, observe, simulate_walk
from .temporal import TemporalConfig

EXIT_OK, EXIT_INTERNAL, EXIT_INVALID = 0, 1, 2


def default_config() -> dict:
    walker = WalkerConfig().to_dict()
    return {
        "calibration": {"focal": 1400.0, "baseline": 0.06, "theta": 0.2, "width": 1280, "height": 960},
        "walker": walker,
        "noise": asdict(NoiseModel(pixel_sigma=0.5, clock_jitter_sigma=1e-3)),
        "temporal": asdict(TemporalConfig()),
        "drift": {"k": 10, "seeds": 1, "route_scale": 1.0},
        "dataset": {"cycles_per_persona": 18},
        "train": _train_defaults(),
        "audit": {"noise_px": 0.25, "n_poses": 20, "distances": [0.30, 0.45, 0.65]},
        "marker": {
            "width": 96, "height": 96, "u": 47.3, "v": 48.6, "scale": 10.0,
            "rotation": 0.1, "noise_sigma": 0.02, "tilt": 0.0, "blur_sigma": 0.0, "radius": 3,
        },
    }


def _train_defaults() -> dict:
    from .ident import TrainConfig

    return TrainConfig().to_dict()


def load_config(path) -> dict:
    cfg = default_config()
    if path is None:
        return cfg
    p = Path(path)
    try:
        user = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"{p}: cannot read config ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}:{exc.lineno}: {exc.msg}") from exc
    if not isinstance(user, dict):
        raise ConfigError(f"{p}: config must be a JSON object")
    for section, values in user.items():
        if section not in cfg:
            raise ConfigError(f"{p}: unknown section {section!r}")
        if not isinstance(values, dict):
            raise ConfigError(f"{p}: section {section!r} must be an object")
        for key, v in values.items():
            if key not in cfg[section]:
                raise ConfigError(f"{p}: unknown key {section}.{key}")
            cfg[section][key] = v
    return cfg


def _build(cls, values: dict, section: str):
    names = {f.name for f in fields(cls)}
    try:
        return cls(**{k: v for k, v in values.items() if k in names})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config section {section!r}: {exc}") from exc


def _calibration(cfg: dict) -> Calibration:
    c = cfg["calibration"]
    try:
        return default_calibration(
            focal=float(c["focal"]), baseline=float(c["baseline"]), theta=float(c["theta"]),
            width=int(c["width"]), height=int(c["height"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config section 'calibration': {exc}") from exc


def _walker(cfg: dict, seed: int) -> WalkerConfig:
    w = dict(cfg["walker"], seed=seed)
    try:
        return WalkerConfig.from_dict(w)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config section 'walker': {exc}") from exc


def _write_json(path: Path, data) -> None:
    atomic_write(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


# -- subcommands ---------------------------------------------------------------

def cmd_simulate(args, cfg) -> int:
    out = Path(args.out)
    calib = _calibration(cfg)
    noise = _build(NoiseModel, cfg["noise"], "noise")
    if args.dataset:
        from .ident import write_dataset

        cycles = persona_cycles(int(cfg["dataset"]["cycles_per_persona"]), args.seed, calib=calib)
        write_dataset(cycles, out)
        print(f"wrote {len(cycles)} walking cycles ({sum(len(s) for _, _, s in cycles)} steps) to {out}")
        return EXIT_OK
    walker = _walker(cfg, args.seed)
    trace = simulate_walk(walker)
    rc = walker.rig_config(calib.theta)
    log = observe(trace, calib, rc, noise, seed=args.seed)
    write_log(log, calib, out, {"truth": "truth.csv", "walker": walker.to_dict(), "noise": asdict(noise)})
    write_steps(trace.true_steps, out / "truth.csv")
    print(f"simulated {len(trace.true_steps)} steps; observation log in {out}")
    return EXIT_OK


def cmd_process(args, cfg) -> int:
    log, calib = read_log(args.log)
    tcfg = _build(TemporalConfig, cfg["temporal"], "temporal")
    truth = read_steps(args.truth) if args.truth else None
    report = process(log, calib, log.rig_config, tcfg, truth)
    out = Path(args.out)
    atomic_write(out / "report.json", report.to_json())
    atomic_write(out / "report.txt", report.to_text())
    write_steps(report.steps, out / "steps.csv")
    print(report.to_text(), end="")
    return EXIT_OK


def cmd_drift(args, cfg) -> int:
    calib = _calibration(cfg)
    noise = _build(NoiseModel, cfg["noise"], "noise")
    d = cfg["drift"]
    base = _walker(cfg, args.seed)
    results = []
    for i in range(int(d["seeds"])):
        walker = WalkerConfig.from_dict(
            dict(base.to_dict(), seed=args.seed + i, route=loop_route(float(d["route_scale"])))
        )
        report, trace = run_walk(walker, calib, noise, seed=args.seed + i)
        results.append(drift_study(report, trace.true_steps, int(d["k"])).to_dict())
    summary = {
        "runs": results,
        "mean_drift": float(np.mean([r["mean_drift"] for r in results])),
        "max_drift": float(np.max([r["mean_drift"] for r in results])),
    }
    _write_json(Path(args.out) / "drift.json", summary)
    for i, r in enumerate(results):
        print(f"run {i}: mean drift {r['mean_drift']:.4f}%  trend {r['trend']}  "
              f"decline detected: {r['decline_detected']}")
    print(f"mean drift over {len(results)} run(s): {summary['mean_drift']:.4f}%")
    return EXIT_OK


def cmd_identify(args, cfg) -> int:
    from .ident import TrainConfig, read_dataset, save_checkpoint, shuffled_labels, train_kfold

    data = read_dataset(args.dataset)
    tc = _build(TrainConfig, dict(cfg["train"], seed=args.seed), "train")
    if args.shuffle_labels:
        data = shuffled_labels(data, args.seed)
    res = train_kfold(data, tc)
    out = Path(args.out)
    _write_json(out / "kfold.json", res.to_dict())
    save_checkpoint(res.model, out / "model.ckpt", res.standardizer)
    print(f"mean accuracy {100 * res.mean_accuracy:.2f}% over {tc.folds} folds")
    print("confusion matrix (rows: true, columns: predicted):")
    for row in res.confusion:
        print(" ".join(f"{v:4d}" for v in row))
    return EXIT_OK


def cmd_calib_check(args, cfg) -> int:
    calib = load_calibration(args.calibration)
    a = cfg["audit"]
    fixture = checkerboard_fixture(
        calib, seed=args.seed, noise_px=float(a["noise_px"]), n_poses=int(a["n_poses"]),
        distances=tuple(float(x) for x in a["distances"]),
    )
    stats = audit(calib, fixture)
    result = {"rms_px": stats.rms, "max_px": stats.max, "n_poses": int(a["n_poses"]),
              "noise_px": float(a["noise_px"])}
    _write_json(Path(args.out) / "audit.json", result)
    print(f"reprojection RMS {stats.rms:.4f} px (max {stats.max:.4f} px)")
    return EXIT_OK


def cmd_render_marker(args, cfg) -> int:
    m = cfg["marker"]
    img = render_marker(
        (int(m["width"]), int(m["height"])), PixelPoint(float(m["u"]), float(m["v"])),
        float(m["scale"]), float(m["rotation"]), float(m["noise_sigma"]), args.seed,
        float(m["tilt"]), float(m["blur_sigma"]),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_pgm(img, out / "marker.pgm")
    _write_json(out / "marker.json", {"center": [float(m["u"]), float(m["v"])], **m, "seed": args.seed})
    print(f"rendered marker at ({m['u']}, {m['v']}) to {out / 'marker.pgm'}")
    return EXIT_OK


def cmd_detect_marker(args, cfg) -> int:
    try:
        img = read_pgm(args.image)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{args.image}: {exc}") from exc
    det = detect_center(img, int(cfg["marker"]["radius"]))
    result = {
        "found": det.found,
        "confidence": det.confidence,
        "center": None if det.center is None else [det.center.u, det.center.v],
    }
    _write_json(Path(args.out) / "detection.json", result)
    if det.found:
        print(f"marker at ({det.center.u:.3f}, {det.center.v:.3f}) confidence {det.confidence:.3f}")
    else:
        print(f"no marker found (confidence {det.confidence:.3f})")
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--config", help="JSON config file overriding defaults")
    common.add_argument("--out", default="out", help="output directory (default ./out)")
    common.add_argument("--print-config", action="store_true",
                        help="print the effective configuration and exit")

    p = argparse.ArgumentParser(prog="gaitstereo", description="Stereo-wearable gait analysis tools.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="simulate a walk and write its observation log")
    s.add_argument("--dataset", action="store_true",
                   help="write the six-persona identification dataset instead")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("process", parents=[common], help="observation log -> gait report")
    s.add_argument("log", help="observation log directory")
    s.add_argument("--truth", help="StepRecord CSV with ground truth (adds an accuracy table)")
    s.set_defaults(func=cmd_process)

    s = sub.add_parser("drift", parents=[common], help="long-walk drift study")
    s.set_defaults(func=cmd_drift)

    s = sub.add_parser("identify", parents=[common], help="k-fold participant identification")
    s.add_argument("dataset", help="dataset directory (StepRecord CSVs + manifest.json)")
    s.add_argument("--shuffle-labels", action="store_true", help="permute labels (chance baseline)")
    s.set_defaults(func=cmd_identify)

    s = sub.add_parser("calib-check", parents=[common], help="reprojection audit of a calibration")
    s.add_argument("calibration", help="calibration JSON file")
    s.set_defaults(func=cmd_calib_check)

    s = sub.add_parser("render-marker", parents=[common], help="render a synthetic marker image")
    s.set_defaults(func=cmd_render_marker)

    s = sub.add_parser("detect-marker", parents=[common], help="find the marker centre in a PGM")
    s.add_argument("image", help="binary PGM image")
    s.set_defaults(func=cmd_detect_marker)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = load_config(args.config)
        if args.print_config:
            print(json.dumps(cfg, indent=2, sort_keys=True))
            return EXIT_OK
        return args.func(args, copy.deepcopy(cfg))
    except (GaitError, ValueError) as exc:
        print(f"gaitstereo {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - last-resort handler for the exit-code contract
        print(f"gaitstereo {args.command}: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
