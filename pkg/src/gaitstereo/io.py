"""File formats: event / FSR / stereo / step-record CSVs and observation-log directories.

Every reader reports the file and line of the first bad row via
:class:`~gaitstereo.errors.ParseError`.  Writers are deterministic so the
same inputs always produce byte-identical files.
"""
from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .calibration import Calibration, load_calibration, save_calibration
from .errors import ParseError
from .spatial import RigConfig, StepRecord
from .sync import estimate_from_report, sync_report
from .temporal import FEET, FootfallEvent, FsrTrace

EVENT_COLUMNS = ("foot", "kind", "t_seconds")
FSR_COLUMNS = ("foot", "t_seconds", "contact")
STEREO_COLUMNS = ("step_index", "foot", "t_device", "u1", "v1", "u2", "v2", "found")
STEP_COLUMNS = (
    "step_index", "foot", "t", "gait_length", "gait_width", "gait_height", "stride_length",
    "step_time", "stride_time", "swing_time", "standing_time", "single_support",
    "double_support", "stride_velocity",
)
MANIFEST = "manifest.json"
CALIBRATION = "calibration.json"
STEREO = "stereo.csv"
SYNC = "sync.json"


def atomic_write(path, data) -> None:
    """Write text or bytes to ``path`` through a temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _read_rows(path, columns):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: cannot read ({exc.strerror})") from exc
    reader = csv.reader(_io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != tuple(columns):
        raise ParseError(f"{path}:1: expected header {','.join(columns)}, got {header}")
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(columns):
            raise ParseError(f"{path}:{lineno}: expected {len(columns)} fields, got {len(row)}")
        yield lineno, dict(zip(columns, (c.strip() for c in row)))


def _float(path, lineno, row, name, optional=False):
    raw = row[name]
    if raw == "" and optional:
        return None
    try:
        v = float(raw)
    except ValueError:
        raise ParseError(f"{path}:{lineno}: field {name!r}: {raw!r} is not a number") from None
    if not np.isfinite(v):
        raise ParseError(f"{path}:{lineno}: field {name!r} is not finite")
    return v


def _foot(path, lineno, row):
    if row["foot"] not in FEET:
        raise ParseError(f"{path}:{lineno}: field 'foot': {row['foot']!r} is not left/right")
    return row["foot"]


def _num(v: Optional[float]) -> str:
    return "" if v is None else repr(float(v))


# -- events and FSR traces -----------------------------------------------------

def write_events(events: Iterable[FootfallEvent], path) -> None:
    atomic_write(path, _csv_text(EVENT_COLUMNS, ((e.foot, e.kind, f"{e.t:.6f}") for e in events)))


def read_events(path) -> list[FootfallEvent]:
    out = []
    for lineno, row in _read_rows(path, EVENT_COLUMNS):
        foot = _foot(path, lineno, row)
        t = _float(path, lineno, row, "t_seconds")
        try:
            out.append(FootfallEvent(foot, row["kind"], t))
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
    return out


def write_fsr(trace: FsrTrace, path) -> None:
    rows = ((trace.foot, f"{t:.6f}", int(c)) for t, c in zip(trace.t, trace.contact))
    atomic_write(path, _csv_text(FSR_COLUMNS, rows))


def read_fsr(path) -> FsrTrace:
    feet, ts, cs = set(), [], []
    for lineno, row in _read_rows(path, FSR_COLUMNS):
        feet.add(_foot(path, lineno, row))
        ts.append(_float(path, lineno, row, "t_seconds"))
        if row["contact"] not in ("0", "1"):
            raise ParseError(f"{path}:{lineno}: field 'contact' must be 0 or 1")
        cs.append(row["contact"] == "1")
        if len(ts) > 1 and ts[-1] <= ts[-2]:
            raise ParseError(f"{path}:{lineno}: t_seconds not strictly increasing")
    if len(feet) != 1:
        raise ParseError(f"{path}: trace must contain exactly one foot, found {sorted(feet)}")
    return FsrTrace(feet.pop(), np.array(ts), np.array(cs))


# -- step records --------------------------------------------------------------

def steps_csv(steps: Iterable[StepRecord]) -> str:
    rows = (
        [s.step_index, s.foot, _num(s.t)] + [_num(getattr(s, c)) for c in STEP_COLUMNS[3:]]
        for s in steps
    )
    return _csv_text(STEP_COLUMNS, rows)


def write_steps(steps: Iterable[StepRecord], path) -> None:
    atomic_write(path, steps_csv(steps))


def read_steps(path) -> list[StepRecord]:
    out = []
    for lineno, row in _read_rows(path, STEP_COLUMNS):
        try:
            idx = int(row["step_index"])
        except ValueError:
            raise ParseError(f"{path}:{lineno}: field 'step_index' is not an integer") from None
        rec = StepRecord(idx, _foot(path, lineno, row), _float(path, lineno, row, "t"))
        for c in STEP_COLUMNS[3:]:
            setattr(rec, c, _float(path, lineno, row, c, optional=True))
        rec.gait_cycle_time = rec.stride_time
        rec.spatial_missing = rec.gait_length is None
        out.append(rec)
    return out


# -- observation logs ----------------------------------------------------------

def _stereo_rows(stereo):
    for o in stereo:
        if o.found:
            px = [repr(o.uv1[0]), repr(o.uv1[1]), repr(o.uv2[0]), repr(o.uv2[1])]
        else:
            px = ["", "", "", ""]
        yield [o.capture_index, o.foot, f"{o.t_device:.6f}"] + px + [int(o.found)]


def write_log(log, calib: Calibration, out_dir, extra_manifest: Optional[dict] = None) -> Path:
    """Write an observation log directory (FSR CSVs, stereo CSV, sync JSON, manifest)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for foot, trace in log.fsr.items():
        write_fsr(trace, out / f"fsr_{foot}.csv")
    atomic_write(out / STEREO, _csv_text(STEREO_COLUMNS, _stereo_rows(log.stereo)))
    atomic_write(out / SYNC, json.dumps(sync_report(log.sync), indent=2, sort_keys=True) + "\n")
    save_calibration(calib, out / CALIBRATION)
    cfg = log.rig_config or RigConfig()
    manifest = {
        "calibration": CALIBRATION,
        "fsr": {foot: f"fsr_{foot}.csv" for foot in log.fsr},
        "stereo": STEREO,
        "sync": SYNC,
        "seed": log.seed,
        "image_width": log.image_width,
        "image_height": log.image_height,
        "rig_config": {
            "foot_length": cfg.foot_length,
            "initial_height_offset": cfg.initial_height_offset,
            "theta": cfg.theta,
        },
    }
    manifest.update(extra_manifest or {})
    atomic_write(out / MANIFEST, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def read_manifest(log_dir) -> dict:
    path = Path(log_dir) / MANIFEST
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"{path}: cannot read ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from exc


def read_stereo(path):
    from .simulator import StereoObservation

    out = []
    for lineno, row in _read_rows(path, STEREO_COLUMNS):
        foot = _foot(path, lineno, row)
        t = _float(path, lineno, row, "t_device")
        if row["found"] not in ("0", "1"):
            raise ParseError(f"{path}:{lineno}: field 'found' must be 0 or 1")
        try:
            idx = int(row["step_index"])
        except ValueError:
            raise ParseError(f"{path}:{lineno}: field 'step_index' is not an integer") from None
        if row["found"] == "1":
            u1, v1, u2, v2 = (_float(path, lineno, row, c) for c in ("u1", "v1", "u2", "v2"))
            out.append(StereoObservation(idx, foot, t, (u1, v1), (u2, v2)))
        else:
            out.append(StereoObservation(idx, foot, t, None, None))
    return out


def read_log(log_dir):
    """Load an observation-log directory; returns ``(ObservationLog, Calibration)``."""
    from .simulator import ObservationLog

    d = Path(log_dir)
    m = read_manifest(d)
    try:
        calib = load_calibration(d / m["calibration"])
        fsr = {foot: read_fsr(d / name) for foot, name in m["fsr"].items()}
        stereo = read_stereo(d / m["stereo"])
        sync_path = d / m["sync"]
        rc = m["rig_config"]
        width, height, seed = int(m["image_width"]), int(m["image_height"]), int(m["seed"])
    except KeyError as exc:
        raise ParseError(f"{d / MANIFEST}: missing field {exc.args[0]!r}") from None
    for foot, trace in fsr.items():
        if trace.foot != foot:
            raise ParseError(f"{d / m['fsr'][foot]}: holds the {trace.foot} foot, manifest says {foot}")
    try:
        report = json.loads(sync_path.read_text(encoding="utf-8"))
        sync = {foot: estimate_from_report(e) for foot, e in report["devices"].items()}
    except OSError as exc:
        raise ParseError(f"{sync_path}: cannot read ({exc.strerror})") from exc
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{sync_path}: malformed sync report ({exc})") from exc
    cfg = RigConfig(
        float(rc["foot_length"]), float(rc["initial_height_offset"]), float(rc["theta"])
    )
    return ObservationLog(fsr, stereo, sync, width, height, seed, cfg), calib

