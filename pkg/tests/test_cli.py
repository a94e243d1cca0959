import json
import os
import shutil

from gaitstereo import cli
from gaitstereo.io import read_steps
from oracle import closure_errors

GOLDEN_LOG = os.path.join(os.path.dirname(__file__), "fixtures", "golden_log")
GOLDEN_REPORT = os.path.join(os.path.dirname(__file__), "fixtures", "golden_report.json")


def run(*argv):
    return cli.main([str(a) for a in argv])


def write_config(path, data):
    path.write_text(json.dumps(data))
    return path


def tree(d):
    return {
        os.path.relpath(os.path.join(root, f), d): open(os.path.join(root, f), "rb").read()
        for root, _, files in os.walk(d)
        for f in files
    }


def test_simulate_byte_identical(tmp_path):
    assert run("simulate", "--seed", 7, "--out", tmp_path / "a") == 0
    assert run("simulate", "--seed", 7, "--out", tmp_path / "b") == 0
    a, b = tree(tmp_path / "a"), tree(tmp_path / "b")
    assert a == b and "truth.csv" in a and "stereo.csv" in a


def test_process_matches_golden_report(tmp_path):
    code = run("process", GOLDEN_LOG, "--truth", os.path.join(GOLDEN_LOG, "truth.csv"), "--out", tmp_path)
    assert code == 0
    with open(GOLDEN_REPORT, "rb") as f:
        assert (tmp_path / "report.json").read_bytes() == f.read()


def test_cli_noiseless_closure(tmp_path):
    zero = {"noise": {"pixel_sigma": 0.0, "clock_jitter_sigma": 0.0,
                      "clock_offset_left": 0.2, "clock_offset_right": -0.1}}
    cfg = write_config(tmp_path / "c.json", zero)
    assert run("simulate", "--seed", 3, "--config", cfg, "--out", tmp_path / "log") == 0
    assert run("process", tmp_path / "log", "--out", tmp_path / "rep") == 0
    measured = read_steps(tmp_path / "rep" / "steps.csv")
    truth = read_steps(tmp_path / "log" / "truth.csv")
    assert closure_errors(measured, truth) == []


def test_identify_prints_confusion(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", {
        "dataset": {"cycles_per_persona": 2},
        "train": {"folds": 2, "epochs": 1, "d_model": 8, "n_heads": 2, "n_layers": 1, "d_ff": 16},
    })
    assert run("simulate", "--dataset", "--config", cfg, "--out", tmp_path / "ds") == 0
    capsys.readouterr()
    assert run("identify", tmp_path / "ds", "--config", cfg, "--out", tmp_path / "id") == 0
    out = capsys.readouterr().out
    assert "mean accuracy" in out
    rows = [line for line in out.splitlines() if line.strip() and line.split()[0].isdigit()]
    assert len(rows) == 6 and all(len(r.split()) == 6 for r in rows)
    k = json.loads((tmp_path / "id" / "kfold.json").read_text())
    assert len(k["confusion"]) == 6 and (tmp_path / "id" / "model.ckpt").exists()


def test_calib_check(tmp_path):
    shutil.copy(os.path.join(GOLDEN_LOG, "calibration.json"), tmp_path / "cal.json")
    assert run("calib-check", tmp_path / "cal.json", "--out", tmp_path) == 0
    audit = json.loads((tmp_path / "audit.json").read_text())
    assert 0.2 <= audit["rms_px"] <= 0.45


def test_marker_round_trip(tmp_path):
    assert run("render-marker", "--seed", 2, "--out", tmp_path) == 0
    assert run("detect-marker", tmp_path / "marker.pgm", "--out", tmp_path) == 0
    det = json.loads((tmp_path / "detection.json").read_text())
    truth = json.loads((tmp_path / "marker.json").read_text())["center"]
    assert det["found"]
    assert abs(det["center"][0] - truth[0]) < 1 and abs(det["center"][1] - truth[1]) < 1


def test_drift(tmp_path):
    assert run("drift", "--out", tmp_path) == 0
    d = json.loads((tmp_path / "drift.json").read_text())
    assert d["mean_drift"] < 4.89 and len(d["runs"]) == 1


def test_print_config_lists_defaults(capsys):
    assert run("process", "x", "--print-config") == 0
    cfg = json.loads(capsys.readouterr().out)
    assert cfg == cli.default_config()
    assert cfg["temporal"]["debounce"] == 0.08 and cfg["train"]["window"] == 128


def test_unknown_flag_exit_2(capsys):
    assert run("simulate", "--bogus") == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_config_key_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", {"noise": {"pixel_noise": 1}})
    assert run("simulate", "--config", cfg, "--out", tmp_path) == 2
    assert "noise.pixel_noise" in capsys.readouterr().err


def test_invalid_config_value_exit_2(tmp_path):
    cfg = write_config(tmp_path / "c.json", {"walker": {"gait_length_mean": -1}})
    assert run("simulate", "--config", cfg, "--out", tmp_path) == 2


def test_corrupt_log_exit_2(tmp_path, capsys):
    shutil.copytree(GOLDEN_LOG, tmp_path / "log")
    p = tmp_path / "log" / "fsr_left.csv"
    lines = p.read_text().splitlines()
    lines[5] = "left,oops,1"
    p.write_text("\n".join(lines) + "\n")
    assert run("process", tmp_path / "log", "--out", tmp_path / "r") == 2
    assert "fsr_left.csv:6" in capsys.readouterr().err


def test_internal_error_exit_1(tmp_path, monkeypatch):
    def boom(args, cfg):
        raise RuntimeError("boom")

    monkeypatch.setattr(cli, "cmd_drift", boom)
    assert run("drift", "--out", tmp_path) == 1
