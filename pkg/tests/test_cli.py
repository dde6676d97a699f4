from __future__ import annotations

import json
from pathlib import Path

import pytest

from fpm2d.cli import EXIT_OK, EXIT_USAGE, EXIT_WARNING, main

DATA = Path(__file__).resolve().parents[1] / "data"


@pytest.fixture(autouse=True)
def out_root(tmp_path, monkeypatch):
    monkeypatch.setenv("FPM_OUTPUT_ROOT", str(tmp_path))
    return tmp_path


def _report(root, name):
    return json.loads((root / name / "report.json").read_text())


def test_solve_patch_writes_artifacts(out_root):
    assert main(["solve", "--benchmark", "patch", "--points", "3x3", "-o", "p"]) == EXIT_OK
    rep = _report(out_root, "p")
    assert rep["r_u"] < 1e-6
    for f in ("field.vtk", "field.csv", "config.json"):
        assert (out_root / "p" / f).exists()
    cfg = json.loads((out_root / "p" / "config.json").read_text())
    assert cfg["benchmark"] == "patch" and cfg["order"] == 1 and cfg["resolution"] == "3x3"


def test_random_runs_are_bit_identical(out_root):
    args = ["solve", "--benchmark", "patch", "--points", "25", "--option", "layout=random", "--seed", "7"]
    assert main(args + ["-o", "a"]) == EXIT_OK
    assert main(args + ["-o", "b"]) == EXIT_OK
    assert (out_root / "a" / "field.csv").read_bytes() == (out_root / "b" / "field.csv").read_bytes()
    assert main(args[:-1] + ["8", "-o", "c"]) == EXIT_OK
    assert (out_root / "a" / "field.csv").read_bytes() != (out_root / "c" / "field.csv").read_bytes()


def test_config_file_is_overridden_by_flags(out_root, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"benchmark": "patch", "resolution": "4x4", "order": 2, "output": "cfg"}))
    assert main(["solve", "--config", str(cfg), "--order", "1"]) == EXIT_OK
    echoed = json.loads((out_root / "cfg" / "config.json").read_text())
    assert echoed["order"] == 1 and echoed["resolution"] == "4x4"


def test_unknown_config_key_is_rejected(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"benchmark": "patch", "colour": 3}))
    assert main(["solve", "--config", str(cfg)]) == EXIT_USAGE
    assert "unknown config keys" in capsys.readouterr().err


@pytest.mark.parametrize("argv,msg", [
    (["fracture", "--benchmark", "mode1_square", "--order", "2", "--criterion", "ber_initiation"], "linear trials"),
    (["solve", "--benchmark", "patch", "--eta", "0"], "positive"),
    (["solve", "--benchmark", "patch", "--eta-abs", "-1"], "positive"),
    (["converge", "--benchmark", "patch", "--resolutions", "3x3"], "two resolutions"),
    (["solve"], "exactly one"),
])
def test_validation_errors(argv, msg, capsys):
    assert main(argv) == EXIT_USAGE
    assert msg in capsys.readouterr().err


def test_converge_patch_and_ring(out_root):
    assert main(["converge", "--benchmark", "patch", "--resolutions", "3x3", "5x5", "-o", "pc"]) == EXIT_OK
    rep = _report(out_root, "pc")
    assert max(rep["r_u"]) < 1e-6 and max(rep["r_E"]) < 1e-6
    assert main(["converge", "--benchmark", "ring_quarter", "--resolutions", "15x11", "15x16", "15x21",
                 "-o", "rc"]) == EXIT_OK
    rep = _report(out_root, "rc")
    assert rep["monotone_r_u"] and rep["monotone_r_E"]
    lines = (out_root / "rc" / "convergence.csv").read_text().splitlines()
    assert lines[0] == "resolution,n_points,h,r_u,r_E" and len(lines) == 4


def test_solve_imported_mesh(out_root):
    assert main(["solve", "--mesh", str(DATA / "wrench.inp"), "--edge-box", "jaw=12,0.5,14,1.5",
                 "--bc", "jaw:u1=0,u2=0", "--edge-box", "end=0,0,0,2", "--bc", "end:t2=-1", "-o", "w"]) == EXIT_OK
    header = (out_root / "w" / "field.vtk").read_text().splitlines()[:4]
    assert header[3] == "DATASET UNSTRUCTURED_GRID"
    assert main(["solve", "--mesh", str(DATA / "wrench.fpm"), "-o", "w2"]) == EXIT_OK


def test_fracture_artifacts_and_warning_exit(out_root, capsys):
    assert main(["fracture", "--benchmark", "mode1_square", "--points", "12x12", "--steps", "2", "-o", "m"]) == EXIT_OK
    d = out_root / "m"
    assert (d / "step_0001.vtk").exists() and (d / "step_0002.vtk").exists()
    assert (d / "crack_paths.txt").exists()
    assert len((d / "history.csv").read_text().splitlines()) == 3
    code = main(["fracture", "--benchmark", "hole_plate", "--option", 'control="traction"', "--option", "n=21",
                 "--criterion", "hoop_initiation", "--threshold", "1", "--steps", "10", "--peak", "0.6",
                 "--no-snapshots", "-o", "t"])
    assert code == EXIT_WARNING
    assert "disconnected" in capsys.readouterr().err
    assert _report(out_root, "t")["disconnection"]["step"] >= 1


def test_import_check(capsys):
    assert main(["import-check", str(DATA / "wrench.fpm")]) == EXIT_OK
    rep = json.loads(capsys.readouterr().out)
    assert rep["elements"] == 152 and rep["boundary_tags"]["jaw"] == 10
    assert main(["import-check", str(DATA / "missing.fpm")]) != EXIT_OK
