import json

import numpy as np
import pytest

import wavelab as wl
from wavelab import io
from wavelab.cli import (EXIT_OK, EXIT_SOLVER, EXIT_VALIDATION,
                         config_reference, main)


def run(argv):
    return main(argv)


def test_p0_command(tmp_path, capsys):
    code = run(["--out", str(tmp_path), "p0"])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "4.2280673976" in out
    report = json.loads((tmp_path / "p0_report.json").read_text())
    assert abs(report["p0"] - 4.2280673976) < 1e-8
    assert report["exit_code"] == 0
    assert report["config"]["params"]["b"] == pytest.approx(1 / 12)


def test_kdv_check_command(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kdv_check": {"p_values": [1.0], "m_values": [1 / 6]}}))
    code = run(["--config", str(cfg), "--out", str(tmp_path), "kdv-check"])
    assert code == EXIT_OK
    report = json.loads((tmp_path / "kdv_check_report.json").read_text())
    assert all(c["passed"] for c in report["checks"])
    assert report["cases"][0]["w0_l2"]["discrepancy_flag"] is True


def test_solve_command_and_report(tmp_path):
    code = run(["--out", str(tmp_path), "solve", "--omega", "0.9"])
    assert code == EXIT_OK
    report = json.loads((tmp_path / "solve_report.json").read_text())
    assert report["wave"]["residual_norm"] <= 1e-10
    assert all(c["passed"] for c in report["checks"])
    # the written state reloads cleanly
    U, meta, warns = io.read_state(tmp_path / "wave_omega0.9.csv")
    assert warns == []
    assert meta["omega"] == 0.9


def test_solve_rejects_bad_params(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"params": {"a": 0.1, "b": 1 / 12, "c": -1 / 6, "p": 1.0}}))
    code = run(["--config", str(cfg), "--out", str(tmp_path), "solve", "--omega", "0.9"])
    assert code == EXIT_VALIDATION


def test_unknown_config_key_rejected(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"params": {"a": -1 / 6, "b": 1 / 12, "c": -1 / 6, "p": 1.0},
                               "grdi": {"L": 60}}))
    code = run(["--config", str(cfg), "--out", str(tmp_path), "solve", "--omega", "0.9"])
    assert code == EXIT_VALIDATION


def test_malformed_config_json(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    code = run(["--config", str(cfg), "--out", str(tmp_path), "p0"])
    assert code == EXIT_VALIDATION


def test_omega_outside_window(tmp_path):
    code = run(["--out", str(tmp_path), "solve", "--omega", "1.5"])
    assert code == EXIT_VALIDATION


def test_branch_then_dcurve_then_stability(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"grid": {"L": 130.0, "N": 512},
                               "experiment": {"T": 2.0, "amplitude": 0.01,
                                              "kind": "bump", "seed": 0,
                                              "threshold_factor": 10.0}}))
    omegas = ",".join(str(round(0.947 + 0.001 * i, 6)) for i in range(7))
    code = run(["--config", str(cfg), "--out", str(tmp_path), "branch", "--omegas", omegas])
    assert code == EXIT_OK
    branch_csv = tmp_path / "branch.csv"
    assert branch_csv.exists()

    code = run(["--config", str(cfg), "--out", str(tmp_path), "dcurve",
                "--branch", str(branch_csv)])
    assert code == EXIT_OK
    report = json.loads((tmp_path / "dcurve_report.json").read_text())
    assert report["convexity"]["numeric_signs"] == [1, 1, 1]

    code = run(["--config", str(cfg), "--out", str(tmp_path), "stability",
                "--omega", "0.95", "--perturb", "bump", "--amplitude", "0.01",
                "--T", "2.0", "--branch", str(branch_csv)])
    assert code == EXIT_OK
    report = json.loads((tmp_path / "stability_report.json").read_text())
    assert report["experiment"]["verdict"] == "stable-run"
    assert report["shatah"]["satisfied"] is True


def test_evolve_command(tmp_path):
    run(["--out", str(tmp_path), "solve", "--omega", "0.9"])
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"evolution": {"T": 1.0, "dt": "auto", "cfl_safety": 0.5,
                                             "dealias": True, "monitor_stride": 20}}))
    code = run(["--config", str(cfg), "--out", str(tmp_path), "evolve",
                "--init", str(tmp_path / "wave_omega0.9.csv"), "--T", "1.0"])
    assert code == EXIT_OK
    report = json.loads((tmp_path / "evolve_report.json").read_text())
    assert report["evolution"]["h_drift"] <= 1e-8
    assert (tmp_path / "trace.csv").exists()


def test_missing_init_file(tmp_path):
    code = run(["--out", str(tmp_path), "evolve", "--init",
                str(tmp_path / "nope.csv"), "--T", "1.0"])
    assert code == EXIT_VALIDATION


def test_config_reference_lists_defaults():
    ref = json.loads(config_reference())
    assert ref["solver"]["tol"] == 1e-12
    assert ref["grid"] == {"L": "auto", "N": "auto"}


def test_print_config_reference(capsys):
    assert run(["--print-config-reference"]) == EXIT_OK
    out = capsys.readouterr().out
    assert '"solver"' in out


def test_no_command_shows_help(capsys):
    assert run([]) == EXIT_VALIDATION
