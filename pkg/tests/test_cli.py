import csv
import json

import pytest
from typer.testing import CliRunner

from overdet_lab.cli import app, run_command

from conftest import GOLDEN_DIR

runner = CliRunner()


def invoke(*args):
    return runner.invoke(app, [str(a) for a in args])


def test_radial_command(tmp_path):
    result = invoke("radial", "--n", "2,3", "--out", tmp_path)
    assert result.exit_code == 0, result.output
    rows = json.loads((tmp_path / "radial.json").read_text())["rows"]
    assert [row["n"] for row in rows] == [2, 3]
    checks = json.loads((tmp_path / "checks.json").read_text())
    assert all(check["passed"] for check in checks)


def test_solve_disk(tmp_path):
    result = invoke("solve", "--shape", "disk", "--n-r", 16, "--n-theta", 32, "--out", tmp_path)
    assert result.exit_code == 0, result.output
    solution = json.loads((tmp_path / "solution.json").read_text())
    assert solution["resolution"] == [16, 32]
    with open(tmp_path / "u.csv", newline="") as f:
        assert sum(1 for _ in csv.reader(f)) == 16 * 32 + 1


def test_solve_accepts_short_resolution_flags(tmp_path):
    result = invoke("solve", "--shape", "disk", "--nr", 16, "--ntheta", 32, "--out", tmp_path)
    assert result.exit_code == 0, result.output
    assert json.loads((tmp_path / "solution.json").read_text())["resolution"] == [16, 32]


def test_verify_disk(tmp_path):
    result = invoke("verify", "--shape", "disk", "--n-r", 16, "--n-theta", 32, "--out", tmp_path)
    assert result.exit_code == 0, result.output
    reports = json.loads((tmp_path / "identities.json").read_text())
    assert reports[0]["name"] == "pucci_serrin"
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["c_choice"] == "mean"


def test_convergence_table(tmp_path):
    result = invoke("convergence", "--shape", "disk", "--problem", "radial_quartic", "--levels", 2,
                    "--out", tmp_path)
    assert result.exit_code == 0, result.output
    with open(tmp_path / "convergence.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert [(row["n_r"], row["n_theta"]) for row in rows] == [("8", "16"), ("16", "32")]


def test_goldens_check():
    result = invoke("goldens", "--check", "--dir", GOLDEN_DIR, "--only", "radial.json,exponents.json")
    assert result.exit_code == 0, result.output
    assert "goldens match" in result.output


def test_goldens_needs_one_mode():
    assert invoke("goldens").exit_code == 2
    assert invoke("goldens", "--write", "--check").exit_code == 2


def test_bad_config_is_a_usage_error(tmp_path):
    result = invoke("verify", "--n-theta", 15, "--out", tmp_path)
    assert result.exit_code == 2
    result = invoke("solve", "--shape", "cos9", "--out", tmp_path)
    assert result.exit_code == 2


def test_failed_golden_check_exits_one(tmp_path):
    (tmp_path / "radial.json").write_text('{"rows": []}\n')
    result = invoke("goldens", "--check", "--dir", tmp_path, "--only", "radial.json")
    assert result.exit_code == 1


def test_missing_golden_fails_the_check(tmp_path):
    result = invoke("goldens", "--check", "--dir", tmp_path, "--only", "radial.json")
    assert result.exit_code == 1
    assert "missing" in result.output


def test_run_command_returns_exit_codes(tmp_path):
    assert run_command(["radial", "--n", "2", "--out", str(tmp_path)]) == 0
    assert run_command(["goldens"]) == 2
    assert run_command(["verify", "--n-theta", "15"]) == 2


@pytest.mark.slow
def test_sweep_command(tmp_path):
    result = invoke("sweep", "--family", "cos2", "--eps", "0.04,0.02,0.01,0.005", "--p", "2,inf",
                    "--out", tmp_path)
    assert result.exit_code == 0, result.output
    with open(tmp_path / "sweep.csv", newline="") as f:
        assert len(list(csv.DictReader(f))) == 4
    fits = json.loads((tmp_path / "fits.json").read_text())
    assert [fit["p"] for fit in fits["fits"]] == [2, "inf"]
