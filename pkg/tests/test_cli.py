"""End-to-end command-line runs in subprocesses: exit codes and artifacts."""

import json
import math
import os
import shutil
import subprocess

import pytest

from relfluid.config import parse_config
from relfluid.output import CSV_HEADER, read_diagnostics, read_snapshot

RELFLUID = shutil.which("relfluid")

pytestmark = pytest.mark.skipif(RELFLUID is None, reason="console script not installed")


def run_cli(*args, cwd=None):
    return subprocess.run(
        [RELFLUID, *args],
        capture_output=True,
        text=True,
        cwd=cwd,
        timeout=300,
    )


def write_config(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


PLANAR = """\
mode = "run2d"
nx = 16
ny = 16
c = 5.0
initial_condition = "taylor_green"
amplitude = 0.4
t_end = 0.1
dt = 0.05
snapshot_every = 1
"""


def test_help_exits_zero():
    result = run_cli("--help")
    assert result.returncode == 0
    assert "run2d" in result.stdout and "bracket-check" in result.stdout


def test_planar_run_produces_complete_artifacts(tmp_path):
    config = write_config(tmp_path, "flow.txt", PLANAR)
    out = str(tmp_path / "out")
    result = run_cli("run2d", "--config", config, "--output", out)
    assert result.returncode == 0, result.stderr

    columns = read_diagnostics(os.path.join(out, "diagnostics.csv"))
    assert len(columns["t"]) == 3  # initial row + two steps
    assert columns["t"][-1] == pytest.approx(0.1, abs=1e-14)
    assert not any(math.isnan(v) for v in columns["H"])

    echoed = parse_config(os.path.join(out, "config.txt"))
    assert echoed.mode == "run2d" and echoed.dt == 0.05

    manifest = json.load(open(os.path.join(out, "manifest.json")))
    assert manifest["mode"] == "run2d"
    assert manifest["grid"]["dims"] == [16, 16]

    # snapshot_every = 1: psi and q at steps 0, 1, 2
    for step in (0, 1, 2):
        for field in ("psi", "q"):
            snap = read_snapshot(os.path.join(out, f"{field}_{step:06d}.bin"))
            assert snap.field == field and snap.dims == (16, 16)
    assert not os.path.exists(os.path.join(out, "error_manifest.json"))


def test_zero_horizon_records_only_the_initial_state(tmp_path):
    config = write_config(tmp_path, "flow.txt", PLANAR.replace("t_end = 0.1", "t_end = 0.0"))
    out = str(tmp_path / "out")
    assert run_cli("run2d", "--config", config, "--output", out).returncode == 0
    columns = read_diagnostics(os.path.join(out, "diagnostics.csv"))
    assert len(columns["t"]) == 1 and columns["t"][0] == 0.0


def test_reruns_are_byte_identical(tmp_path):
    config = write_config(tmp_path, "flow.txt", PLANAR)
    out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
    assert run_cli("run2d", "--config", config, "--output", out_a).returncode == 0
    assert run_cli("run2d", "--config", config, "--output", out_b).returncode == 0
    bytes_a = open(os.path.join(out_a, "diagnostics.csv"), "rb").read()
    bytes_b = open(os.path.join(out_b, "diagnostics.csv"), "rb").read()
    assert bytes_a == bytes_b


def test_seed_override_lands_in_the_config_echo(tmp_path):
    config = write_config(tmp_path, "flow.txt", PLANAR)
    out = str(tmp_path / "out")
    assert (
        run_cli("run2d", "--config", config, "--output", out, "--seed", "123").returncode
        == 0
    )
    assert parse_config(os.path.join(out, "config.txt")).seed == 123


def test_subcommand_and_mode_must_agree(tmp_path):
    config = write_config(tmp_path, "flow.txt", PLANAR)
    result = run_cli("run3d", "--config", config, "--output", str(tmp_path / "out"))
    assert result.returncode == 2
    assert "requires mode in" in result.stderr


def test_missing_config_file_is_a_usage_error(tmp_path):
    result = run_cli("run2d", "--config", str(tmp_path / "absent.txt"))
    assert result.returncode == 2
    assert "cannot read config" in result.stderr


def test_invalid_config_reports_every_problem(tmp_path):
    bad = PLANAR.replace("nx = 16", "nx = 7").replace("c = 5.0", "cfl = 9.0\nc = 5.0")
    config = write_config(tmp_path, "flow.txt", bad)
    result = run_cli("run2d", "--config", config)
    assert result.returncode == 2
    assert "configuration error" in result.stderr
    assert "nx = 7" in result.stderr and "cfl = 9.0" in result.stderr


def test_model_error_exits_3_and_leaves_an_error_manifest(tmp_path):
    # one Picard sweep cannot meet a 1e-13 target at half light speed
    text = """\
mode = "run2d"
nx = 24
ny = 24
c = 1.0
initial_condition = "random"
amplitude = 0.5
spectrum_peak = 1.0
t_end = 0.1
dt = 0.05
tol = 1e-13
max_iter = 1
"""
    config = write_config(tmp_path, "diverge.txt", text)
    out = str(tmp_path / "out")
    result = run_cli("run2d", "--config", config, "--output", out)
    assert result.returncode == 3
    assert "model error: InverterDiverged" in result.stdout
    doc = json.load(open(os.path.join(out, "error_manifest.json")))
    assert doc["error"] == "InverterDiverged"
    assert doc["steps_completed"] == 0
    # the initial record survives the abort
    assert len(read_diagnostics(os.path.join(out, "diagnostics.csv"))["t"]) == 1


def test_bracket_check_cli_passes_every_row(tmp_path):
    text = 'mode = "bracket_check"\nnx = 16\nny = 16\nnz = 16\nc = 2.0\nk = 1.3\nseed = 7\n'
    config = write_config(tmp_path, "check.txt", text)
    out = str(tmp_path / "out")
    result = run_cli("bracket-check", "--config", config, "--output", out)
    assert result.returncode == 0, result.stdout
    report = json.load(open(os.path.join(out, "bracket_report.json")))
    assert len(report["rows"]) == 12
    assert all(row["pass"] for row in report["rows"])
    assert result.stdout.count("pass") == 12 and "FAIL" not in result.stdout


def test_limit_study_cli_reports_inverse_square_convergence(tmp_path):
    text = """\
mode = "limit_study"
nx = 16
ny = 16
initial_condition = "taylor_green"
amplitude = 0.5
t_end = 0.05
dt = 0.025
"""
    config = write_config(tmp_path, "sweep.txt", text)
    out = str(tmp_path / "out")
    result = run_cli("limit-study", "--config", config, "--output", out)
    assert result.returncode == 0, result.stderr
    report = json.load(open(os.path.join(out, "limit_report.json")))
    errors = report["l2_error_vs_classical"]
    assert errors["1000"] > errors["10000"] > 0.0
    assert report["observed_ratio"] == pytest.approx(100.0, rel=0.2)
    for c in ("classical", "c_1000", "c_10000"):
        assert os.path.exists(os.path.join(out, c, "diagnostics.csv"))


def test_baroclinic_cli_writes_both_budgets(tmp_path):
    text = """\
mode = "baroclinic"
nx = 16
ny = 16
nz = 16
c = 3.0
initial_condition = "random"
amplitude = 0.1
spectrum_peak = 1.0
t_end = 0.02
dt = 0.005
"""
    config = write_config(tmp_path, "budget.txt", text)
    out = str(tmp_path / "out")
    result = run_cli("baroclinic", "--config", config, "--output", out)
    assert result.returncode == 0, result.stderr
    report = json.load(open(os.path.join(out, "budget_report.json")))
    assert len(report["helicity_budget"]) == 3
    assert len(report["enstrophy_budget"]) == 3
    # the 3D leg really is baroclinic: the source is alive and the
    # measured helicity drift tracks it
    assert all(abs(r["source"]) > 0.0 for r in report["helicity_budget"])
    assert report["helicity_budget"][0]["rel_mismatch"] < 1e-3
    vol = read_diagnostics(os.path.join(out, "volumetric", "diagnostics.csv"))
    plane = read_diagnostics(os.path.join(out, "planar", "diagnostics.csv"))
    assert not any(math.isnan(v) for v in vol["K_source"])
    assert not any(math.isnan(v) for v in plane["E_source"])
