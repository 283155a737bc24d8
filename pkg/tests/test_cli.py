import json
from pathlib import Path

import pytest

import cli

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

TINY = """\
mesh_kind=rectangle
mesh_nx=3
mesh_ny=3
mechanics_dirichlet=bottom
residual_porosity=0.3
initial_content_n={phi_n}
initial_content_w={phi_w}
eps_schedule=0.1,0.01
time_step_s=0.01
n_steps=1
"""


@pytest.fixture(autouse=True)
def restore_log_level(monkeypatch):
    # --quiet rewrites LOG_LEVEL in the process environment
    monkeypatch.setenv("LOG_LEVEL", "WARNING")


def _document(tmp_path, extra="", phi_n="0.1", phi_w="0.2"):
    path = tmp_path / "tiny.env"
    path.write_text(TINY.format(phi_n=phi_n, phi_w=phi_w) + extra)
    return path


def test_check_shipped_scenario():
    assert cli.main(["check", str(SCENARIOS / "equilibrium.env"), "--quiet"]) == cli.EXIT_OK


def test_check_violation_exits_with_config_code(tmp_path, capsys):
    path = _document(tmp_path, "biot_coefficient=1.5\n")
    assert cli.main(["check", str(path), "--quiet"]) == cli.EXIT_CONFIG
    assert "(H1)" in capsys.readouterr().err


def test_parse_error_exits_with_config_code(tmp_path, capsys):
    path = _document(tmp_path, "not a setting\n")
    assert cli.main(["run", str(path), "--quiet"]) == cli.EXIT_CONFIG
    assert "line 11" in capsys.readouterr().err


def test_missing_document(tmp_path):
    assert cli.main(["check", str(tmp_path / "absent.env"), "--quiet"]) == cli.EXIT_CONFIG


def test_explain_without_document(capsys):
    assert cli.main(["check", "--explain", "--quiet"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    for label in ("(H1)", "(H2)", "(H7)"):
        assert label in out


def test_run_writes_outputs(tmp_path):
    path = _document(tmp_path)
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(path), "--out", str(out), "--quiet", "--seed", "3"]) == cli.EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "completed"
    assert manifest["seed"] == 3
    assert len((out / "series.csv").read_text().splitlines()) == 2


def test_overrides_applied(tmp_path):
    path = _document(tmp_path)
    out = tmp_path / "out"
    assert cli.main(["run", str(path), "--out", str(out), "--quiet", "--steps", "2", "--eps-final", "0.02"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["eps_schedule"] == [0.1, 0.02]
    assert len(manifest["steps"]) == 2


def test_solver_failure_exits_with_solver_code(tmp_path):
    path = _document(tmp_path, "fp_max=1\nfp_tol=1e-300\n", phi_n="expr:0.15-0.05*x", phi_w="expr:0.12+0.08*x")
    out = tmp_path / "out"
    assert cli.main(["run", str(path), "--out", str(out), "--quiet"]) == cli.EXIT_SOLVER
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "failed"
    assert manifest["error"]


def test_audit_command(tmp_path, capsys):
    path = _document(tmp_path)
    code = cli.main(["audit", str(path), "--quiet", "--samples", "5"])
    out = capsys.readouterr().out
    assert "frozen_monotonicity" in out
    assert code in (cli.EXIT_OK, cli.EXIT_SOLVER)


def test_sweep_command(tmp_path, capsys):
    path = _document(tmp_path)
    out = tmp_path / "sweep"
    code = cli.main(["sweep", str(path), "--out", str(out), "--quiet", "--param", "time_step_s",
                     "--values", "0.01", "0.02"])
    assert code == cli.EXIT_OK
    assert (out / "time_step_s=0.01" / "series.csv").exists()
    assert (out / "time_step_s=0.02" / "manifest.json").exists()
    assert "time_step_s=0.02: completed" in capsys.readouterr().out
