from pathlib import Path

import numpy as np
import pytest

from src.scenario_io import (
    SERIES_COLUMNS,
    Config,
    audit_scenario,
    check_scenario,
    explain,
    load_config,
    load_config_file,
    parse_config,
    parse_setting,
    prepare_scenario,
    read_field,
    read_fields,
    resolve_field,
    run_scenario,
    sweep,
    sweep_configs,
    validate_config,
    write_fields,
)
from src.scenario_io.output_writer import MANIFEST_FILE, SNAPSHOT_DIR
from src.stepper import build_frozen_system, monotonicity_probe, run_transient
from src.utils.errors import ConfigParseError, ConfigValidationError

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

SMALL_EQUILIBRIUM = """\
# undisturbed 3x3 column
mesh_kind=rectangle
mesh_nx=3
mesh_ny=3
flow_dirichlet=left,right
mechanics_dirichlet=bottom
residual_porosity=0.3
initial_content_n=0.1
initial_content_w=0.2
dirichlet_pressure_n_pa=initial
dirichlet_pressure_w_pa=initial
eps_schedule=0.1,0.01
time_step_s=0.01
n_steps=2
"""


def _small_config(tmp_path=None, **overrides):
    config = load_config(SMALL_EQUILIBRIUM, audit_weak_coupling=False)
    if tmp_path is not None:
        overrides.setdefault("output_dir", str(tmp_path / "run"))
    return config.with_overrides(**overrides)


def _labels(error):
    return {issue["label"] for issue in error.issues}


class TestParsing:
    def test_empty_document_gives_defaults(self):
        config = parse_config("")
        assert config == Config()
        assert config.unknown_keys == ()

    def test_typed_values(self):
        config = parse_config("export mesh_nx=12\nflow_dirichlet = left, top\ngravity_m_s2=0,-9.81\n"
                              "eps_final=none\nnewton_max=5.0\n")
        assert config.mesh_nx == 12
        assert config.flow_dirichlet == ("left", "top")
        assert config.gravity_m_s2 == (0.0, -9.81)
        assert config.eps_final is None
        assert config.newton_max == 5

    def test_line_without_equals(self):
        with pytest.raises(ConfigParseError) as info:
            parse_config("mesh_nx=8\nthis is not a setting\n")
        assert info.value.line == 2

    def test_invalid_number_reports_line(self):
        with pytest.raises(ConfigParseError) as info:
            parse_config("# header\nmesh_ny=4\nmesh_nx=2.5\n")
        assert info.value.line == 3
        assert "mesh_nx" in str(info.value)

    def test_field_syntax_checked(self):
        with pytest.raises(ConfigParseError):
            parse_config("initial_content_n=lots\n")
        with pytest.raises(ConfigParseError):
            parse_config("initial_content_n=expr:\n")
        assert parse_config("dirichlet_pressure_n_pa=initial\n").dirichlet_from_initial() == (True, False)

    def test_expression_checked_at_parse_time(self):
        with pytest.raises(ConfigParseError) as info:
            parse_config("mesh_nx=4\nresidual_porosity=expr:x.__class__\n")
        assert info.value.line == 2
        assert "residual_porosity" in str(info.value)

    def test_parse_setting(self):
        assert parse_setting("eps_final", "0.005") == 0.005
        with pytest.raises(ConfigParseError):
            parse_setting("no_such_key", "1")

    def test_config_hash_tracks_values(self):
        first = parse_config("mesh_nx=4\n")
        assert first.config_hash() == parse_config("mesh_nx=4\n# comment\n").config_hash()
        assert first.config_hash() != parse_config("mesh_nx=5\n").config_hash()

    def test_schedule_cut_at_eps_final(self):
        config = parse_config("eps_schedule=0.1,0.03,0.01,0.003\neps_final=0.005\n")
        assert config.schedule() == (0.1, 0.03, 0.01, 0.005)
        assert config.controls().eps_schedule[-1] == 0.005


class TestValidation:
    def test_biot_coefficient_above_one(self):
        with pytest.raises(ConfigValidationError) as info:
            load_config("biot_coefficient=1.5\n")
        assert _labels(info.value) == {"(H1)"}

    def test_brooks_corey_exponent(self):
        with pytest.raises(ConfigValidationError) as info:
            load_config("brooks_corey_lambda=1.5\n")
        assert _labels(info.value) == {"(H2)"}

    def test_every_violation_reported(self):
        with pytest.raises(ConfigValidationError) as info:
            load_config("biot_coefficient=1.5\nbrooks_corey_lambda=1.5\ninitial_content_n=0.6\n"
                        "mechanics_dirichlet=nowhere\n")
        assert {"(H1)", "(H2)", "(H4)", "(H6)"} <= _labels(info.value)

    def test_unknown_key(self):
        with pytest.raises(ConfigValidationError) as info:
            load_config("mesh_nz=4\n")
        assert [issue["rule"] for issue in info.value.issues] == ["keys"]
        assert "mesh_nz" in info.value.issues[0]["message"]

    def test_step_caps(self):
        issues = validate_config(parse_config("time_step_s=0.5\nh_max_s=0.1\n"), audit_weak_coupling=False)
        assert any(issue["rule"] == "controls" for issue in issues)

    def test_weak_coupling_is_advisory(self):
        config = load_config(SMALL_EQUILIBRIUM)
        audit = [issue for issue in config.issues if issue["rule"] == "weak_coupling"]
        assert len(audit) == 1
        assert audit[0]["label"] == "(H7)"
        assert audit[0]["severity"] != "error"

    def test_explain_covers_every_assumption(self):
        labels = {rule["label"] for rule in explain()}
        assert {f"(H{k})" for k in range(1, 9)} <= labels


class TestFields:
    def test_constant_and_expression(self, square_mesh):
        np.testing.assert_allclose(resolve_field("0.25", square_mesh), 0.25)
        values = resolve_field("expr:0.1+0.05*y", square_mesh)
        np.testing.assert_allclose(values, 0.1 + 0.05 * square_mesh.vertices[:, 1])

    def test_bad_expression(self, square_mesh):
        with pytest.raises(ConfigParseError):
            resolve_field("expr:undefined_name*2", square_mesh)

    def test_expression_functions(self, square_mesh):
        x, y = square_mesh.vertices[:, 0], square_mesh.vertices[:, 1]
        values = resolve_field("expr:0.3 + 0.05*sin(pi*x)*where(y > 0.5, 1, -1)", square_mesh)
        np.testing.assert_allclose(values, 0.3 + 0.05 * np.sin(np.pi * x) * np.where(y > 0.5, 1, -1))

    @pytest.mark.parametrize("source", [
        "expr:().__class__",
        "expr:x.__class__",
        "expr:'0.3'",
        "expr:[x for x in y]",
        "expr:sqrt(x=1)",
        "expr:(lambda: 1)()",
        "expr:__import__('os')",
    ])
    def test_expression_outside_arithmetic(self, square_mesh, source):
        with pytest.raises(ConfigParseError):
            resolve_field(source, square_mesh)

    def test_file_field(self, square_mesh, tmp_path):
        values = np.linspace(0.1, 0.3, square_mesh.n_vertices)
        write_fields(tmp_path / "phi0.txt", [("phi0", values)])
        np.testing.assert_array_equal(resolve_field("file:phi0.txt", square_mesh, str(tmp_path)), values)
        write_fields(tmp_path / "short.txt", [("phi0", values[:3])])
        with pytest.raises(ConfigParseError):
            resolve_field("file:short.txt", square_mesh, str(tmp_path))

    def test_vector_and_scalar_fields(self, tmp_path):
        path = tmp_path / "snapshot.txt"
        write_fields(path, [("p", np.array([0.1, 1.0 / 3.0])), ("u", np.array([[1.0, 2.0], [3.0, 4.0]]))])
        fields = read_fields(path)
        assert list(fields) == ["p", "u"]
        assert fields["p"][1] == 1.0 / 3.0
        assert fields["u"].shape == (2, 2)
        assert read_field(path, "u")[1, 0] == 3.0

    def test_values_before_header(self, tmp_path):
        path = tmp_path / "broken.txt"
        path.write_text("0.1\n# field p\n0.2\n")
        with pytest.raises(ConfigParseError) as info:
            read_fields(path)
        assert info.value.line == 1

    def test_missing_field_name(self, tmp_path):
        path = tmp_path / "one.txt"
        write_fields(path, [("p", np.zeros(2))])
        with pytest.raises(ConfigParseError):
            read_field(path, "q")


class TestScenario:
    def test_initial_dirichlet_takes_equilibrium_pressures(self):
        scenario = prepare_scenario(_small_config())
        dofs = scenario.spaces.pressure.constrained_dofs
        assert dofs.size == 8
        np.testing.assert_allclose(scenario.params.p_dirichlet_n[dofs], scenario.initial.p_n[dofs])
        np.testing.assert_allclose(scenario.params.p_dirichlet_w[dofs], scenario.initial.p_w[dofs])
        assert scenario.final_eps == 0.01

    def test_check_reports_boundary_saturation(self):
        report = check_scenario(_small_config())
        assert report["valid"]
        saturation = report["boundary_saturation"]
        assert len(saturation) == 8
        # uniform contents 0.1 / 0.2
        np.testing.assert_allclose(saturation, saturation[0])
        assert 0.0 < saturation[0] < 1.0

    def test_audit_battery(self):
        report = audit_scenario(_small_config(), samples=10)
        checks = {check.name: check for check in report.checks}
        assert list(checks) == ["capillary_identities", "kirchhoff_lipschitz", "duality_roundtrip",
                                "frozen_monotonicity", "one_step_energy"]
        assert checks["kirchhoff_lipschitz"].passed
        assert checks["kirchhoff_lipschitz"].details["pairs"] == 10_000
        assert checks["frozen_monotonicity"].passed
        assert checks["one_step_energy"].passed
        assert len(report.to_dict()["checks"]) == 5


class TestRun:
    def test_outputs_written(self, tmp_path):
        config = _small_config(tmp_path)
        result = run_scenario(config)
        lines = result.series_path.read_text().splitlines()
        assert lines[0] == ",".join(SERIES_COLUMNS)
        assert len(lines) == 1 + config.n_steps
        snapshots = sorted(path.name for path in (result.out_dir / SNAPSHOT_DIR).iterdir())
        assert snapshots == ["step_000000.txt", "step_000001.txt", "step_000002.txt"]
        assert (result.out_dir / MANIFEST_FILE).exists()
        assert result.manifest.status == "completed"
        assert len(result.manifest.steps) == config.n_steps

    def test_equilibrium_stays_at_rest(self, tmp_path):
        result = run_scenario(_small_config(tmp_path))
        initial, final = result.trajectory.states[0], result.trajectory.states[-1]
        np.testing.assert_allclose(final.phi_n, initial.phi_n, atol=1e-9)
        np.testing.assert_allclose(final.phi_w, initial.phi_w, atol=1e-9)
        np.testing.assert_allclose(final.u, initial.u, atol=1e-9)
        assert max(result.mass.max_relative_drift) <= 1e-9
        assert result.gronwall.bound_holds

    def test_runs_are_deterministic(self, tmp_path):
        config = _small_config()
        first = run_scenario(config, tmp_path / "a")
        second = run_scenario(config, tmp_path / "b")
        assert first.series_path.read_bytes() == second.series_path.read_bytes()
        for name in ("step_000000.txt", "step_000002.txt"):
            assert (first.out_dir / SNAPSHOT_DIR / name).read_bytes() == \
                (second.out_dir / SNAPSHOT_DIR / name).read_bytes()
        assert first.manifest.deterministic_view() == second.manifest.deterministic_view()
        assert "timing" in first.manifest.to_dict()


class TestSweep:
    def test_member_directories(self, tmp_path):
        members = sweep_configs(_small_config(tmp_path), "eps_final", ["0.05", "0.02"])
        assert [member.eps_final for member in members] == [0.05, 0.02]
        assert [member.output_dir for member in members] == [
            str(tmp_path / "run" / "eps_final=0.05"), str(tmp_path / "run" / "eps_final=0.02")]
        assert members[1].schedule() == (0.1, 0.02)

    def test_output_dir_not_sweepable(self, tmp_path):
        with pytest.raises(ConfigParseError):
            sweep_configs(_small_config(tmp_path), "output_dir", ["x"])

    def test_failed_member_does_not_stop_others(self, tmp_path):
        outcomes = sweep(_small_config(tmp_path, n_steps=1), "fp_max", ["0", "60"], max_workers=2)
        assert [outcome.value for outcome in outcomes] == ["0", "60"]
        assert outcomes[0].status == "failed"
        assert outcomes[1].status == "completed"
        assert outcomes[1].stats["steps"] == 1
        assert (outcomes[1].out_dir / "series.csv").exists()


def _shipped(name, **overrides):
    config = load_config_file(SCENARIOS / f"{name}.env", audit_weak_coupling=False)
    return config.with_overrides(**overrides)


def _trajectory(scenario, n_steps):
    return run_transient(scenario.initial, n_steps, scenario.controls, scenario.params, scenario.spaces,
                         scenario.family, scenario.base, scenario.mechanics)


@pytest.mark.slow
class TestShippedScenarios:
    def test_coercivity_stable_under_refinement(self):
        coercivity = []
        for n in (8, 16):
            scenario = prepare_scenario(_shipped("drainage", mesh_nx=n, mesh_ny=n))
            system = build_frozen_system(scenario.initial, scenario.final_eps, scenario.controls, scenario.params,
                                         scenario.spaces, scenario.family, scenario.mechanics)
            report = monotonicity_probe(system, samples=200, seed=0)
            assert report.monotone
            coercivity.append(report.coercivity)
        coarse, fine = coercivity
        assert coarse > 0.0
        assert abs(fine - coarse) <= 0.25 * coarse

    def test_drainage_energy_audit(self):
        config = _shipped("drainage")
        trajectory = _trajectory(prepare_scenario(config), config.n_steps)
        assert len(trajectory.reports) == 50
        for report in trajectory.reports:
            assert report.audit.identity_holds, report.step
            assert report.audit.inequality_holds, report.step

    def test_compaction_graph_distance_per_level(self):
        scenario = prepare_scenario(_shipped("compaction", n_steps=5))
        trajectory = _trajectory(scenario, 5)
        bounds = scenario.params.bounds
        for report in trajectory.reports:
            distances = [level.graph.max_distance for level in report.levels]
            assert len(distances) == len(scenario.controls.eps_schedule)
            assert distances[-1] <= distances[0]
            assert distances[-1] < 1e-2
        for state in trajectory.states:
            assert np.all(state.phi > bounds.phi_lo)
            assert np.all(state.phi < bounds.phi_hi)

    def test_increment_dual_norm_under_step_halving(self):
        maxima = []
        for h, n_steps in ((0.01, 10), (0.005, 20)):
            trajectory = _trajectory(prepare_scenario(_shipped("compaction", time_step_s=h)), n_steps)
            maxima.append(max(max(r.dual_norm_n, r.dual_norm_w) / h for r in trajectory.reports))
        coarse, fine = maxima
        assert coarse > 0.0
        assert 0.5 <= fine / coarse <= 2.0
