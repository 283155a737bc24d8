from dataclasses import replace

import numpy as np
import pytest

from src.constitutive import PorosityBounds, soft_constraint_g
from src.stepper import (
    FrozenData,
    StepControls,
    UnknownLayout,
    build_frozen_system,
    eps_continuation,
    fixed_point_step,
    frozen_step_solve,
    monotonicity_probe,
    run_transient,
)
from src.utils.errors import ContinuationError, EpsMismatchError, StepPreconditionError, TransientRunError


def _solve_args(problem):
    return problem["params"], problem["spaces"], problem["family"], problem["mechanics"]


class TestControls:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"h": 0.0},
            {"eps_schedule": ()},
            {"eps_schedule": (1e-2, 1e-1)},
            {"eps_schedule": (0.5, 0.1)},
            {"fp_relax": 0.0},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(StepPreconditionError):
            StepControls(**kwargs)

    def test_caps(self):
        StepControls(h=1e-2).check_caps(0.1)
        with pytest.raises(StepPreconditionError):
            StepControls(h=0.2).check_caps(1e-3)
        with pytest.raises(StepPreconditionError):
            StepControls(h=0.1).check_caps(0.25)

    def test_layout_blocks(self):
        layout = UnknownLayout(n_pressure=3, n_displacement=4, n_cells=2)
        assert layout.size == 14
        assert layout.u == slice(6, 10)
        assert layout.pi == slice(12, 14)
        packed = layout.pack(np.zeros(3), np.ones(3), np.full(4, 2.0), np.full(2, 3.0), np.full(2, 4.0))
        np.testing.assert_allclose(packed[layout.theta], 3.0)

    def test_frozen_data_is_projected(self):
        bounds = PorosityBounds(0.1, 0.4)
        frozen = FrozenData.build(np.array([0.3, -0.1]), np.array([0.3, 0.2]), np.zeros(2), bounds)
        np.testing.assert_allclose(frozen.contents.phi_n, [0.2, 0.0])
        np.testing.assert_allclose(frozen.contents.phi_w, [0.2, 0.2])
        np.testing.assert_allclose(frozen.s_n + frozen.s_w, 1.0)


class TestFrozenStep:
    def test_rest_state_is_a_solution(self, small_problem):
        state = small_problem["state"]
        params, spaces, family, mechanics = _solve_args(small_problem)
        eps = state.eps
        result = frozen_step_solve(state, FrozenData.from_state(state, params.bounds), eps,
                                   small_problem["controls"], params, spaces, family.at(eps), mechanics)
        assert result.residual_norm <= small_problem["controls"].newton_tol
        solved = result.system.state_from(result.unknowns, state.time + 1e-2)
        np.testing.assert_allclose(solved.phi_n, state.phi_n, atol=1e-10)
        np.testing.assert_allclose(solved.phi_w, state.phi_w, atol=1e-10)

    def test_newton_converges_from_graded_state(self, small_problem, graded_state):
        params, spaces, family, mechanics = _solve_args(small_problem)
        eps = graded_state.eps
        controls = small_problem["controls"]
        result = frozen_step_solve(graded_state, FrozenData.from_state(graded_state, params.bounds), eps,
                                   controls, params, spaces, family.at(eps), mechanics)
        assert result.residual_norm <= controls.newton_tol
        assert 1 <= result.iterations <= controls.newton_max

    def test_caps_checked_before_solving(self, small_problem):
        state = small_problem["state"]
        params, spaces, family, mechanics = _solve_args(small_problem)
        controls = replace(small_problem["controls"], h=0.5)
        with pytest.raises(StepPreconditionError):
            frozen_step_solve(state, FrozenData.from_state(state, params.bounds), 0.01, controls,
                              params, spaces, family.at(0.01), mechanics)


class TestFixedPoint:
    def test_conserves_mass_without_dirichlet_flow(self, small_problem, graded_state):
        params, spaces, family, mechanics = _solve_args(small_problem)
        result = fixed_point_step(graded_state, 0.01, small_problem["controls"], params, spaces, family, mechanics)
        before = graded_state.total_contents()
        after = result.state.total_contents()
        assert after[0] == pytest.approx(before[0], abs=1e-10)
        assert after[1] == pytest.approx(before[1], abs=1e-10)
        assert result.change_history[-1] <= small_problem["controls"].fp_tol
        assert result.state.time == pytest.approx(small_problem["controls"].h)

    def test_multiplier_matches_porosity(self, small_problem, graded_state):
        params, spaces, family, mechanics = _solve_args(small_problem)
        state = fixed_point_step(graded_state, 0.01, small_problem["controls"], params, spaces, family,
                                 mechanics).state
        np.testing.assert_allclose(state.chi, soft_constraint_g(params.bounds, 0.01, state.phi), atol=1e-9)
        assert np.all(state.contents.in_k_phi(params.bounds, tol=1e-12))


class TestContinuation:
    def test_levels_follow_schedule(self, small_problem, graded_state):
        params, spaces, family, mechanics = _solve_args(small_problem)
        controls = small_problem["controls"]
        result = eps_continuation(graded_state, controls, params, spaces, family, mechanics)
        assert [level.eps for level in result.levels] == list(controls.eps_schedule)
        assert result.state.eps == controls.eps_schedule[-1]
        assert result.final.residual_norm <= controls.newton_tol
        assert result.newton_iterations >= result.fp_iterations >= len(controls.eps_schedule)

    def test_failing_level_is_wrapped(self, small_problem, graded_state):
        params, spaces, family, mechanics = _solve_args(small_problem)
        controls = replace(small_problem["controls"], fp_tol=0.0, fp_max=1)
        with pytest.raises(ContinuationError) as info:
            eps_continuation(graded_state, controls, params, spaces, family, mechanics)
        assert info.value.last_level is None


class TestTransient:
    def test_equilibrium_is_stationary(self, small_problem):
        params, spaces, family, mechanics = _solve_args(small_problem)
        state = small_problem["state"]
        trajectory = run_transient(state, 2, small_problem["controls"], params, spaces, family,
                                   small_problem["base"], mechanics)
        assert len(trajectory) == 3
        assert trajectory.times == pytest.approx([0.0, 0.01, 0.02])
        for later in trajectory.states[1:]:
            np.testing.assert_allclose(later.phi_n, state.phi_n, atol=1e-9)
            np.testing.assert_allclose(later.u, state.u, atol=1e-9)

    def test_reports_streamed(self, small_problem, graded_state):
        params, spaces, family, mechanics = _solve_args(small_problem)
        seen = []
        trajectory = run_transient(graded_state, 2, small_problem["controls"], params, spaces, family,
                                   small_problem["base"], mechanics,
                                   on_step=lambda state, report: seen.append(report.step))
        assert seen == [1, 2]
        assert len(trajectory.ledgers) == 3
        for report in trajectory.reports:
            assert report.audit.inequality_holds
            assert report.graph.max_distance < 1e-2
        # no boundary flow and no gravity: the free energy cannot grow
        energies = [ledger.F_eps for ledger in trajectory.ledgers]
        assert energies[2] <= energies[0] + 1e-7

    def test_failure_keeps_completed_steps(self, small_problem, graded_state):
        params, spaces, family, mechanics = _solve_args(small_problem)
        controls = replace(small_problem["controls"], fp_tol=0.0, fp_max=1)
        with pytest.raises(TransientRunError) as info:
            run_transient(graded_state, 3, controls, params, spaces, family, small_problem["base"], mechanics)
        assert len(info.value.trajectory) == 1

    def test_initial_state_at_other_level(self, small_problem):
        params, spaces, family, mechanics = _solve_args(small_problem)
        coarse = small_problem["state"].copy(eps=0.1)
        with pytest.raises(EpsMismatchError):
            run_transient(coarse, 1, small_problem["controls"], params, spaces, family, small_problem["base"],
                          mechanics)


class TestMonotonicity:
    def test_probe_at_rest_state(self, small_problem):
        params, spaces, family, mechanics = _solve_args(small_problem)
        system = build_frozen_system(small_problem["state"], 0.1, small_problem["controls"], params, spaces,
                                     family, mechanics)
        report = monotonicity_probe(system, samples=20, seed=4)
        assert report.samples == 20
        assert report.monotone
        assert report.coercivity >= 0.0

    def test_probe_at_graded_state(self, small_problem, graded_state):
        params, spaces, family, mechanics = _solve_args(small_problem)
        system = build_frozen_system(graded_state, 0.01, small_problem["controls"], params, spaces,
                                     family, mechanics)
        report = monotonicity_probe(system, samples=20, seed=5, amplitude=0.1)
        assert report.violations == 0
        assert report.to_dict()["monotone"] is True
