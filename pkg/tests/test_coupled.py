from dataclasses import replace

import numpy as np
import pytest

from src.constitutive import PhaseContentPair, PorosityBounds, f_eps_energy
from src.coupled import (
    MaterialParams,
    MechanicsSystem,
    PermeabilityLaw,
    body_force,
    build_problem_spaces,
    gravity_potential,
    init_state,
    permeability,
    permeability_tensor,
    solve_mechanics,
    weak_coupling_audit,
)
from src.utils.errors import DomainError


@pytest.fixture
def params():
    return MaterialParams(bounds=PorosityBounds(0.1, 0.5), phi_r=0.3)


def _uniform(mesh, phi_n, phi_w):
    return PhaseContentPair(np.full(mesh.n_cells, phi_n), np.full(mesh.n_cells, phi_w))


class TestMaterial:
    def test_kozeny_carman(self, params):
        k = permeability(np.array([0.25]), params)
        assert k[0] == pytest.approx(0.25 ** 3 / 0.75 ** 2)
        lo, hi = params.permeability_bounds()
        assert 0.0 < lo < k[0] < hi

    def test_constant_law(self, params):
        constant = replace(params, permeability_law=PermeabilityLaw.CONSTANT, permeability_scale=2.0)
        np.testing.assert_allclose(permeability(np.array([0.2, 0.4]), constant), 2.0)

    def test_permeability_outside_bounds(self, params):
        with pytest.raises(DomainError):
            permeability(np.array([0.6]), params)

    def test_tensor_is_isotropic(self, params):
        tensor = permeability_tensor(np.array([0.2, 0.3]), params, 2)
        assert tensor.shape == (2, 2, 2)
        np.testing.assert_allclose(tensor[:, 0, 1], 0.0)
        np.testing.assert_allclose(tensor[:, 0, 0], tensor[:, 1, 1])

    def test_body_force(self, square_mesh, params):
        heavy = replace(params, gravity=(0.0, -1.0), density_n=0.5, rock_density=2.0)
        force = body_force(_uniform(square_mesh, 0.1, 0.2), heavy, square_mesh)
        assert force.shape == (square_mesh.n_cells, 2)
        # 0.1·0.5 + 0.2·1 + 0.7·2
        np.testing.assert_allclose(force[:, 1], -1.65)
        np.testing.assert_allclose(force[:, 0], 0.0)

    def test_gravity_potential(self, square_mesh, params):
        heavy = replace(params, gravity=(0.0, -2.0))
        potential = gravity_potential(heavy, square_mesh, np.zeros((square_mesh.n_vertices, 2)), "w")
        np.testing.assert_allclose(potential, -2.0 * square_mesh.vertices[:, 1])

    def test_nodal_field_shape(self, square_mesh, params):
        with pytest.raises(DomainError):
            params.nodal(np.zeros(3), square_mesh)
        np.testing.assert_allclose(params.phi_r_cells(square_mesh), 0.3)


class TestProblemSpaces:
    def test_partitions(self, square_mesh):
        spaces = build_problem_spaces(square_mesh, ["left"], ["bottom"])
        assert spaces.pressure.constrained_dofs.size == 5
        assert spaces.displacement.constrained_dofs.size == 10
        assert not spaces.pure_neumann_flow
        assert build_problem_spaces(square_mesh, [], ["bottom"]).pure_neumann_flow

    def test_lift_preserves_constants(self, square_mesh):
        spaces = build_problem_spaces(square_mesh, [], ["bottom"])
        np.testing.assert_allclose(spaces.lift_to_nodes(np.full(square_mesh.n_cells, 0.7)), 0.7)
        np.testing.assert_allclose(spaces.cell_means(np.full(square_mesh.n_vertices, 2.0)), 2.0)


class TestMechanics:
    def test_needs_dirichlet_boundary(self, square_mesh, params):
        spaces = build_problem_spaces(square_mesh, [], [])
        with pytest.raises(DomainError):
            solve_mechanics(np.zeros(square_mesh.n_cells), np.zeros((square_mesh.n_cells, 2)), spaces, params)

    def test_uniform_pressure_expands(self, square_mesh, params):
        spaces = build_problem_spaces(square_mesh, [], ["bottom"])
        system = MechanicsSystem(spaces, params)
        pi = np.full(square_mesh.n_cells, 0.5)
        force = np.zeros((square_mesh.n_cells, 2))
        u = solve_mechanics(pi, force, spaces, params, system)
        residual = system.residual(u, pi, force)
        np.testing.assert_allclose(residual[system.free], 0.0, atol=1e-10)
        assert spaces.volumes @ (spaces.divergence @ u) > 0.0
        assert system.energy(u) > 0.0


class TestInitialState:
    def test_rest_state(self, small_problem):
        state = small_problem["state"]
        params = small_problem["params"]
        np.testing.assert_allclose(state.u, 0.0, atol=1e-12)
        np.testing.assert_allclose(state.theta, 0.0, atol=1e-12)
        np.testing.assert_allclose(state.pi, 0.0, atol=1e-12)
        np.testing.assert_allclose(state.constraint_residual(params), 0.0, atol=1e-12)
        assert state.total_contents() == pytest.approx((0.1, 0.2))

    def test_pressures_balance_contents(self, small_problem):
        state = small_problem["state"]
        params = small_problem["params"]
        eps = state.eps
        regmodel = small_problem["family"].at(eps)
        _, (grad_n, grad_w) = f_eps_energy(regmodel, params.bounds, eps, state.contents)
        np.testing.assert_allclose(state.p_n, grad_n[0], rtol=1e-10)
        np.testing.assert_allclose(state.p_w, grad_w[0], rtol=1e-10)

    def test_compressed_rest_porosity(self, small_problem):
        spaces = small_problem["spaces"]
        params = replace(small_problem["params"], phi_r=0.25, lame_lambda=4.0)
        mechanics = MechanicsSystem(spaces, params)
        contents = _uniform(spaces.mesh, 0.1, 0.2)
        family = small_problem["family"]
        state = init_state(contents, params, spaces, family.at(0.01), 0.01, mechanics)

        np.testing.assert_allclose(state.constraint_residual(params), 0.0, atol=1e-12)
        np.testing.assert_allclose(state.biot_residual(params), 0.0, atol=1e-12)
        force = body_force(contents, params, spaces.mesh)
        residual = mechanics.residual(state.u, state.pi, force)
        np.testing.assert_allclose(residual[mechanics.free], 0.0, atol=1e-10)
        assert np.abs(state.u).max() > 0.0

    def test_dirichlet_values(self, small_problem):
        mesh = small_problem["mesh"]
        spaces = build_problem_spaces(mesh, ["top"], ["bottom"])
        params = replace(small_problem["params"], p_dirichlet_n=2.0, p_dirichlet_w=0.5)
        family = small_problem["family"]
        state = init_state(_uniform(mesh, 0.1, 0.2), params, spaces, family.at(0.01), 0.01)
        top = spaces.pressure.constrained_dofs
        np.testing.assert_allclose(state.p_n[top], 2.0)
        np.testing.assert_allclose(state.p_w[top], 0.5)

        kept = init_state(_uniform(mesh, 0.1, 0.2), params, spaces, family.at(0.01), 0.01,
                          equilibrium_dirichlet=(True, True))
        np.testing.assert_allclose(kept.p_n[top], kept.p_n[spaces.pressure.free_dofs][0])

    def test_rejects_inadmissible_contents(self, small_problem):
        mesh = small_problem["mesh"]
        family = small_problem["family"]
        with pytest.raises(DomainError):
            init_state(_uniform(mesh, 0.4, 0.3), small_problem["params"], small_problem["spaces"],
                       family.at(0.01), 0.01)

    def test_copy_and_distances(self, small_problem):
        state = small_problem["state"]
        moved = state.copy(phi_n=state.phi_n + 0.01)
        assert moved.phi_n is not state.phi_n
        distances = state.field_distances(moved)
        assert distances["phi_n"] == pytest.approx(0.01)
        assert distances["p_n"] == 0.0
        assert all(value == 0.0 for value in state.field_distances(state).values())


class TestWeakCoupling:
    def test_uncoupled_is_always_satisfied(self, small_problem):
        params = replace(small_problem["params"], biot_b=0.0)
        report = weak_coupling_audit(small_problem["spaces"], params, samples=2, seed=3)
        assert report.c1_estimate > 0.0
        assert report.satisfied
        assert report.margin == pytest.approx(params.lame_lambda)

    def test_margin_consistent(self, small_problem):
        params = replace(small_problem["params"], biot_modulus=5.0, biot_b=0.8)
        report = weak_coupling_audit(small_problem["spaces"], params, samples=2, seed=3)
        threshold = 5.0 * 0.64 * report.c1_estimate
        assert report.margin == pytest.approx(params.lame_lambda - threshold)
        assert report.satisfied == (report.margin > 0.0)
        assert len(report.ratios) == 4

    def test_reproducible(self, small_problem):
        first = weak_coupling_audit(small_problem["spaces"], small_problem["params"], samples=2, seed=7)
        second = weak_coupling_audit(small_problem["spaces"], small_problem["params"], samples=2, seed=7)
        assert first.c1_estimate == second.c1_estimate

    def test_rejects_zero_samples(self, small_problem):
        with pytest.raises(ValueError):
            weak_coupling_audit(small_problem["spaces"], small_problem["params"], samples=0)
