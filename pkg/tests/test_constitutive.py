import math

import numpy as np
import pytest
from scipy import special

from src.constitutive import (
    BrooksCoreyModel,
    PhaseContentPair,
    PorosityBounds,
    RegularizedFamily,
    RegularizedModel,
    TabulatedModel,
    build_capillary_model,
    f_eps_energy,
    gamma_eval,
    hat_pressures,
    kirchhoff_eval,
    kirchhoff_lipschitz_excess,
    mobility_floor,
    phi_from_potentials,
    phi_jacobian,
    project_k_phi,
    saturation_from_capillary,
    soft_constraint_energy,
    soft_constraint_g,
    soft_constraint_g_inv,
)
from src.utils.errors import DomainError, EndpointDivergenceError, EpsMismatchError


class TestBrooksCorey:
    def test_values_at_zero(self, bc_model):
        gamma, dgamma, d2gamma = gamma_eval(bc_model, 0.0)
        assert gamma == pytest.approx(0.0)
        assert dgamma == pytest.approx(1.0)
        assert d2gamma == pytest.approx(1.0 / 3.0)

    def test_values_at_seven_eighths(self, bc_model):
        gamma, dgamma, d2gamma = gamma_eval(bc_model, 7 / 8)
        assert gamma == pytest.approx(9 / 8)
        assert dgamma == pytest.approx(2.0)
        assert d2gamma == pytest.approx(16 / 3)

    def test_hat_pressures(self, bc_model):
        p_n, p_w = hat_pressures(bc_model, np.array([0.0, 7 / 8]))
        np.testing.assert_allclose(p_n, [1.0, 11 / 8])
        np.testing.assert_allclose(p_w, [0.0, -5 / 8])

    def test_selection_flag_at_zero(self, bc_model):
        pair = hat_pressures(bc_model, np.array([0.0, 0.5]))
        assert pair.is_selection.tolist() == [True, False]

    def test_capillary_pressure_is_difference(self, bc_model):
        s = np.linspace(0.0, 0.95, 7)
        p_n, p_w = hat_pressures(bc_model, s)
        np.testing.assert_allclose(p_n - p_w, bc_model.dgamma(s))

    def test_endpoint_diverges(self, bc_model):
        with pytest.raises(EndpointDivergenceError):
            gamma_eval(bc_model, 1.0)
        with pytest.raises(EndpointDivergenceError):
            hat_pressures(bc_model, np.array([0.2, 1.0]))

    def test_saturation_outside_unit_interval(self, bc_model):
        with pytest.raises(DomainError):
            gamma_eval(bc_model, 1.2)

    def test_kirchhoff_at_one(self, bc_model):
        xi, psi = kirchhoff_eval(bc_model, 1.0)
        assert psi == pytest.approx(0.3)
        assert xi == pytest.approx(special.beta(1.5, 1 / 6) / 3.0)

    def test_kirchhoff_monotone(self, bc_model):
        xi, psi = kirchhoff_eval(bc_model, np.linspace(0.0, 1.0, 11))
        assert xi[0] == pytest.approx(0.0)
        assert np.all(np.diff(xi) > 0)
        assert np.all(np.diff(psi) > 0)

    def test_saturation_map(self, bc_model):
        s = saturation_from_capillary(bc_model, np.array([0.5, 1.0, 2.0]))
        np.testing.assert_allclose(s, [0.0, 0.0, 7 / 8], atol=1e-14)

    def test_kirchhoff_maps_are_half_lipschitz(self, bc_model, rng):
        a, b = rng.uniform(0.5, 8.0, size=(2, 2_000))
        s, t = rng.uniform(0.0, 1.0, size=(2, 2_000))
        composed, inverse = kirchhoff_lipschitz_excess(bc_model, a, b, s, t)
        assert composed <= 1e-12
        assert inverse <= 1e-12

    def test_half_lipschitz_is_tight_at_half(self, bc_model):
        centre = float(bc_model.dgamma(np.array([0.5]))[0])
        a = np.array([centre - 1e-3])
        b = np.array([centre + 1e-3])
        xi_a, _ = kirchhoff_eval(bc_model, saturation_from_capillary(bc_model, a))
        xi_b, _ = kirchhoff_eval(bc_model, saturation_from_capillary(bc_model, b))
        assert abs(xi_b[0] - xi_a[0]) / 2e-3 == pytest.approx(0.5, rel=1e-2)

    @pytest.mark.parametrize("exponent", [1.5, 2.0])
    def test_rejects_small_exponent(self, exponent):
        with pytest.raises(DomainError):
            BrooksCoreyModel(entry_pressure=1.0, exponent=exponent)

    def test_factory(self):
        model = build_capillary_model("brooks-corey", entry_pressure=2.0, exponent=4.0)
        assert isinstance(model, BrooksCoreyModel)
        assert model.dgamma(np.array(0.0)) == pytest.approx(2.0)
        with pytest.raises(DomainError):
            build_capillary_model("van_genuchten")


class TestTabulated:
    @pytest.fixture
    def quadratic(self):
        # γ'' = 2 everywhere, so γ(s) = s + s²
        return TabulatedModel([0.0, 0.5, 1.0], [2.0, 2.0, 2.0], gamma_at_zero=0.0, dgamma_at_zero=1.0)

    def test_closed_form(self, quadratic):
        s = np.array([0.0, 0.25, 1.0])
        gamma, dgamma, d2gamma = gamma_eval(quadratic, s)
        np.testing.assert_allclose(gamma, s + s ** 2)
        np.testing.assert_allclose(dgamma, 1.0 + 2.0 * s)
        np.testing.assert_allclose(d2gamma, 2.0)

    def test_finite_at_one(self, quadratic):
        p_n, p_w = hat_pressures(quadratic, 1.0)
        assert p_n == pytest.approx(2.0)
        assert p_w == pytest.approx(2.0 - 3.0)

    def test_kirchhoff_by_quadrature(self, quadratic):
        xi, psi = kirchhoff_eval(quadratic, 1.0)
        assert psi == pytest.approx(1.0 / 3.0, rel=1e-8)
        assert xi == pytest.approx(math.pi / 4.0, rel=1e-8)

    def test_rejects_nonpositive_values(self):
        with pytest.raises(DomainError):
            TabulatedModel([0.0, 1.0], [1.0, 0.0])
        with pytest.raises(DomainError):
            TabulatedModel([0.0, 0.7], [1.0, 1.0])


class TestRegularization:
    def test_clamped_second_derivative(self, bc_model):
        eps = 0.1
        model = RegularizedModel(bc_model, eps)
        s = np.linspace(0.0, 1.0, 201)
        d2 = model.d2gamma(s)
        assert np.all(d2 >= eps - 1e-12)
        assert np.all(d2 <= 1.0 / eps + 1e-12)

    def test_matches_base_on_free_range(self, bc_model):
        model = RegularizedModel(bc_model, 0.01)
        s = np.array([0.0, 0.3, 7 / 8])
        np.testing.assert_allclose(model.gamma(s), bc_model.gamma(s), rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(model.dgamma(s), bc_model.dgamma(s), rtol=1e-12)

    def test_finite_at_one(self, bc_model):
        model = RegularizedModel(bc_model, 0.1)
        gamma, dgamma, d2gamma = gamma_eval(model, 1.0)
        assert np.isfinite(gamma) and np.isfinite(dgamma)
        assert d2gamma == pytest.approx(10.0)

    def test_saturation_inverts_derivative(self, bc_model):
        model = RegularizedModel(bc_model, 0.03)
        s = np.linspace(0.0, 1.0, 41)
        np.testing.assert_allclose(saturation_from_capillary(model, model.dgamma(s)), s, atol=1e-10)

    @pytest.mark.parametrize("eps", [0.0, -0.1, 0.3])
    def test_rejects_eps_out_of_range(self, bc_model, eps):
        with pytest.raises(DomainError):
            RegularizedModel(bc_model, eps)

    def test_family_caches(self, bc_model):
        family = RegularizedFamily(bc_model)
        assert family.at(0.01) is family.at(0.01)
        assert family.at(0.01) is not family.at(0.1)


class TestSoftConstraint:
    def test_values(self, bounds):
        eps = 0.01
        assert soft_constraint_g(bounds, eps, 0.25) == pytest.approx(0.0, abs=1e-15)
        assert soft_constraint_g(bounds, eps, 0.3) == pytest.approx(0.01 * math.log(2.0))

    def test_inverse(self, bounds, rng):
        eps = 0.05
        phi = rng.uniform(0.11, 0.39, size=50)
        np.testing.assert_allclose(soft_constraint_g_inv(bounds, eps, soft_constraint_g(bounds, eps, phi)), phi)

    def test_inverse_stays_inside(self, bounds):
        phi = soft_constraint_g_inv(bounds, 1e-3, np.array([-1e3, 1e3]))
        assert np.all(bounds.strictly_inside(phi))

    @pytest.mark.parametrize("phi", [0.1, 0.4, 0.05, 0.5])
    def test_rejects_bounds(self, bounds, phi):
        with pytest.raises(DomainError):
            soft_constraint_g(bounds, 0.01, phi)

    def test_energy_vanishes_at_midpoint(self, bounds):
        assert soft_constraint_energy(bounds, 0.01, bounds.midpoint) == pytest.approx(0.0, abs=1e-16)
        assert soft_constraint_energy(bounds, 0.01, bounds.phi_lo) > 0.0

    def test_mobility_floor(self):
        assert mobility_floor(0.1, 0.05) == pytest.approx(0.1)
        assert mobility_floor(0.1, 0.5) == pytest.approx(0.5)
        s = np.linspace(0.0, 1.0, 11)
        assert np.all(mobility_floor(0.1, s) >= 0.5 * (s + 0.1))

    def test_bounds_validation(self):
        with pytest.raises(DomainError):
            PorosityBounds(0.4, 0.1)


class TestContentMap:
    def test_zero_potentials(self, bc_model, bounds):
        eps = 0.01
        pair = phi_from_potentials(RegularizedModel(bc_model, eps), bounds, eps, 0.0, 0.0)
        assert pair.phi_n == pytest.approx(0.0)
        assert pair.phi_w == pytest.approx(0.25)

    def test_hat_pressures_give_midpoint(self, bc_model, bounds):
        eps = 0.01
        pair = phi_from_potentials(RegularizedModel(bc_model, eps), bounds, eps, 11 / 8, -5 / 8)
        assert pair.phi == pytest.approx(0.25)
        assert pair.phi_n == pytest.approx(0.21875)

    def test_eps_mismatch(self, bc_model, bounds):
        model = RegularizedModel(bc_model, 0.01)
        with pytest.raises(EpsMismatchError):
            phi_from_potentials(model, bounds, 0.1, 0.0, 0.0)
        with pytest.raises(EpsMismatchError):
            f_eps_energy(model, bounds, 0.1, PhaseContentPair(0.1, 0.1))

    def test_output_in_admissible_set(self, bc_model, bounds, rng):
        eps = 0.03
        model = RegularizedModel(bc_model, eps)
        y_n, y_w = rng.normal(scale=3.0, size=(2, 200))
        pair = phi_from_potentials(model, bounds, eps, y_n, y_w)
        assert np.all(pair.in_k_phi(bounds, tol=1e-14))

    def test_gradient_inverts_map(self, bc_model, bounds, rng):
        eps = 0.03
        model = RegularizedModel(bc_model, eps)
        s = rng.uniform(0.05, 0.9, size=30)
        phi = rng.uniform(0.15, 0.35, size=30)
        pair = PhaseContentPair(phi * s, phi * (1.0 - s))
        _, (grad_n, grad_w) = f_eps_energy(model, bounds, eps, pair)
        back = phi_from_potentials(model, bounds, eps, grad_n, grad_w)
        np.testing.assert_allclose(back.phi_n, pair.phi_n, atol=1e-10)
        np.testing.assert_allclose(back.phi_w, pair.phi_w, atol=1e-10)

    def test_gradient_matches_finite_differences(self, bc_model, bounds):
        eps = 0.05
        model = RegularizedModel(bc_model, eps)
        pair = PhaseContentPair(np.array([0.12]), np.array([0.11]))
        _, (grad_n, grad_w) = f_eps_energy(model, bounds, eps, pair)
        step = 1e-6

        def energy(a, b):
            return f_eps_energy(model, bounds, eps, PhaseContentPair(a, b), with_gradient=False)[0]

        fd_n = (energy(pair.phi_n + step, pair.phi_w) - energy(pair.phi_n - step, pair.phi_w)) / (2 * step)
        fd_w = (energy(pair.phi_n, pair.phi_w + step) - energy(pair.phi_n, pair.phi_w - step)) / (2 * step)
        np.testing.assert_allclose(grad_n, fd_n, rtol=1e-6)
        np.testing.assert_allclose(grad_w, fd_w, rtol=1e-6)

    def test_jacobian_symmetric_and_monotone(self, bc_model, bounds, rng):
        eps = 0.03
        model = RegularizedModel(bc_model, eps)
        y_n, y_w = rng.normal(scale=1.5, size=(2, 50))
        _, jac = phi_jacobian(model, bounds, eps, y_n, y_w)
        np.testing.assert_allclose(jac[:, 0, 1], jac[:, 1, 0])
        eigenvalues = np.linalg.eigvalsh(jac)
        assert np.all(eigenvalues >= -1e-12)

    def test_jacobian_matches_finite_differences(self, bc_model, bounds):
        eps = 0.05
        model = RegularizedModel(bc_model, eps)
        y_n, y_w = np.array([1.4]), np.array([-0.3])
        _, jac = phi_jacobian(model, bounds, eps, y_n, y_w)
        step = 1e-7
        plus = phi_from_potentials(model, bounds, eps, y_n + step, y_w)
        minus = phi_from_potentials(model, bounds, eps, y_n - step, y_w)
        assert jac[0, 0, 0] == pytest.approx(((plus.phi_n - minus.phi_n) / (2 * step))[0], rel=1e-5)
        assert jac[0, 1, 0] == pytest.approx(((plus.phi_w - minus.phi_w) / (2 * step))[0], rel=1e-5)

    def test_energy_midpoint_convexity(self, bc_model, bounds, rng):
        eps = 0.03
        model = RegularizedModel(bc_model, eps)
        for _ in range(20):
            a = PhaseContentPair(*(rng.uniform(0.01, 0.19, size=2)))
            b = PhaseContentPair(*(rng.uniform(0.01, 0.19, size=2)))
            mid = PhaseContentPair(0.5 * (a.phi_n + b.phi_n), 0.5 * (a.phi_w + b.phi_w))
            if not (a.in_k_phi(bounds) and b.in_k_phi(bounds)):
                continue
            f_a = f_eps_energy(model, bounds, eps, a, with_gradient=False)[0]
            f_b = f_eps_energy(model, bounds, eps, b, with_gradient=False)[0]
            f_mid = f_eps_energy(model, bounds, eps, mid, with_gradient=False)[0]
            assert f_mid <= 0.5 * (f_a + f_b) + 1e-14

    def test_energy_outside_admissible_set(self, bc_model, bounds):
        model = RegularizedModel(bc_model, 0.01)
        with pytest.raises(DomainError):
            f_eps_energy(model, bounds, 0.01, PhaseContentPair(0.3, 0.3))


class TestProjection:
    @pytest.mark.parametrize(
        "point, expected",
        [
            ((0.15, 0.1), (0.15, 0.1)),
            ((0.3, 0.3), (0.2, 0.2)),
            ((-0.1, 0.2), (0.0, 0.2)),
            ((0.02, 0.02), (0.05, 0.05)),
        ],
    )
    def test_examples(self, bounds, point, expected):
        projected = project_k_phi(PhaseContentPair(*point), bounds)
        assert projected.phi_n == pytest.approx(expected[0])
        assert projected.phi_w == pytest.approx(expected[1])

    def test_idempotent(self, bounds, rng):
        pair = PhaseContentPair(*rng.uniform(-0.3, 0.6, size=(2, 100)))
        once = project_k_phi(pair, bounds)
        twice = project_k_phi(once, bounds)
        assert np.all(once.in_k_phi(bounds, tol=1e-14))
        np.testing.assert_allclose(twice.phi_n, once.phi_n, atol=1e-14)
        np.testing.assert_allclose(twice.phi_w, once.phi_w, atol=1e-14)
