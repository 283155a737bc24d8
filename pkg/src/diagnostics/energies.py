# src/diagnostics/energies.py
"""
Helmholtz energies and dissipation of a state.

Contents and saturations are cellwise; pressure gradients are the constant
gradients of the nodal P1 pressures on each cell.
"""
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from src.constitutive import (
    CapillaryModel,
    RegularizedModel,
    hat_pressures,
    kirchhoff_eval,
    soft_constraint_energy,
)
from src.coupled import MaterialParams, MechanicsSystem, State, body_force, permeability


KIRCHHOFF_RTOL = 1e-10
KIRCHHOFF_ATOL = 1e-14


@dataclass
class EnergyLedger:
    F_f: float = 0.0
    F_s: float = 0.0
    F_g: float = 0.0
    F_eps: float = 0.0
    constraint_violation: float = 0.0
    biot_violation: float = 0.0
    dissipation: float = 0.0
    kirchhoff_lower_bound: float = 0.0
    kirchhoff_ordering_residual: float = 0.0
    psi_seminorm: float = 0.0
    regularized_dissipation_bound: float = 0.0
    boundary_work: float = 0.0
    step_inequality_residual: float = 0.0

    @property
    def kirchhoff_ordering_holds(self) -> bool:
        scale = max(self.kirchhoff_lower_bound, np.finfo(float).tiny)
        return self.kirchhoff_ordering_residual >= -KIRCHHOFF_RTOL * scale - KIRCHHOFF_ATOL

    def to_dict(self) -> dict:
        return asdict(self)


def cell_gradients(state: State, nodal: np.ndarray) -> np.ndarray:
    """(nc, d) gradient of a P1 field"""
    mesh = state.spaces.mesh
    return np.einsum("kia,ki->ka", mesh.basis_gradients, np.asarray(nodal, dtype=float)[mesh.cells])


def gradient_seminorm_sq(state: State, nodal: np.ndarray) -> float:
    grad = cell_gradients(state, nodal)
    return float(state.spaces.volumes @ np.sum(grad * grad, axis=1))


def regularized_content_energy(state: State, regmodel: RegularizedModel, params: MaterialParams) -> float:
    """Σ|K| [φ γ_ε(s_n) + 𝒢_ε(φ)] at the level of `regmodel`"""
    phi = state.phi
    s_n = np.clip(state.s_n, 0.0, 1.0)
    density = phi * regmodel.gamma(s_n) + soft_constraint_energy(params.bounds, regmodel.eps, phi)
    return float(state.spaces.volumes @ density)


def solid_energy(state: State, params: MaterialParams, mechanics: MechanicsSystem) -> float:
    """∫ (M/2)θ² + μ ε(u):ε(u) + (λ/2)(div u)²"""
    vols = state.spaces.volumes
    return float(0.5 * params.biot_modulus * (vols @ state.theta ** 2) + 0.5 * mechanics.energy(state.u))


def helmholtz_energy(state: State, params: MaterialParams, base: CapillaryModel,
                     regmodel: RegularizedModel, mechanics: Optional[MechanicsSystem] = None) -> EnergyLedger:
    """Energy part of the ledger: F_f, F_s, F_g and the regularized total F_eps.

    F_eps = Σ|K|[φγ_ε(s_n) + 𝒢_ε(φ)] + F_s; gravity enters the step balance
    as work, so it is reported separately. The indicator terms appear as
    violation magnitudes.
    """
    spaces = state.spaces
    mesh = spaces.mesh
    mechanics = mechanics or MechanicsSystem(spaces, params)
    vols = spaces.volumes

    s_n = np.clip(state.s_n, 0.0, 1.0)
    f_f = float(vols @ (state.phi * base.gamma(s_n)))
    f_s = solid_energy(state, params, mechanics)

    force = body_force(state.contents, params, mesh)
    position = mesh.barycenters + state.displacement_nodal()[mesh.cells].mean(axis=1)
    f_g = -float(vols @ np.sum(force * position, axis=1))

    return EnergyLedger(
        F_f=f_f,
        F_s=f_s,
        F_g=f_g,
        F_eps=regularized_content_energy(state, regmodel, params) + f_s,
        constraint_violation=float(np.max(np.abs(state.constraint_residual(params)))),
        biot_violation=float(np.max(np.abs(state.biot_residual(params)))),
    )


def dissipation(state: State, params: MaterialParams, model: CapillaryModel) -> Tuple[float, float]:
    """(D, Kirchhoff lower bound).

    D = Σ_α ∫ (s_α/μ_α) K(φ) |∇p_α|². The bound ‖∇ξ(s_n)‖² + ‖∇(π+χ)‖² is
    built from s_n, π and χ alone, not from the pressures, and satisfies
    (K♭/μ♯)·bound ≤ D whenever p_α = p̂_α(s_n) + π + χ.
    """
    s_n = np.clip(state.s_n, 0.0, 1.0)
    s_w = 1.0 - s_n
    k = permeability(state.phi, params)
    vols = state.spaces.volumes
    grad_n = cell_gradients(state, state.p_n)
    grad_w = cell_gradients(state, state.p_w)

    d = vols @ (k * (s_n / params.viscosity_n * np.sum(grad_n ** 2, axis=1)
                     + s_w / params.viscosity_w * np.sum(grad_w ** 2, axis=1)))
    lower, _ = kirchhoff_seminorms(state, model)
    return float(d), float(lower)


def kirchhoff_ordering_residual(dissipation_value: float, lower_bound: float, params: MaterialParams) -> float:
    """(μ♯/K♭)·D - bound; negative beyond roundoff when the pressures disagree with s_n, π and χ"""
    k_lo, _ = params.permeability_bounds()
    return float(params.viscosity_max / k_lo * dissipation_value - lower_bound)


def regularized_dissipation_bound(state: State, params: MaterialParams, eps: float) -> float:
    """∫ ((s_α+ε)/2)(K♭/μ♯)|∇p_α|², a lower bound of the ε-dissipation since k_ε(s) ≥ (s+ε)/2"""
    s_n = np.clip(state.s_n, 0.0, 1.0)
    k_lo, _ = params.permeability_bounds()
    scale = k_lo / params.viscosity_max
    vols = state.spaces.volumes
    total = 0.0
    for s, p in ((s_n, state.p_n), (1.0 - s_n, state.p_w)):
        grad = cell_gradients(state, p)
        total += vols @ (0.5 * (s + eps) * scale * np.sum(grad ** 2, axis=1))
    return float(total)


def kirchhoff_seminorms(state: State, base: CapillaryModel) -> Tuple[float, float]:
    """(‖∇ξ(s_n)‖² + ‖∇(π+χ)‖², ‖∇ψ(s_n)‖²) with s_n, π, χ lifted to the vertices"""
    s_nodal = np.clip(state.spaces.lift_to_nodes(np.clip(state.s_n, 0.0, 1.0)), 0.0, 1.0)
    xi, psi = kirchhoff_eval(base, s_nodal)
    pressure = state.pi_nodal() + state.chi_nodal()
    return (gradient_seminorm_sq(state, xi) + gradient_seminorm_sq(state, pressure),
            gradient_seminorm_sq(state, psi))


def kirchhoff_identity_defect(model: CapillaryModel, saturation: Callable[[np.ndarray], np.ndarray],
                              points: np.ndarray, step: float = 1e-5) -> float:
    """Max relative defect of s_n|∇p̂_n|² + s_w|∇p̂_w|² = |∇ξ(s_n)|² for a smooth s_n(x).

    The pressure gradients are central differences of p̂_α(s_n(x)); the right
    side uses the chain rule ∇ξ(s_n) = √(s_n s_w) γ''(s_n) ∇s_n.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    s = saturation(points)
    d2 = model.d2gamma(s)
    grad_pn = np.zeros(points.shape)
    grad_pw = np.zeros(points.shape)
    grad_s = np.zeros(points.shape)
    for axis in range(points.shape[1]):
        shift = np.zeros(points.shape[1])
        shift[axis] = step
        plus, minus = saturation(points + shift), saturation(points - shift)
        hat_plus, hat_minus = hat_pressures(model, plus), hat_pressures(model, minus)
        grad_pn[:, axis] = (hat_plus.p_n - hat_minus.p_n) / (2.0 * step)
        grad_pw[:, axis] = (hat_plus.p_w - hat_minus.p_w) / (2.0 * step)
        grad_s[:, axis] = (plus - minus) / (2.0 * step)

    lhs = s * np.sum(grad_pn ** 2, axis=1) + (1.0 - s) * np.sum(grad_pw ** 2, axis=1)
    rhs = s * (1.0 - s) * d2 ** 2 * np.sum(grad_s ** 2, axis=1)
    scale = np.maximum(np.abs(rhs), np.finfo(float).tiny)
    return float(np.max(np.abs(lhs - rhs) / scale))


def state_ledger(state: State, params: MaterialParams, base: CapillaryModel, regmodel: RegularizedModel,
                 mechanics: Optional[MechanicsSystem] = None) -> EnergyLedger:
    """Energies, dissipation and Kirchhoff bounds of one state; step terms stay zero"""
    ledger = helmholtz_energy(state, params, base, regmodel, mechanics)
    ledger.dissipation, ledger.kirchhoff_lower_bound = dissipation(state, params, base)
    ledger.kirchhoff_ordering_residual = kirchhoff_ordering_residual(
        ledger.dissipation, ledger.kirchhoff_lower_bound, params)
    _, ledger.psi_seminorm = kirchhoff_seminorms(state, base)
    ledger.regularized_dissipation_bound = regularized_dissipation_bound(state, params, regmodel.eps)
    return ledger
