# src/diagnostics/energy_audit.py
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from src.constitutive import RegularizedModel
from src.coupled import MaterialParams, MechanicsSystem, State
from src.utils.errors import EpsMismatchError
from .energies import regularized_content_energy, solid_energy

IDENTITY_RTOL = 1e-9
IDENTITY_ATOL = 1e-12
INEQUALITY_RTOL = 1e-8


@dataclass
class StepTerms:
    """Per-step bookkeeping terms of the tested flow equations.

    A = Σ_α ∫(φ_α - φ_α^prev)(p_α - π), B = ∫(φ - φ^prev)π,
    D = h Σ_α (p_α - g_α)ᵀ S_α (p_α - g_α) with g_α the gravity potential,
    R = Σ_α ∫(φ_α - φ_α^prev) p_α^D, W = h Σ_α (p_α^D - g_α)ᵀ S_α (p_α - g_α).
    Solving the flow rows exactly gives A + B + D = R + W.
    """

    A: float
    B: float
    D: float
    R: float
    W: float
    gravity_work: float
    eps: float
    boundary_flux_n: float = 0.0
    boundary_flux_w: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AuditResult:
    identity_defect: float
    identity_scale: float
    inequality_residual: float
    energy_scale: float
    energy_change: float

    @property
    def identity_holds(self) -> bool:
        return self.identity_defect <= IDENTITY_RTOL * self.identity_scale + IDENTITY_ATOL

    @property
    def inequality_holds(self) -> bool:
        return self.inequality_residual >= -INEQUALITY_RTOL * self.energy_scale

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(identity_holds=self.identity_holds, inequality_holds=self.inequality_holds)
        return out


def regularized_free_energy(state: State, params: MaterialParams, regmodel: RegularizedModel,
                            mechanics: MechanicsSystem) -> float:
    """F_ε(X) = Σ|K|[φγ_ε(s_n) + 𝒢_ε(φ)] + ½uᵀAu + Σ|K|(M/2)θ²"""
    return regularized_content_energy(state, regmodel, params) + solid_energy(state, params, mechanics)


def energy_audit(prev: State, next_state: State, terms: StepTerms, h: float, eps: float,
                 params: MaterialParams, regmodel: RegularizedModel,
                 mechanics: Optional[MechanicsSystem] = None) -> AuditResult:
    """Check the tested-equation identity and the convexity inequality of one step.

    (i)  A + B + D = R + W, to solver tolerance.
    (ii) F_ε(next) - F_ε(prev) ≤ A + B + ∫ f(φ̃)·(u_next - u_prev); the residual
         is the right side minus the left side and must be nonnegative up to
         roundoff. prev, next, terms and regmodel must all sit at ε; h enters through
         D and W.
    """
    levels = {"prev": prev.eps, "next": next_state.eps, "terms": terms.eps, "model": regmodel.eps}
    stale = {name: value for name, value in levels.items() if value != eps}
    if stale:
        raise EpsMismatchError(f"energy audit at eps={eps} got " + ", ".join(f"{k}.eps={v}" for k, v in stale.items()))
    mechanics = mechanics or MechanicsSystem(next_state.spaces, params)

    lhs = terms.A + terms.B + terms.D
    rhs = terms.R + terms.W
    identity_scale = max(abs(terms.A) + abs(terms.B) + abs(terms.D), abs(terms.R) + abs(terms.W),
                         np.finfo(float).tiny)

    f_next = regularized_free_energy(next_state, params, regmodel, mechanics)
    f_prev = regularized_free_energy(prev, params, regmodel, mechanics)
    change = f_next - f_prev
    bound = terms.A + terms.B + terms.gravity_work
    energy_scale = max(abs(f_next), abs(f_prev), abs(terms.A) + abs(terms.B) + abs(terms.gravity_work), 1e-300)

    return AuditResult(
        identity_defect=float(abs(lhs - rhs)),
        identity_scale=float(identity_scale),
        inequality_residual=float(bound - change),
        energy_scale=float(energy_scale),
        energy_change=float(change),
    )
