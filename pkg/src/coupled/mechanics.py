# src/coupled/mechanics.py
"""
Quasi-static mechanics: the elasticity system with Biot coupling, the
equilibrium initial state and the mechanical energy norm.
"""
import time
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from src.constitutive import (
    PhaseContentPair,
    RegularizedModel,
    f_eps_energy,
    soft_constraint_g,
)
from src.femcore import SparseOperator, assemble, solve_sparse
from src.utils.errors import DomainError
from src.utils.logging_config import get_logger
from .material import MaterialParams, body_force
from .problem_spaces import ProblemSpaces
from .state import State

logger = get_logger(__name__)


@dataclass(eq=False)
class MechanicsSystem:
    spaces: ProblemSpaces
    params: MaterialParams

    @cached_property
    def elasticity(self) -> SparseOperator:
        return assemble("elasticity", self.spaces.displacement,
                        mu=self.params.lame_mu, lam=self.params.lame_lambda)

    @cached_property
    def coupling(self) -> sp.csr_matrix:
        """B with (B u)_K = b |K| div u|_K, so that Bᵀπ = ∫ b π div v"""
        return (sp.diags(self.params.biot_b * self.spaces.volumes) @ self.spaces.divergence).tocsr()

    @cached_property
    def free(self) -> np.ndarray:
        return self.spaces.displacement.free_dofs

    @cached_property
    def free_stiffness(self) -> sp.csr_matrix:
        return self.elasticity.restricted()

    def load(self, force_cells: np.ndarray) -> np.ndarray:
        return assemble("load", self.spaces.displacement, density=force_cells).values

    def residual(self, u: np.ndarray, pi: np.ndarray, force_cells: np.ndarray) -> np.ndarray:
        """A u - Bᵀπ - F on all dofs"""
        return self.elasticity.matrix @ u - self.coupling.T @ pi - self.load(force_cells)

    def energy(self, u: np.ndarray) -> float:
        """‖u‖²_{μ,λ} = ∫ 2μ ε(u):ε(u) + λ (div u)²"""
        return float(u @ (self.elasticity.matrix @ u))


def solve_mechanics(pi: np.ndarray, force_cells: np.ndarray, spaces: ProblemSpaces,
                    params: MaterialParams, system: Optional[MechanicsSystem] = None) -> np.ndarray:
    """u ∈ V^d with ∫ 2μ ε(u):ε(v) + λ div u div v = ∫ b π div v + ∫ f·v"""
    system = system or MechanicsSystem(spaces, params)
    if system.free.size == spaces.displacement.n_dofs:
        raise DomainError("mechanics needs a nonempty Dirichlet boundary")
    rhs = system.coupling.T @ np.asarray(pi, dtype=float) + system.load(force_cells)
    u = np.zeros(spaces.displacement.n_dofs)
    u[system.free] = solve_sparse(system.free_stiffness, rhs[system.free], label="mechanics")
    return u


def init_state(phi0: PhaseContentPair, params: MaterialParams, spaces: ProblemSpaces,
               regmodel: RegularizedModel, eps: float,
               system: Optional[MechanicsSystem] = None,
               equilibrium_dirichlet: Tuple[bool, bool] = (False, False)) -> State:
    """Equilibrium (u⁰, θ⁰, π⁰) for the cellwise initial contents φ⁰.

    θ⁰ is substituted out, which adds b²M (div u, div v) to the elasticity
    form and keeps the system SPD. Pressures are set to π⁰ + DF_ε(φ⁰),
    lifted to the vertices, with the Dirichlet data on Γ^D unless
    equilibrium_dirichlet keeps the equilibrium value there for that phase.
    """
    start = time.perf_counter()
    mesh = spaces.mesh
    bounds = params.bounds
    if not np.all(phi0.in_k_phi(bounds, tol=1e-14)):
        raise DomainError("initial contents outside the admissible set",
                          (float(phi0.phi.min()), float(phi0.phi.max())))

    system = system or MechanicsSystem(spaces, params)
    b, m = params.biot_b, params.biot_modulus
    vols = spaces.volumes
    phi_r = params.phi_r_cells(mesh)
    div = spaces.divergence

    augmented = system.elasticity.matrix + (b * b * m) * (div.T @ sp.diags(vols) @ div)
    rhs = (b * m) * (div.T @ (vols * (phi0.phi - phi_r))) + system.load(body_force(phi0, params, mesh))
    free = system.free
    u = np.zeros(spaces.displacement.n_dofs)
    u[free] = solve_sparse(augmented.tocsr()[free][:, free], rhs[free], label="initial-equilibrium")

    theta = phi0.phi - b * (div @ u) - phi_r
    pi = m * theta

    # G_ε diverges on the bounds, so the multiplier is read just inside them
    inner = PhaseContentPair(*_nudge_inside(phi0, bounds))
    chi = soft_constraint_g(bounds, eps, inner.phi)
    p_n, p_w = equilibrium_pressures(pi, inner, params, spaces, regmodel, eps)
    dirichlet = spaces.pressure.constrained_dofs
    if not equilibrium_dirichlet[0]:
        p_n[dirichlet] = params.nodal(params.p_dirichlet_n, mesh)[dirichlet]
    if not equilibrium_dirichlet[1]:
        p_w[dirichlet] = params.nodal(params.p_dirichlet_w, mesh)[dirichlet]

    logger.performance_metric("init_state", time.perf_counter() - start, cells=mesh.n_cells)
    return State(spaces, p_n, p_w, u, phi0.phi_n.copy(), phi0.phi_w.copy(), theta, pi, chi, eps)


def equilibrium_pressures(pi: np.ndarray, contents: PhaseContentPair, params: MaterialParams,
                          spaces: ProblemSpaces, regmodel: RegularizedModel, eps: float):
    """Nodal p_α = lift(π + ∂F_ε/∂φ_α), the pressures in balance with the contents"""
    _, (grad_n, grad_w) = f_eps_energy(regmodel, params.bounds, eps, contents)
    return spaces.lift_to_nodes(pi + grad_n), spaces.lift_to_nodes(pi + grad_w)


def _nudge_inside(pair: PhaseContentPair, bounds):
    phi = pair.phi
    margin = 1e-12 * bounds.width
    clipped = np.clip(phi, bounds.phi_lo + margin, bounds.phi_hi - margin)
    s_n = np.clip(pair.phi_n / phi, 0.0, 1.0)
    return clipped * s_n, clipped * (1.0 - s_n)
