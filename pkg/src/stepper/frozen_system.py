# src/stepper/frozen_system.py
"""
The frozen-coefficient step map H: residual, Jacobian and bookkeeping.

With (φ̃, ũ) frozen, one backward-Euler step is the zero of a monotone map
of Y = (p_n°, p_w°, u, θ, π). Contents are Φ_ε(P p_α - π) per cell, where P
takes the barycentre value of the nodal pressure.
"""
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
import scipy.sparse as sp

from src.constitutive import (
    PhaseContentPair,
    RegularizedModel,
    mobility_floor,
    phi_from_potentials,
    phi_jacobian,
    saturation_from_capillary,
)
from src.coupled import (
    MaterialParams,
    MechanicsSystem,
    ProblemSpaces,
    State,
    body_force,
    gravity_potential,
    permeability,
)
from src.diagnostics.energy_audit import StepTerms
from src.femcore import assemble
from .controls import ConstraintResidual, FrozenData, UnknownLayout

PHASES = ("n", "w")


@dataclass
class FlowFields:
    p: Dict[str, np.ndarray]
    u: np.ndarray
    theta: np.ndarray
    pi: np.ndarray


class FrozenSystem:
    def __init__(self, prev: State, frozen: FrozenData, eps: float, h: float,
                 params: MaterialParams, spaces: ProblemSpaces, regmodel: RegularizedModel,
                 mechanics: MechanicsSystem,
                 variant: ConstraintResidual = ConstraintResidual.MONOTONE):
        if regmodel.eps != eps:
            raise ValueError(f"regularized model at eps={regmodel.eps} used for eps={eps}")
        mesh = spaces.mesh
        self.prev = prev
        self.frozen = frozen
        self.eps = eps
        self.h = h
        self.params = params
        self.spaces = spaces
        self.regmodel = regmodel
        self.mechanics = mechanics
        self.variant = ConstraintResidual(variant)

        self.free_p = spaces.pressure.free_dofs
        self.dirichlet_p = spaces.pressure.constrained_dofs
        self.free_u = mechanics.free
        self.layout = UnknownLayout(self.free_p.size, self.free_u.size, mesh.n_cells)

        self.vols = spaces.volumes
        self.average = spaces.cell_average
        self.average_free = self.average[:, self.free_p].tocsr()
        self.phi_r = params.phi_r_cells(mesh)

        self.p_dirichlet = {
            "n": params.nodal(params.p_dirichlet_n, mesh),
            "w": params.nodal(params.p_dirichlet_w, mesh),
        }

        k = permeability(frozen.phi, params)
        saturations = {"n": frozen.s_n, "w": frozen.s_w}
        viscosities = {"n": params.viscosity_n, "w": params.viscosity_w}
        self.mobility = {a: mobility_floor(eps, saturations[a]) / viscosities[a] * k for a in PHASES}
        self.stiffness = {a: assemble("stiffness", spaces.scalar, coeff=self.mobility[a]).matrix for a in PHASES}
        self.stiffness_free = {a: self.stiffness[a][self.free_p][:, self.free_p].tocsr() for a in PHASES}

        displacement = spaces.displacement.components_of(frozen.u)
        self.gravity = {a: gravity_potential(params, mesh, displacement, a) for a in PHASES}
        self.load = mechanics.load(body_force(frozen.contents, params, mesh))

        self.elasticity = mechanics.elasticity.matrix
        self.elasticity_free = mechanics.free_stiffness
        self.coupling = mechanics.coupling
        self.coupling_free = self.coupling[:, self.free_u].tocsr()

        nodal_weights = spaces.mesh.lumped_vertex_measure
        self.row_weights = np.concatenate([
            nodal_weights[self.free_p],
            nodal_weights[self.free_p],
            np.tile(nodal_weights, mesh.dim)[self.free_u],
            self.vols,
            self.vols,
        ])

    # -- unknown vector <-> fields ---------------------------------------------

    def unknowns_from_state(self, state: State) -> np.ndarray:
        return self.layout.pack(
            state.p_n[self.free_p] - self.p_dirichlet["n"][self.free_p],
            state.p_w[self.free_p] - self.p_dirichlet["w"][self.free_p],
            state.u[self.free_u],
            state.theta,
            state.pi,
        )

    def fields(self, unknowns: np.ndarray) -> FlowFields:
        lay = self.layout
        pressures = {}
        for a, block in (("n", lay.p_n), ("w", lay.p_w)):
            p = self.p_dirichlet[a].copy()
            p[self.free_p] += unknowns[block]
            pressures[a] = p
        u = np.zeros(self.spaces.displacement.n_dofs)
        u[self.free_u] = unknowns[lay.u]
        return FlowFields(pressures, u, unknowns[lay.theta].copy(), unknowns[lay.pi].copy())

    def potentials(self, f: FlowFields) -> Tuple[np.ndarray, np.ndarray]:
        return self.average @ f.p["n"] - f.pi, self.average @ f.p["w"] - f.pi

    def contents(self, f: FlowFields) -> PhaseContentPair:
        y_n, y_w = self.potentials(f)
        return phi_from_potentials(self.regmodel, self.params.bounds, self.eps, y_n, y_w)

    # -- residual and Jacobian -------------------------------------------------

    def full_flow_residuals(self, f: FlowFields, contents: PhaseContentPair) -> Dict[str, np.ndarray]:
        """Flow residuals on every vertex, Dirichlet rows included"""
        changes = {"n": contents.phi_n - self.prev.phi_n, "w": contents.phi_w - self.prev.phi_w}
        return {
            a: self.average.T @ (self.vols * changes[a]) + self.h * (self.stiffness[a] @ (f.p[a] - self.gravity[a]))
            for a in PHASES
        }

    def residual(self, unknowns: np.ndarray) -> np.ndarray:
        f = self.fields(unknowns)
        contents = self.contents(f)
        flow = self.full_flow_residuals(f, contents)
        m = self.params.biot_modulus
        div_u = self.spaces.divergence @ f.u

        r_u = self.elasticity @ f.u - self.coupling.T @ f.pi - self.load
        r_theta = 2.0 * self.vols * (m * f.theta - f.pi)
        base = -contents.phi + self.phi_r + self.params.biot_b * div_u
        if self.variant == ConstraintResidual.MONOTONE:
            r_pi = self.vols * (base + f.pi / m)
        else:
            r_pi = self.vols * (base + 2.0 * f.theta - f.pi / m)

        return np.concatenate([flow["n"][self.free_p], flow["w"][self.free_p], r_u[self.free_u], r_theta, r_pi])

    def jacobian(self, unknowns: np.ndarray) -> sp.csc_matrix:
        f = self.fields(unknowns)
        y_n, y_w = self.potentials(f)
        _, jac = phi_jacobian(self.regmodel, self.params.bounds, self.eps, y_n, y_w)
        vols = self.vols
        m = self.params.biot_modulus
        pf = self.average_free

        def weighted(values):
            return sp.diags(vols * values)

        flow = {}
        for i, a in enumerate(PHASES):
            for j, c in enumerate(PHASES):
                block = pf.T @ weighted(jac[:, i, j]) @ pf
                if a == c:
                    block = block + self.h * self.stiffness_free[a]
                flow[a, c] = block
        flow_pi = {a: -(pf.T @ weighted(jac[:, i, 0] + jac[:, i, 1])) for i, a in enumerate(PHASES)}
        pi_p = {c: -(weighted(jac[:, 0, j] + jac[:, 1, j]) @ pf) for j, c in enumerate(PHASES)}

        total = jac[:, 0, 0] + jac[:, 0, 1] + jac[:, 1, 0] + jac[:, 1, 1]
        if self.variant == ConstraintResidual.MONOTONE:
            pi_pi = weighted(total + 1.0 / m)
            pi_theta = None
        else:
            pi_pi = weighted(total - 1.0 / m)
            pi_theta = weighted(np.full_like(vols, 2.0))

        blocks = [
            [flow["n", "n"], flow["n", "w"], None, None, flow_pi["n"]],
            [flow["w", "n"], flow["w", "w"], None, None, flow_pi["w"]],
            [None, None, self.elasticity_free, None, -self.coupling_free.T],
            [None, None, None, weighted(np.full_like(vols, 2.0 * m)), weighted(np.full_like(vols, -2.0))],
            [pi_p["n"], pi_p["w"], self.coupling_free, pi_theta, pi_pi],
        ]
        return sp.bmat(blocks, format="csc")

    def scaled_norm(self, residual: np.ndarray) -> float:
        if residual.size == 0:
            return 0.0
        return float(np.max(np.abs(residual) / self.row_weights))

    # -- accepted step ---------------------------------------------------------

    def state_from(self, unknowns: np.ndarray, time: float) -> State:
        """State of a solved Y; χ is the argument of G_ε⁻¹, so χ = G_ε(φ) exactly"""
        f = self.fields(unknowns)
        y_n, y_w = self.potentials(f)
        contents = phi_from_potentials(self.regmodel, self.params.bounds, self.eps, y_n, y_w)
        s_n = saturation_from_capillary(self.regmodel, y_n - y_w)
        chi = s_n * y_n + (1.0 - s_n) * y_w - self.regmodel.gamma(s_n)
        return State(self.spaces, f.p["n"], f.p["w"], f.u, contents.phi_n, contents.phi_w,
                     f.theta, f.pi, chi, self.eps, time)

    def step_terms(self, unknowns: np.ndarray) -> StepTerms:
        f = self.fields(unknowns)
        contents = self.contents(f)
        flow = self.full_flow_residuals(f, contents)
        y = dict(zip(PHASES, self.potentials(f)))
        changes = {"n": contents.phi_n - self.prev.phi_n, "w": contents.phi_w - self.prev.phi_w}
        vols = self.vols

        a_term = sum(vols @ (changes[a] * y[a]) for a in PHASES)
        b_term = vols @ ((changes["n"] + changes["w"]) * f.pi)
        r_term = sum(vols @ (changes[a] * (self.average @ self.p_dirichlet[a])) for a in PHASES)
        d_term = 0.0
        w_term = 0.0
        for a in PHASES:
            drive = self.stiffness[a] @ (f.p[a] - self.gravity[a])
            d_term += self.h * (f.p[a] - self.gravity[a]) @ drive
            w_term += self.h * (self.p_dirichlet[a] - self.gravity[a]) @ drive

        return StepTerms(
            A=float(a_term),
            B=float(b_term),
            D=float(d_term),
            R=float(r_term),
            W=float(w_term),
            gravity_work=float(self.load @ (f.u - self.prev.u)),
            eps=self.eps,
            boundary_flux_n=float(flow["n"][self.dirichlet_p].sum()),
            boundary_flux_w=float(flow["w"][self.dirichlet_p].sum()),
        )

    # -- probe norm -------------------------------------------------------------

    def probe_norm_sq(self, delta: np.ndarray) -> float:
        """h Σ_α ∫λ_α|∇Δp_α|² + ‖Δu‖²_{μ,λ} + M‖Δθ‖² + ‖Δπ‖²/M"""
        return float(sum(self.block_norms_sq(delta)))

    def block_norms_sq(self, delta: np.ndarray) -> Tuple[float, ...]:
        lay = self.layout
        m = self.params.biot_modulus
        parts = []
        for a, block in (("n", lay.p_n), ("w", lay.p_w)):
            dp = delta[block]
            parts.append(self.h * dp @ (self.stiffness_free[a] @ dp))
        du = delta[lay.u]
        parts.append(du @ (self.elasticity_free @ du))
        parts.append(m * self.vols @ delta[lay.theta] ** 2)
        parts.append(self.vols @ delta[lay.pi] ** 2 / m)
        return tuple(float(p) for p in parts)
