# src/coupled/state.py
from dataclasses import dataclass, replace
from typing import Dict

import numpy as np

from src.constitutive import PhaseContentPair
from .material import MaterialParams
from .problem_spaces import ProblemSpaces


@dataclass
class State:
    """X = (φ_n, φ_w, u, θ, π) with the multiplier χ and the phase pressures.

    Pressures and u are nodal (full vectors, Dirichlet values included);
    contents, θ, π and χ are cellwise.
    """

    spaces: ProblemSpaces
    p_n: np.ndarray
    p_w: np.ndarray
    u: np.ndarray
    phi_n: np.ndarray
    phi_w: np.ndarray
    theta: np.ndarray
    pi: np.ndarray
    chi: np.ndarray
    eps: float
    time: float = 0.0

    @property
    def contents(self) -> PhaseContentPair:
        return PhaseContentPair(self.phi_n, self.phi_w)

    @property
    def phi(self) -> np.ndarray:
        return self.phi_n + self.phi_w

    @property
    def s_n(self) -> np.ndarray:
        return self.phi_n / self.phi

    def pi_nodal(self) -> np.ndarray:
        return self.spaces.lift_to_nodes(self.pi)

    def chi_nodal(self) -> np.ndarray:
        return self.spaces.lift_to_nodes(self.chi)

    def div_u(self) -> np.ndarray:
        return self.spaces.divergence @ self.u

    def displacement_nodal(self) -> np.ndarray:
        return self.spaces.displacement.components_of(self.u)

    def constraint_residual(self, params: MaterialParams) -> np.ndarray:
        """φ - b div u - θ - φ_r per cell"""
        phi_r = params.phi_r_cells(self.spaces.mesh)
        return self.phi - params.biot_b * self.div_u() - self.theta - phi_r

    def biot_residual(self, params: MaterialParams) -> np.ndarray:
        return self.pi - params.biot_modulus * self.theta

    def copy(self, **changes) -> "State":
        arrays = {name: np.array(getattr(self, name), copy=True)
                  for name in ("p_n", "p_w", "u", "phi_n", "phi_w", "theta", "pi", "chi")}
        arrays.update(changes)
        return replace(self, **arrays)

    def field_distances(self, other: "State") -> Dict[str, float]:
        """L² distances per field (lumped for nodal fields)"""
        nodal = self.spaces.mesh.lumped_vertex_measure
        vols = self.spaces.volumes
        du = (self.displacement_nodal() - other.displacement_nodal()) ** 2
        return {
            "p_n": float(np.sqrt(nodal @ (self.p_n - other.p_n) ** 2)),
            "p_w": float(np.sqrt(nodal @ (self.p_w - other.p_w) ** 2)),
            "u": float(np.sqrt(nodal @ du.sum(axis=1))),
            "phi_n": float(np.sqrt(vols @ (self.phi_n - other.phi_n) ** 2)),
            "phi_w": float(np.sqrt(vols @ (self.phi_w - other.phi_w) ** 2)),
            "theta": float(np.sqrt(vols @ (self.theta - other.theta) ** 2)),
            "pi": float(np.sqrt(vols @ (self.pi - other.pi) ** 2)),
            "chi": float(np.sqrt(vols @ (self.chi - other.chi) ** 2)),
        }

    def total_contents(self):
        vols = self.spaces.volumes
        return float(vols @ self.phi_n), float(vols @ self.phi_w)
