# src/coupled/material.py
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Tuple, Union

import numpy as np

from src.constitutive import PhaseContentPair, PorosityBounds
from src.femcore import Mesh
from src.utils.errors import DomainError

FieldLike = Union[float, np.ndarray]

BOUNDS_TOL = 1e-12


class PermeabilityLaw(Enum):
    KOZENY_CARMAN = "kozeny-carman"
    CONSTANT = "constant"


def _kozeny_carman(k0: float, phi: np.ndarray) -> np.ndarray:
    return k0 * phi ** 3 / (1.0 - phi) ** 2


def _constant(k0: float, phi: np.ndarray) -> np.ndarray:
    return np.full_like(phi, k0)


PERMEABILITY_LAWS: Dict[PermeabilityLaw, Callable[[float, np.ndarray], np.ndarray]] = {
    PermeabilityLaw.KOZENY_CARMAN: _kozeny_carman,
    PermeabilityLaw.CONSTANT: _constant,
}


@dataclass
class MaterialParams:
    """Constant coefficients plus the spatial data fields of one scenario.

    Field-valued entries (phi_r, rock_density, p_dirichlet_*, f_ext) are either
    scalars or nodal arrays; f_ext may also be a constant d-vector.
    """

    bounds: PorosityBounds
    viscosity_n: float = 1.0
    viscosity_w: float = 1.0
    density_n: float = 1.0
    density_w: float = 1.0
    gravity: Tuple[float, ...] = (0.0, 0.0)
    lame_mu: float = 1.0
    lame_lambda: float = 1.0
    biot_b: float = 1.0
    biot_modulus: float = 1.0
    permeability_scale: float = 1.0
    permeability_law: PermeabilityLaw = PermeabilityLaw.KOZENY_CARMAN
    phi_r: FieldLike = 0.25
    rock_density: FieldLike = 0.0
    f_ext: FieldLike = 0.0
    p_dirichlet_n: FieldLike = 0.0
    p_dirichlet_w: FieldLike = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def viscosity_max(self) -> float:
        return max(self.viscosity_n, self.viscosity_w)

    @property
    def viscosity_min(self) -> float:
        return min(self.viscosity_n, self.viscosity_w)

    def gravity_vector(self, dim: int) -> np.ndarray:
        g = np.zeros(dim)
        values = np.asarray(self.gravity, dtype=float).ravel()[:dim]
        g[:values.size] = values
        return g

    def permeability_bounds(self) -> Tuple[float, float]:
        """(K♭, K♯) of the configured law over the porosity bounds"""
        law = PERMEABILITY_LAWS[self.permeability_law]
        ends = law(self.permeability_scale, np.array([self.bounds.phi_lo, self.bounds.phi_hi]))
        return float(ends[0]), float(ends[1])

    def nodal(self, value: FieldLike, mesh: Mesh) -> np.ndarray:
        arr = np.asarray(value, dtype=float)
        if arr.ndim == 0:
            return np.full(mesh.n_vertices, float(arr))
        if arr.shape != (mesh.n_vertices,):
            raise DomainError(f"nodal field has shape {arr.shape}, expected ({mesh.n_vertices},)")
        return arr

    def cellwise(self, value: FieldLike, mesh: Mesh) -> np.ndarray:
        """Barycentre values of a scalar or nodal field"""
        return self.nodal(value, mesh)[mesh.cells].mean(axis=1)

    def phi_r_cells(self, mesh: Mesh) -> np.ndarray:
        return self.cellwise(self.phi_r, mesh)

    def external_force_cells(self, mesh: Mesh) -> np.ndarray:
        arr = np.asarray(self.f_ext, dtype=float)
        d = mesh.dim
        if arr.ndim == 0:
            return np.full((mesh.n_cells, d), float(arr))
        if arr.shape == (d,):
            return np.broadcast_to(arr, (mesh.n_cells, d)).copy()
        if arr.shape == (mesh.n_vertices, d):
            return arr[mesh.cells].mean(axis=1)
        raise DomainError(f"external force has shape {arr.shape}")


def permeability(phi: np.ndarray, params: MaterialParams) -> np.ndarray:
    """Isotropic permeability multiplier K(φ) per cell (the tensor is K(φ)·I)"""
    phi = np.asarray(phi, dtype=float)
    lo, hi = params.bounds.phi_lo, params.bounds.phi_hi
    if np.any(phi < lo - BOUNDS_TOL) or np.any(phi > hi + BOUNDS_TOL):
        raise DomainError("porosity outside the bounds for the permeability law",
                          (float(phi.min()), float(phi.max())))
    return PERMEABILITY_LAWS[params.permeability_law](params.permeability_scale, phi)


def permeability_tensor(phi: np.ndarray, params: MaterialParams, dim: int) -> np.ndarray:
    k = permeability(phi, params)
    return k[..., None, None] * np.eye(dim)


def body_force(contents: PhaseContentPair, params: MaterialParams, mesh: Mesh) -> np.ndarray:
    """f = (φ_n ρ_n + φ_w ρ_w + (1 - φ_r) ρ_s,r) g + f_ext per cell, shape (nc, d)"""
    phi_r = params.phi_r_cells(mesh)
    rock = params.cellwise(params.rock_density, mesh)
    bulk = contents.phi_n * params.density_n + contents.phi_w * params.density_w + (1.0 - phi_r) * rock
    return bulk[:, None] * params.gravity_vector(mesh.dim)[None, :] + params.external_force_cells(mesh)


def gravity_potential(params: MaterialParams, mesh: Mesh, displacement_nodal: np.ndarray,
                      phase: str) -> np.ndarray:
    """Nodal ρ_α g·(x + u)"""
    density = params.density_n if phase == "n" else params.density_w
    g = params.gravity_vector(mesh.dim)
    return density * ((mesh.vertices + displacement_nodal) @ g)
