# src/femcore/assembly.py
"""
Sparse assembly of P1/P0 bilinear and linear forms.

Local matrices are computed for all cells at once and scattered through a
COO matrix; duplicate entries add up on conversion to CSR.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from src.utils.errors import SpaceMismatchError
from .mesh import Mesh
from .spaces import Field, FeSpace, SpaceKind, require_same_mesh


class AssemblyKind(str, Enum):
    MASS = "mass"
    LUMPED_MASS = "lumped_mass"
    STIFFNESS = "stiffness"
    ELASTICITY = "elasticity"
    DIV_COUPLING = "div_coupling"
    LOAD = "load"


@dataclass
class SparseOperator:
    """Assembled operator, rows indexed by test dofs and columns by trial dofs"""

    matrix: sp.csr_matrix
    trial: FeSpace
    test: FeSpace
    symmetric: bool = False
    quadrature: str = "exact"
    metadata: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.matrix.shape

    def restricted(self) -> sp.csr_matrix:
        """Block acting from free trial dofs to free test dofs"""
        return self.matrix[self.test.free_dofs][:, self.trial.free_dofs].tocsr()

    def coupling_to_constrained(self) -> sp.csr_matrix:
        return self.matrix[self.test.free_dofs][:, self.trial.constrained_dofs].tocsr()

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ values

    def symmetry_defect(self) -> float:
        diff = abs(self.matrix - self.matrix.T).max() if self.matrix.nnz else 0.0
        scale = abs(self.matrix).max() if self.matrix.nnz else 1.0
        return float(diff / scale) if scale else 0.0

    def assert_symmetric(self, tol: float = 1e-12) -> None:
        defect = self.symmetry_defect()
        if defect > tol:
            raise SpaceMismatchError(f"operator flagged symmetric has relative defect {defect:.3e}")

    def rayleigh_probe(self, samples: int = 100, seed: int = 0,
                       reference: Optional["SparseOperator"] = None) -> np.ndarray:
        """Rayleigh quotients on random free vectors (against `reference` when given)"""
        rng = np.random.default_rng(seed)
        a = self.restricted()
        b = reference.restricted() if reference is not None else None
        quotients = np.empty(samples)
        for k in range(samples):
            x = rng.standard_normal(a.shape[1])
            denominator = x @ (b @ x) if b is not None else x @ x
            quotients[k] = (x @ (a @ x)) / denominator
        return quotients


def _scatter(rows: np.ndarray, cols: np.ndarray, vals: np.ndarray, shape) -> sp.csr_matrix:
    return sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=shape).tocsr()


def _cell_values(mesh: Mesh, coeff, trailing=()) -> np.ndarray:
    """Coefficient as per-cell values; nodal P1 data is averaged (barycentre rule)"""
    coeff = np.asarray(coeff, dtype=float)
    if coeff.ndim == 0:
        return np.broadcast_to(coeff, (mesh.n_cells,) + trailing)
    if coeff.shape[0] == mesh.n_cells:
        return coeff
    if coeff.shape[0] == mesh.n_vertices:
        return coeff[mesh.cells].mean(axis=1)
    raise SpaceMismatchError(f"coefficient of shape {coeff.shape} is neither per cell nor per vertex")


def mass_matrix(space: FeSpace) -> sp.csr_matrix:
    mesh = space.mesh
    d = mesh.dim
    local = (np.ones((d + 1, d + 1)) + np.eye(d + 1)) / ((d + 1) * (d + 2))
    vals = mesh.cell_volumes[:, None, None] * local[None, :, :]
    cells = mesh.cells
    rows = np.repeat(cells[:, :, None], d + 1, axis=2)
    cols = np.repeat(cells[:, None, :], d + 1, axis=1)
    return _scatter(rows, cols, vals, (mesh.n_vertices, mesh.n_vertices))


def stiffness_matrix(space: FeSpace, coeff=1.0) -> sp.csr_matrix:
    """∫ C ∇u·∇v with C a scalar or d×d tensor per cell"""
    mesh = space.mesh
    d = mesh.dim
    grads = mesh.basis_gradients
    coeff = np.asarray(coeff, dtype=float)

    if coeff.ndim >= 2 and coeff.shape[-2:] == (d, d) and coeff.shape[0] in (mesh.n_cells, mesh.n_vertices):
        tensor = _cell_values(mesh, coeff, (d, d))
        flux = np.einsum("kab,kjb->kja", tensor, grads)
        vals = np.einsum("kia,kja->kij", grads, flux)
    else:
        scalar = _cell_values(mesh, coeff)
        vals = scalar[:, None, None] * np.einsum("kia,kja->kij", grads, grads)
    vals = vals * mesh.cell_volumes[:, None, None]

    cells = mesh.cells
    rows = np.repeat(cells[:, :, None], d + 1, axis=2)
    cols = np.repeat(cells[:, None, :], d + 1, axis=1)
    return _scatter(rows, cols, vals, (mesh.n_vertices, mesh.n_vertices))


def _vector_dof_indices(space: FeSpace) -> np.ndarray:
    """(nc, (d+1)*d) dof indices ordered (vertex, component)"""
    mesh = space.mesh
    d = mesh.dim
    cells = mesh.cells
    idx = np.empty((mesh.n_cells, d + 1, d), dtype=int)
    for c in range(d):
        idx[:, :, c] = c * mesh.n_vertices + cells
    return idx.reshape(mesh.n_cells, -1)


def elasticity_matrix(space: FeSpace, mu: float, lam: float) -> sp.csr_matrix:
    """∫ 2μ ε(u):ε(v) + λ div u div v"""
    mesh = space.mesh
    d = mesh.dim
    g = mesh.basis_gradients
    eye = np.eye(d)

    # local[k, i, a, j, b] for test (i, a) and trial (j, b)
    gg = np.einsum("kic,kjc->kij", g, g)
    local = mu * (gg[:, :, None, :, None] * eye[None, None, :, None, :]
                  + np.einsum("kja,kib->kiajb", g, g))
    local = local + lam * np.einsum("kia,kjb->kiajb", g, g)
    local = local * mesh.cell_volumes[:, None, None, None, None]

    n_local = (d + 1) * d
    local = local.reshape(mesh.n_cells, n_local, n_local)
    idx = _vector_dof_indices(space)
    rows = np.repeat(idx[:, :, None], n_local, axis=2)
    cols = np.repeat(idx[:, None, :], n_local, axis=1)
    return _scatter(rows, cols, local, (space.n_dofs, space.n_dofs))


def divergence_per_cell(space: FeSpace) -> sp.csr_matrix:
    """Matrix D with (D u)_K = div u on cell K for a P1 vector field"""
    mesh = space.mesh
    g = mesh.basis_gradients
    idx = _vector_dof_indices(space)
    vals = g.reshape(mesh.n_cells, -1)
    rows = np.repeat(np.arange(mesh.n_cells)[:, None], idx.shape[1], axis=1)
    return _scatter(rows, idx, vals, (mesh.n_cells, space.n_dofs))


def cell_average_matrix(space: FeSpace) -> sp.csr_matrix:
    """Matrix P with (P v)_K = mean of the vertex values of K (barycentre value)"""
    mesh = space.mesh
    d = mesh.dim
    rows = np.repeat(np.arange(mesh.n_cells)[:, None], d + 1, axis=1)
    vals = np.full(mesh.cells.shape, 1.0 / (d + 1))
    return _scatter(rows, mesh.cells, vals, (mesh.n_cells, mesh.n_vertices))


def div_coupling_matrix(trial: FeSpace, test: FeSpace, b: float) -> sp.csr_matrix:
    """(w, v) ↦ ∫ b w div v with w cellwise or nodal scalar, v vector P1"""
    mesh = require_same_mesh(trial, test)
    weighted = sp.diags(b * mesh.cell_volumes) @ divergence_per_cell(test)
    if trial.kind == SpaceKind.CELLWISE:
        return weighted.T.tocsr()
    return (weighted.T @ cell_average_matrix(trial)).tocsr()


def load_vector(space: FeSpace, density) -> np.ndarray:
    """∫ f·v for f given per cell (barycentre rule) or per vertex (exact P1 product)"""
    mesh = space.mesh
    components = space.components
    density = np.asarray(density, dtype=float)
    if components > 1 and density.ndim == 1 and density.shape[0] == components:
        density = np.broadcast_to(density, (mesh.n_cells, components))
    if components == 1 and density.ndim == 0:
        density = np.broadcast_to(density, (mesh.n_cells,))
    density = density.reshape(density.shape[0], -1)

    out = np.zeros(space.n_dofs)
    if density.shape[0] == mesh.n_vertices:
        mass = mass_matrix(FeSpace(mesh, SpaceKind.SCALAR_H1))
        for c in range(components):
            out[c * mesh.n_vertices:(c + 1) * mesh.n_vertices] = mass @ density[:, c]
        return out
    if density.shape[0] != mesh.n_cells:
        raise SpaceMismatchError("load density must be given per cell or per vertex")

    share = mesh.cell_volumes / (mesh.dim + 1)
    for c in range(components):
        block = np.zeros(mesh.n_vertices)
        np.add.at(block, mesh.cells.ravel(), np.repeat(share * density[:, c], mesh.dim + 1))
        out[c * mesh.n_vertices:(c + 1) * mesh.n_vertices] = block
    return out


def vector_laplacian_matrix(space: FeSpace) -> sp.csr_matrix:
    scalar = stiffness_matrix(space)
    return sp.block_diag([scalar] * space.components, format="csr")


def assemble(kind: Union[AssemblyKind, str], trial: FeSpace, test: Optional[FeSpace] = None,
             **params) -> Union[SparseOperator, Field]:
    """Assemble one of the supported forms.

    kinds: mass, lumped_mass, stiffness(coeff=), elasticity(mu=, lam=),
    div_coupling(b=), load(density=). Nonlinear coefficients use the
    one-point barycentre rule; this is recorded on the operator.
    """
    kind = AssemblyKind(kind)
    test = test or trial
    mesh = require_same_mesh(trial, test)

    if kind == AssemblyKind.LOAD:
        return Field(test, load_vector(test, params["density"]))

    if kind == AssemblyKind.DIV_COUPLING:
        if test.kind != SpaceKind.VECTOR_DIRICHLET0:
            raise SpaceMismatchError("div_coupling needs a vector test space")
        matrix = div_coupling_matrix(trial, test, params.get("b", 1.0))
        return SparseOperator(matrix, trial, test, symmetric=False, quadrature="exact")

    if trial.kind != test.kind:
        raise SpaceMismatchError(f"{kind.value} needs matching trial/test spaces")

    if kind == AssemblyKind.MASS:
        matrix = mass_matrix(trial)
        if trial.components > 1:
            matrix = sp.block_diag([matrix] * trial.components, format="csr")
        return SparseOperator(matrix, trial, test, symmetric=True)
    if kind == AssemblyKind.LUMPED_MASS:
        diag = np.tile(mesh.lumped_vertex_measure, trial.components)
        return SparseOperator(sp.diags(diag).tocsr(), trial, test, symmetric=True, quadrature="vertex")
    if kind == AssemblyKind.STIFFNESS:
        coeff = params.get("coeff", 1.0)
        quadrature = "exact" if np.ndim(coeff) == 0 else "barycentre"
        return SparseOperator(stiffness_matrix(trial, coeff), trial, test, symmetric=True, quadrature=quadrature)
    if kind == AssemblyKind.ELASTICITY:
        if trial.kind != SpaceKind.VECTOR_DIRICHLET0:
            raise SpaceMismatchError("elasticity needs a vector space")
        matrix = elasticity_matrix(trial, params["mu"], params["lam"])
        return SparseOperator(matrix, trial, test, symmetric=True)

    raise SpaceMismatchError(f"unsupported assembly kind {kind}")
