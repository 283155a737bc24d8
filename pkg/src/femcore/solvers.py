# src/femcore/solvers.py
"""
Linear solves on the free degrees of freedom, V' dual norms and
coercivity estimates.
"""
import time
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import eigh

from src.utils.errors import LinearSolveError, SpaceMismatchError
from src.utils.logging_config import get_logger
from .assembly import SparseOperator, assemble
from .spaces import Field, FeSpace, SpaceKind

logger = get_logger(__name__)

SOLVE_RTOL = 1e-12
REFINEMENT_STEPS = 3
DENSE_EIGEN_LIMIT = 400


def _relative_residual(matrix, x: np.ndarray, rhs: np.ndarray) -> float:
    scale = np.linalg.norm(rhs)
    residual = np.linalg.norm(rhs - matrix @ x)
    return float(residual / scale) if scale > 0 else float(residual)


def solve_sparse(matrix: sp.spmatrix, rhs: np.ndarray, symmetric: bool = True,
                 rtol: float = SOLVE_RTOL, label: str = "system") -> np.ndarray:
    """Direct LU with iterative refinement; CG (or GMRES) fallback with the same target"""
    start = time.perf_counter()
    matrix = sp.csc_matrix(matrix)
    rhs = np.asarray(rhs, dtype=float)
    if matrix.shape[0] == 0:
        return np.zeros(0)
    if not np.any(rhs):
        return np.zeros(matrix.shape[1])

    x = None
    achieved = np.inf
    try:
        lu = spla.splu(matrix)
        x = lu.solve(rhs)
        for _ in range(REFINEMENT_STEPS):
            achieved = _relative_residual(matrix, x, rhs)
            if achieved <= rtol:
                break
            x = x + lu.solve(rhs - matrix @ x)
        achieved = _relative_residual(matrix, x, rhs)
    except RuntimeError as exc:
        logger.warning("Direct factorization failed, trying iterative fallback", system=label, reason=str(exc))

    if x is None or not np.isfinite(achieved) or achieved > rtol:
        iterative = spla.cg if symmetric else spla.gmres
        guess = x if x is not None and np.all(np.isfinite(x)) else None
        x_it, info = iterative(matrix, rhs, x0=guess, rtol=rtol, atol=0.0, maxiter=10 * matrix.shape[0])
        achieved_it = _relative_residual(matrix, x_it, rhs)
        if achieved_it < achieved or x is None:
            x, achieved = x_it, achieved_it
        # rounding can leave a few ulps above the target on ill-scaled systems
        if info != 0 and achieved > 10 * rtol:
            raise LinearSolveError(f"{label}: solve did not reach relative residual {rtol:g}", achieved)

    if achieved > 10 * rtol:
        raise LinearSolveError(f"{label}: relative residual {achieved:.3e} above target", achieved)

    logger.performance_metric("linear_solve", time.perf_counter() - start,
                              system=label, size=matrix.shape[0], residual=achieved)
    return x


def solve_spd(op: SparseOperator, rhs: Union[Field, np.ndarray],
              lifting: Optional[np.ndarray] = None) -> Field:
    """Solve op·x = rhs on the free dofs; constrained dofs take `lifting` (default zero)"""
    if op.trial.kind != op.test.kind:
        raise SpaceMismatchError("solve_spd needs a square operator on one space")
    space = op.trial
    rhs_values = rhs.values if isinstance(rhs, Field) else np.asarray(rhs, dtype=float)
    if rhs_values.shape != (space.n_dofs,):
        raise SpaceMismatchError(f"right-hand side has length {rhs_values.shape}, expected {space.n_dofs}")

    full = np.zeros(space.n_dofs) if lifting is None else np.array(lifting, dtype=float, copy=True)
    free = space.free_dofs
    reduced_rhs = rhs_values[free]
    if space.constrained_dofs.size and np.any(full[space.constrained_dofs]):
        reduced_rhs = reduced_rhs - op.coupling_to_constrained() @ full[space.constrained_dofs]

    full[free] = solve_sparse(op.restricted(), reduced_rhs, symmetric=op.symmetric, label="spd")
    return Field(space, full)


def dual_norm_vprime(functional: Union[Field, np.ndarray], space: FeSpace,
                     stiffness: Optional[SparseOperator] = None) -> float:
    """‖ℓ‖_V' = ‖∇r‖ for the Riesz representer r ∈ V of the nodal covector ℓ.

    Without a Dirichlet part the constant mode is removed from ℓ first and the
    representer is pinned at one vertex.
    """
    values = functional.values if isinstance(functional, Field) else np.asarray(functional, dtype=float)
    if not np.any(values):
        return 0.0
    if stiffness is None:
        stiffness = assemble("stiffness", space)

    free = space.free_dofs
    if space.constrained_dofs.size == 0 or space.kind == SpaceKind.SCALAR_H1:
        weights = space.mesh.lumped_vertex_measure
        values = values - values.sum() / weights.sum() * weights
        free = np.arange(1, space.n_dofs)

    matrix = stiffness.matrix[free][:, free]
    representer = solve_sparse(matrix, values[free], label="riesz")
    return float(np.sqrt(max(representer @ (matrix @ representer), 0.0)))


def coercivity_constant(op: SparseOperator, reference: SparseOperator) -> float:
    """Smallest generalized eigenvalue of (op, reference) on the free dofs"""
    a = op.restricted()
    b = reference.restricted()
    if a.shape[0] <= DENSE_EIGEN_LIMIT:
        return float(eigh(a.toarray(), b.toarray(), eigvals_only=True, subset_by_index=[0, 0])[0])
    values = spla.eigsh(a.tocsc(), k=1, M=b.tocsc(), sigma=0.0, which="LM", return_eigenvectors=False)
    return float(values.min())


def positivity_probe(op: SparseOperator, samples: int = 100, seed: int = 0) -> float:
    """Minimum Rayleigh quotient over random free vectors"""
    return float(op.rayleigh_probe(samples=samples, seed=seed).min())
