# src/stepper/newton_solver.py
import time
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from src.constitutive import RegularizedModel
from src.coupled import MaterialParams, MechanicsSystem, ProblemSpaces, State
from src.utils.errors import NewtonConvergenceError
from src.utils.logging_config import get_logger
from .controls import FrozenData, StepControls
from .frozen_system import FrozenSystem

logger = get_logger(__name__)

SINGULAR_SHIFT = 1e-10


@dataclass
class NewtonResult:
    unknowns: np.ndarray
    iterations: int
    residual_norm: float
    system: FrozenSystem
    trace: List[Dict[str, Any]] = field(default_factory=list)
    used_fallback: bool = False

    def __iter__(self) -> Iterator:
        yield self.unknowns
        yield self.iterations


def _factorize(matrix: sp.csc_matrix, weights: np.ndarray):
    """LU of the Jacobian; a singular matrix gets a small diagonal shift"""
    try:
        return spla.splu(matrix)
    except RuntimeError:
        scale = abs(matrix).max() if matrix.nnz else 1.0
        shift = SINGULAR_SHIFT * scale * weights / weights.max()
        logger.debug("Singular Jacobian, factorizing with a diagonal shift", shift=float(shift.max()))
        return spla.splu((matrix + sp.diags(shift)).tocsc())


def _merit(system: FrozenSystem, residual: np.ndarray) -> float:
    return float(np.linalg.norm(residual / system.row_weights))


def newton_solve(system: FrozenSystem, controls: StepControls,
                 initial: Optional[np.ndarray] = None) -> NewtonResult:
    """Damped Newton on the frozen map with Armijo backtracking.

    When the line search stalls the remaining iterations run a chord (Picard)
    iteration with the first Jacobian and step halving. Convergence is the
    scaled max-norm of the residual falling below newton_tol.
    """
    start = time.perf_counter()
    y = system.unknowns_from_state(system.prev) if initial is None else np.array(initial, dtype=float)
    r = system.residual(y)
    norm = system.scaled_norm(r)
    trace: List[Dict[str, Any]] = [{"iteration": 0, "residual": norm, "step": 0.0}]
    best_norm, best_y = norm, y
    chord_lu = None
    fallback = False

    iteration = 0
    while norm > controls.newton_tol:
        if iteration >= controls.newton_max:
            raise NewtonConvergenceError(
                f"Newton did not reach {controls.newton_tol:g} in {controls.newton_max} iterations",
                best_norm, trace,
            )
        iteration += 1

        if not fallback:
            lu = _factorize(system.jacobian(y), system.row_weights)
            if chord_lu is None:
                chord_lu = lu
        else:
            lu = chord_lu

        direction = lu.solve(-r)
        merit0 = _merit(system, r)
        t = 1.0
        accepted = False
        while t >= controls.min_line_step:
            y_try = y + t * direction
            r_try = system.residual(y_try)
            merit_try = _merit(system, r_try)
            sufficient = merit_try <= (1.0 - controls.armijo_c * t) * merit0
            if sufficient or (fallback and merit_try < merit0):
                accepted = True
                break
            t *= 0.5

        if not accepted:
            if fallback:
                raise NewtonConvergenceError("Picard fallback stagnated", best_norm, trace)
            fallback = True
            logger.debug("Line search stalled, switching to chord iteration", iteration=iteration)
            trace.append({"iteration": iteration, "residual": norm, "step": 0.0, "fallback": True})
            continue

        y, r = y_try, r_try
        norm = system.scaled_norm(r)
        trace.append({"iteration": iteration, "residual": norm, "step": t, "fallback": fallback})
        logger.solver_trace("newton", iteration=iteration, residual=norm, step=t)
        if norm < best_norm:
            best_norm, best_y = norm, y

    logger.performance_metric("newton_solve", time.perf_counter() - start,
                              iterations=iteration, residual=norm, eps=system.eps)
    return NewtonResult(y, iteration, norm, system, trace, fallback)


def frozen_step_solve(prev: State, frozen: FrozenData, eps: float, controls: StepControls,
                      params: MaterialParams, spaces: ProblemSpaces, regmodel: RegularizedModel,
                      mechanics: Optional[MechanicsSystem] = None,
                      initial: Optional[np.ndarray] = None) -> NewtonResult:
    """Solve one frozen backward-Euler step at level ε; iterating the result yields (Y, iterations)"""
    controls.check_caps(eps)
    mechanics = mechanics or MechanicsSystem(spaces, params)
    system = FrozenSystem(prev, frozen, eps, controls.h, params, spaces, regmodel, mechanics,
                          controls.constraint_residual)
    return newton_solve(system, controls, initial)
