# src/stepper/fixed_point.py
"""
Unfreezing the coefficients and walking down the ε schedule.

fixed_point_step iterates (φ̃, ũ) over frozen solves until the contents and
displacement stop moving; eps_continuation chains fixed points over the
decreasing ε levels, warm-starting each level from the previous one.
"""
import time
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence

import numpy as np

from src.constitutive import RegularizedFamily
from src.coupled import MaterialParams, MechanicsSystem, ProblemSpaces, State
from src.diagnostics.energy_audit import StepTerms
from src.diagnostics.graph import GraphReport, graph_consistency
from src.utils.errors import ContinuationError, FixedPointConvergenceError, PoromechError
from src.utils.logging_config import get_logger
from .controls import FrozenData, StepControls
from .newton_solver import frozen_step_solve

logger = get_logger(__name__)

MIN_RELAXATION = 1.0 / 64.0


@dataclass
class FixedPointResult:
    state: State
    iterations: int
    newton_iterations: int
    change_history: List[float]
    frozen: FrozenData
    terms: StepTerms
    unknowns: np.ndarray
    relaxation: float = 1.0
    residual_norm: float = 0.0

    def __iter__(self) -> Iterator:
        yield self.state
        yield self.iterations


@dataclass
class LevelRecord:
    eps: float
    graph: GraphReport
    fp_iterations: int
    newton_iterations: int
    wall_time: float

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "fp_iterations": self.fp_iterations,
            "newton_iterations": self.newton_iterations,
            "wall_time": self.wall_time,
            **{f"graph_{k}": v for k, v in self.graph.to_dict().items() if k != "eps"},
        }


@dataclass
class ContinuationResult:
    state: State
    levels: List[LevelRecord] = field(default_factory=list)
    final: Optional[FixedPointResult] = None

    @property
    def fp_iterations(self) -> int:
        return sum(level.fp_iterations for level in self.levels)

    @property
    def newton_iterations(self) -> int:
        return sum(level.newton_iterations for level in self.levels)


def _relative_change(phi_new: np.ndarray, phi_old: np.ndarray, u_new: np.ndarray, u_old: np.ndarray,
                     vols: np.ndarray, mechanics: MechanicsSystem) -> float:
    """‖Δφ‖_{L²} + ‖Δu‖_{μ,λ} relative to the size of the new iterate"""
    dphi, du = phi_new - phi_old, u_new - u_old
    change = np.sqrt(vols @ dphi ** 2) + np.sqrt(max(mechanics.energy(du), 0.0))
    size = np.sqrt(vols @ phi_new ** 2) + np.sqrt(max(mechanics.energy(u_new), 0.0))
    return float(change / max(size, np.finfo(float).tiny))


def fixed_point_step(prev: State, eps: float, controls: StepControls, params: MaterialParams,
                     spaces: ProblemSpaces, family: RegularizedFamily,
                     mechanics: Optional[MechanicsSystem] = None,
                     warm_start: Optional[FixedPointResult] = None) -> FixedPointResult:
    """One backward-Euler step at level ε with the frozen data iterated to a fixed point.

    The relaxation factor starts at fp_relax and halves whenever the change
    grows. The accepted state carries χ = G_ε(φ) and the step terms of the
    last frozen solve.
    """
    start = time.perf_counter()
    mechanics = mechanics or MechanicsSystem(spaces, params)
    regmodel = family.at(eps)
    bounds = params.bounds
    vols = spaces.volumes

    if warm_start is not None:
        frozen, unknowns = warm_start.frozen, warm_start.unknowns
    else:
        frozen, unknowns = FrozenData.from_state(prev, bounds), None

    omega = controls.fp_relax
    history: List[float] = []
    newton_total = 0
    for iteration in range(1, controls.fp_max + 1):
        solved = frozen_step_solve(prev, frozen, eps, controls, params, spaces, regmodel,
                                   mechanics, initial=unknowns)
        unknowns, system = solved.unknowns, solved.system
        newton_total += solved.iterations

        fields = system.fields(unknowns)
        contents = system.contents(fields)
        change = _relative_change(contents.phi, frozen.phi, fields.u, frozen.u, vols, mechanics)
        history.append(change)
        logger.solver_trace("fixed_point", iteration=iteration, change=change, relaxation=omega, eps=eps)

        if change <= controls.fp_tol:
            state = system.state_from(unknowns, prev.time + controls.h)
            logger.performance_metric("fixed_point_step", time.perf_counter() - start,
                                      iterations=iteration, newton_iterations=newton_total, eps=eps)
            return FixedPointResult(state, iteration, newton_total, history, frozen,
                                    system.step_terms(unknowns), unknowns, omega,
                                    solved.residual_norm)

        if len(history) >= 2 and change > history[-2] and omega > MIN_RELAXATION:
            omega *= 0.5
            logger.debug("Fixed-point change grew, halving relaxation", relaxation=omega, eps=eps)

        frozen = FrozenData.build(
            frozen.contents.phi_n + omega * (contents.phi_n - frozen.contents.phi_n),
            frozen.contents.phi_w + omega * (contents.phi_w - frozen.contents.phi_w),
            frozen.u + omega * (fields.u - frozen.u),
            bounds,
        )

    raise FixedPointConvergenceError(
        f"fixed point did not reach {controls.fp_tol:g} in {controls.fp_max} iterations at eps={eps:g}",
        history,
    )


def eps_continuation(prev: State, controls: StepControls, params: MaterialParams,
                     spaces: ProblemSpaces, family: RegularizedFamily,
                     mechanics: Optional[MechanicsSystem] = None,
                     schedule: Optional[Sequence[float]] = None) -> ContinuationResult:
    """Run fixed_point_step at every ε of the schedule from the same old time level.

    Each level starts from the unknowns and frozen data of the level before.
    A failing level raises ContinuationError with the last good level and
    state attached.
    """
    mechanics = mechanics or MechanicsSystem(spaces, params)
    levels = tuple(controls.eps_schedule if schedule is None else schedule)
    if not levels:
        raise ContinuationError("eps schedule is empty", None, prev, ValueError("empty schedule"))

    records: List[LevelRecord] = []
    result: Optional[FixedPointResult] = None
    for eps in levels:
        level_start = time.perf_counter()
        try:
            result = fixed_point_step(prev, eps, controls, params, spaces, family, mechanics,
                                      warm_start=result)
        except PoromechError as exc:
            last_level = records[-1].eps if records else None
            last_state = result.state if result is not None else None
            logger.error("Continuation level failed", error=exc, eps=eps, last_level=last_level)
            raise ContinuationError(f"eps level {eps:g} failed: {exc}", last_level, last_state, exc) from exc

        report = graph_consistency(result.state, params.bounds)
        records.append(LevelRecord(eps, report, result.iterations, result.newton_iterations,
                                   time.perf_counter() - level_start))
        logger.debug("Continuation level done", eps=eps, graph_max_distance=report.max_distance,
                     fp_iterations=result.iterations, newton_iterations=result.newton_iterations)

    return ContinuationResult(result.state, records, result)
