# src/stepper/transient.py
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import tqdm
from tqdm.contrib.logging import logging_redirect_tqdm

from src.constitutive import CapillaryModel, RegularizedFamily
from src.coupled import MaterialParams, MechanicsSystem, ProblemSpaces, State
from src.diagnostics.conservation import content_increment_norms
from src.diagnostics.energies import EnergyLedger, state_ledger
from src.diagnostics.energy_audit import AuditResult, StepTerms, energy_audit
from src.diagnostics.graph import GraphReport, graph_consistency
from src.utils.errors import EpsMismatchError, PoromechError, TransientRunError
from src.utils.logging_config import get_logger
from .controls import StepControls
from .fixed_point import LevelRecord, eps_continuation

logger = get_logger(__name__)


@dataclass
class StepReport:
    step: int
    time: float
    ledger: EnergyLedger
    audit: AuditResult
    graph: GraphReport
    terms: StepTerms
    levels: List[LevelRecord]
    dual_norm_n: float
    dual_norm_w: float
    mass_n: float
    mass_w: float
    newton_iterations: int
    fp_iterations: int
    residual_norm: float
    wall_time: float

    @property
    def boundary_fluxes(self) -> Tuple[float, float]:
        return self.terms.boundary_flux_n, self.terms.boundary_flux_w


@dataclass
class Trajectory:
    """Accepted states with the initial ledger and one StepReport per step"""

    states: List[State]
    initial_ledger: EnergyLedger
    reports: List[StepReport] = field(default_factory=list)

    @property
    def times(self) -> List[float]:
        return [s.time for s in self.states]

    @property
    def ledgers(self) -> List[EnergyLedger]:
        return [self.initial_ledger] + [r.ledger for r in self.reports]

    @property
    def boundary_fluxes(self) -> List[Tuple[float, float]]:
        return [r.boundary_fluxes for r in self.reports]

    @property
    def gravity_work(self) -> List[float]:
        return [r.terms.gravity_work for r in self.reports]

    def __len__(self) -> int:
        return len(self.states)


def _solver_loggers() -> List[logging.Logger]:
    return [logging.getLogger(name) for name in list(logging.root.manager.loggerDict) if name.startswith("src.")]


def run_transient(initial: State, n_steps: int, controls: StepControls, params: MaterialParams,
                  spaces: ProblemSpaces, family: RegularizedFamily, base: CapillaryModel,
                  mechanics: Optional[MechanicsSystem] = None,
                  on_step: Optional[Callable[[State, StepReport], None]] = None,
                  show_progress: bool = False) -> Trajectory:
    """Advance n_steps backward-Euler steps, each one a full ε continuation.

    Diagnostics of a step are evaluated at the final ε of the schedule and
    handed to on_step as soon as the step is accepted. A failing step raises
    TransientRunError carrying every completed step.
    """
    mechanics = mechanics or MechanicsSystem(spaces, params)
    final_eps = controls.eps_schedule[-1]
    if initial.eps != final_eps:
        raise EpsMismatchError(f"initial state at eps={initial.eps}, schedule ends at {final_eps}")
    regmodel = family.at(final_eps)
    trajectory = Trajectory([initial], state_ledger(initial, params, base, regmodel, mechanics))
    run_start = time.perf_counter()

    progress = tqdm.trange(n_steps, desc="Time steps", leave=False, disable=not show_progress)
    with logging_redirect_tqdm(_solver_loggers()):
        for step in progress:
            prev = trajectory.states[-1]
            step_start = time.perf_counter()
            try:
                continuation = eps_continuation(prev, controls, params, spaces, family, mechanics)
            except PoromechError as exc:
                logger.error("Time step failed", error=exc, step=step + 1, time=prev.time)
                raise TransientRunError(f"step {step + 1} failed: {exc}", trajectory, exc) from exc

            state = continuation.state
            final = continuation.final
            audit = energy_audit(prev, state, final.terms, controls.h, final_eps, params, regmodel, mechanics)
            ledger = state_ledger(state, params, base, regmodel, mechanics)
            ledger.boundary_work = final.terms.R + final.terms.W
            ledger.step_inequality_residual = audit.inequality_residual
            if not ledger.kirchhoff_ordering_holds:
                logger.warning("Kirchhoff ordering violated", step=step + 1,
                               residual=ledger.kirchhoff_ordering_residual, bound=ledger.kirchhoff_lower_bound)
            dual_n, dual_w = content_increment_norms(prev, state)
            mass_n, mass_w = state.total_contents()

            report = StepReport(
                step=step + 1,
                time=state.time,
                ledger=ledger,
                audit=audit,
                graph=graph_consistency(state, params.bounds),
                terms=final.terms,
                levels=continuation.levels,
                dual_norm_n=dual_n,
                dual_norm_w=dual_w,
                mass_n=mass_n,
                mass_w=mass_w,
                newton_iterations=continuation.newton_iterations,
                fp_iterations=continuation.fp_iterations,
                residual_norm=final.residual_norm,
                wall_time=time.perf_counter() - step_start,
            )
            trajectory.states.append(state)
            trajectory.reports.append(report)
            progress.set_postfix({"t": f"{state.time:.3g}", "newton": report.newton_iterations})
            logger.performance_metric("time_step", report.wall_time, step=report.step,
                                      newton_iterations=report.newton_iterations,
                                      fp_iterations=report.fp_iterations)
            if on_step is not None:
                on_step(state, report)

    logger.info("Transient run finished", steps=n_steps, wall_time=time.perf_counter() - run_start)
    return trajectory
