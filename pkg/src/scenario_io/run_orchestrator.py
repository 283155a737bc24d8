# src/scenario_io/run_orchestrator.py
"""
The four workflows behind the command line: run, check, sweep and audit.
"""
import concurrent.futures
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import tqdm

from src.diagnostics import GronwallReport, MassBalance, gronwall_bookkeeping, mass_balance
from src.stepper import Trajectory, run_transient
from src.utils.errors import ConfigParseError, PoromechError, TransientRunError
from src.utils.logging_config import get_logger
from .audit_battery import AuditReport, run_audit_battery
from .config_loader import Config, parse_setting
from .config_validator import ERROR, ensure_valid, validate_config
from .output_writer import OutputWriter, RunManifest, RunStats
from .scenario import Scenario, prepare_scenario

logger = get_logger(__name__)


@dataclass
class RunResult:
    out_dir: Path
    manifest: RunManifest
    trajectory: Trajectory
    stats: RunStats
    mass: MassBalance
    gronwall: GronwallReport

    @property
    def series_path(self) -> Path:
        return self.out_dir / "series.csv"


def _manifest_for(config: Config, scenario: Scenario) -> RunManifest:
    return RunManifest(
        config_hash=config.config_hash(),
        seed=config.seed,
        config=config.to_dict(),
        eps_schedule=list(scenario.controls.eps_schedule),
        boundary_saturation=scenario.boundary_saturation(),
        warnings=[issue for issue in config.issues if issue["severity"] != ERROR],
    )


def _finish_manifest(manifest: RunManifest, scenario: Scenario, trajectory: Trajectory):
    stats = RunStats.from_reports(trajectory.reports)
    mass = mass_balance(trajectory.states, trajectory.boundary_fluxes)
    gronwall = gronwall_bookkeeping(trajectory.states, [ledger.F_eps for ledger in trajectory.ledgers],
                                    trajectory.gravity_work, scenario.params, scenario.base)
    manifest.initial_ledger = trajectory.initial_ledger.to_dict()
    manifest.stats = stats.to_dict()
    manifest.mass_balance = mass.to_dict()
    manifest.gronwall = gronwall.to_dict()
    return stats, mass, gronwall


def run_scenario(config: Config, out_dir: Optional[Union[str, Path]] = None,
                 show_progress: bool = False) -> RunResult:
    """Transient run with streamed outputs.

    A failing step still leaves series.csv and manifest.json covering every
    accepted step, with status "failed"; the TransientRunError is re-raised.
    """
    out_dir = Path(out_dir or config.output_dir)
    start = time.perf_counter()
    scenario = prepare_scenario(config)
    manifest = _manifest_for(config, scenario)
    writer = OutputWriter(out_dir, manifest, config.snapshot_cadence()).open(scenario.initial)

    try:
        trajectory = run_transient(scenario.initial, config.n_steps, scenario.controls, scenario.params,
                                   scenario.spaces, scenario.family, scenario.base, scenario.mechanics,
                                   on_step=writer, show_progress=show_progress)
    except TransientRunError as exc:
        _finish_manifest(manifest, scenario, exc.trajectory)
        manifest.status = "failed"
        manifest.error = str(exc)
        manifest.timing["total"] = time.perf_counter() - start
        writer.close()
        raise

    stats, mass, gronwall = _finish_manifest(manifest, scenario, trajectory)
    manifest.status = "completed"
    manifest.timing["total"] = time.perf_counter() - start
    writer.close()

    logger.info("Run completed", out_dir=str(out_dir), steps=stats.steps, newton_iterations=stats.newton_iterations,
                fp_iterations=stats.fp_iterations, max_residual=stats.max_residual,
                max_drift=max(mass.max_relative_drift, default=0.0), gronwall_c=gronwall.c)
    return RunResult(out_dir, manifest, trajectory, stats, mass, gronwall)


def check_scenario(config: Config) -> Dict[str, Any]:
    """Validation issues, the (H7) audit and the boundary saturation of a scenario"""
    issues = validate_config(config, audit_weak_coupling=True)
    errors = [issue for issue in issues if issue["severity"] == ERROR]
    report: Dict[str, Any] = {"valid": not errors, "issues": issues, "config_hash": config.config_hash()}
    if not errors:
        scenario = prepare_scenario(config)
        report["boundary_saturation"] = scenario.boundary_saturation()
    return report


def audit_scenario(config: Config, samples: Optional[int] = None) -> AuditReport:
    scenario = prepare_scenario(config)
    return run_audit_battery(scenario, samples=samples or config.audit_samples, seed=config.seed)


@dataclass
class SweepOutcome:
    value: str
    out_dir: Path
    status: str
    error: Optional[str] = None
    stats: Dict[str, Any] = field(default_factory=dict)


def sweep_configs(config: Config, param: str, values: Sequence[str]) -> List[Config]:
    """One Config per value of `param`, each with its own output directory"""
    if param == "output_dir":
        raise ConfigParseError("cannot sweep over output_dir")
    root = Path(config.output_dir)
    return [
        config.with_overrides(**{param: parse_setting(param, value)},
                              output_dir=str(root / f"{param}={value}"))
        for value in values
    ]


def _sweep_member(member: Config, value: str) -> SweepOutcome:
    out_dir = Path(member.output_dir)
    try:
        member.issues = ensure_valid(member, audit_weak_coupling=False)
        result = run_scenario(member, out_dir)
    except PoromechError as exc:
        return SweepOutcome(value, out_dir, "failed", str(exc))
    return SweepOutcome(value, out_dir, "completed", stats=result.stats.to_dict())


def sweep(config: Config, param: str, values: Sequence[str], max_workers: int = 1,
          show_progress: bool = False) -> List[SweepOutcome]:
    """Independent runs in a thread pool; results come back in the order of `values`"""
    members = sweep_configs(config, param, values)
    workers = max(1, min(int(max_workers), len(members)))
    outcomes: Dict[str, SweepOutcome] = {}
    start = time.perf_counter()

    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(_sweep_member, member, value): value for member, value in zip(members, values)}
        for future in tqdm.tqdm(concurrent.futures.as_completed(futures), total=len(futures), desc="Sweep",
                                leave=False, disable=not show_progress):
            outcome = future.result()
            outcomes[futures[future]] = outcome
            logger.info("Sweep member finished", param=param, value=outcome.value, status=outcome.status)

    logger.performance_metric("sweep", time.perf_counter() - start, param=param, runs=len(members), workers=workers)
    return [outcomes[value] for value in values]
