# src/scenario_io/output_writer.py
"""
Run artifacts: `series.csv`, field snapshots and `manifest.json`.

Every float is written with 17 significant digits, so two runs of the same
configuration produce byte-identical series and snapshots.
"""
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, TextIO, Union

import numpy as np

from src import __version__
from src.coupled import State
from src.stepper import StepReport, Trajectory
from src.utils.errors import PoromechError
from src.utils.logging_config import LoggerMixin, get_logger
from .field_io import format_float, write_fields

logger = get_logger(__name__)

SERIES_FILE = "series.csv"
MANIFEST_FILE = "manifest.json"
SNAPSHOT_DIR = "snapshots"

SERIES_COLUMNS = (
    "t", "F_f", "F_s", "F_g", "F_eps", "D", "step_inequality_residual", "mass_n", "mass_w",
    "dual_norm_n", "dual_norm_w", "graph_max_distance", "newton_iters", "fp_iters",
)


class OutputError(PoromechError, OSError):
    def __init__(self, message: str, path: Union[str, Path]):
        super().__init__(f"{path}: {message}")
        self.path = str(path)


def series_row(report: StepReport) -> List[str]:
    ledger = report.ledger
    floats = (report.time, ledger.F_f, ledger.F_s, ledger.F_g, ledger.F_eps, ledger.dissipation,
              ledger.step_inequality_residual, report.mass_n, report.mass_w, report.dual_norm_n,
              report.dual_norm_w, report.graph.max_distance)
    return [format_float(v) for v in floats] + [str(report.newton_iterations), str(report.fp_iterations)]


def snapshot_fields(state: State):
    """Named nodal and cell fields of a state, in a fixed order"""
    return [
        ("p_n", state.p_n),
        ("p_w", state.p_w),
        ("u", state.displacement_nodal()),
        ("pi_nodal", state.pi_nodal()),
        ("chi_nodal", state.chi_nodal()),
        ("phi_n_cells", state.phi_n),
        ("phi_w_cells", state.phi_w),
        ("theta_cells", state.theta),
        ("pi_cells", state.pi),
        ("chi_cells", state.chi),
    ]


@dataclass
class RunStats:
    steps: int = 0
    newton_iterations: int = 0
    fp_iterations: int = 0
    max_residual: float = 0.0
    max_identity_defect: float = 0.0
    min_inequality_residual: float = 0.0
    wall_time: float = 0.0

    @classmethod
    def from_reports(cls, reports: Sequence[StepReport]) -> "RunStats":
        if not reports:
            return cls()
        return cls(
            steps=len(reports),
            newton_iterations=sum(r.newton_iterations for r in reports),
            fp_iterations=sum(r.fp_iterations for r in reports),
            max_residual=max(r.residual_norm for r in reports),
            max_identity_defect=max(r.audit.identity_defect for r in reports),
            min_inequality_residual=min(r.audit.inequality_residual for r in reports),
            wall_time=sum(r.wall_time for r in reports),
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class RunManifest:
    """Structured summary of a run; `timing` is the only nondeterministic part"""

    config_hash: str
    code_version: str = __version__
    seed: int = 0
    config: Dict[str, Any] = field(default_factory=dict)
    eps_schedule: List[float] = field(default_factory=list)
    initial_ledger: Dict[str, float] = field(default_factory=dict)
    steps: List[Dict[str, Any]] = field(default_factory=list)
    stats: Dict[str, Any] = field(default_factory=dict)
    boundary_saturation: List[float] = field(default_factory=list)
    warnings: List[Dict[str, str]] = field(default_factory=list)
    mass_balance: Dict[str, Any] = field(default_factory=dict)
    gronwall: Dict[str, Any] = field(default_factory=dict)
    status: str = "running"
    error: Optional[str] = None
    timing: Dict[str, Any] = field(default_factory=dict)

    def record_step(self, report: StepReport) -> None:
        self.steps.append({
            "step": report.step,
            "time": report.time,
            "newton_iterations": report.newton_iterations,
            "fp_iterations": report.fp_iterations,
            "residual_norm": report.residual_norm,
            "ledger": report.ledger.to_dict(),
            "audit": report.audit.to_dict(),
            "graph": report.graph.to_dict(),
            "terms": report.terms.to_dict(),
            "levels": [level.to_dict() for level in report.levels],
        })
        self.timing.setdefault("step_wall_time", []).append(report.wall_time)

    def deterministic_view(self) -> Dict[str, Any]:
        """The manifest without wall-clock data, for run-to-run comparison"""
        data = self.to_dict()
        data.pop("timing")
        data["stats"] = {k: v for k, v in data["stats"].items() if k != "wall_time"}
        for step in data["steps"]:
            for level in step["levels"]:
                level.pop("wall_time", None)
        return data

    def to_dict(self) -> Dict[str, Any]:
        return json.loads(json.dumps(asdict(self), default=_json_default))


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"not serializable: {type(value).__name__}")


class OutputWriter(LoggerMixin):
    """Single owner of one run directory; usable as the `on_step` callback"""

    def __init__(self, out_dir: Union[str, Path], manifest: RunManifest, snapshot_every: int = 1):
        self.out_dir = Path(out_dir)
        self.manifest = manifest
        self.snapshot_every = max(int(snapshot_every), 1)
        self._series: Optional[TextIO] = None

    @property
    def series_path(self) -> Path:
        return self.out_dir / SERIES_FILE

    @property
    def manifest_path(self) -> Path:
        return self.out_dir / MANIFEST_FILE

    def snapshot_path(self, step: int) -> Path:
        return self.out_dir / SNAPSHOT_DIR / f"step_{step:06d}.txt"

    def open(self, initial: Optional[State] = None) -> "OutputWriter":
        try:
            (self.out_dir / SNAPSHOT_DIR).mkdir(parents=True, exist_ok=True)
            self._series = open(self.series_path, "w", encoding="utf-8", newline="\n")
        except OSError as exc:
            raise OutputError(f"cannot create run outputs: {exc}", self.out_dir) from exc
        self._series.write(",".join(SERIES_COLUMNS) + "\n")
        if initial is not None:
            self.write_snapshot(0, initial)
        return self

    def write_snapshot(self, step: int, state: State) -> Path:
        path = self.snapshot_path(step)
        try:
            write_fields(path, snapshot_fields(state))
        except OSError as exc:
            raise OutputError(f"cannot write snapshot: {exc}", path) from exc
        return path

    def __call__(self, state: State, report: StepReport) -> None:
        if self._series is None:
            self.open()
        self._series.write(",".join(series_row(report)) + "\n")
        self._series.flush()
        self.manifest.record_step(report)
        if report.step % self.snapshot_every == 0:
            self.write_snapshot(report.step, state)

    def write_manifest(self) -> Path:
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            with open(self.manifest_path, "w", encoding="utf-8", newline="\n") as f:
                json.dump(self.manifest.to_dict(), f, indent=2, sort_keys=True)
                f.write("\n")
        except OSError as exc:
            raise OutputError(f"cannot write manifest: {exc}", self.manifest_path) from exc
        return self.manifest_path

    def close(self) -> None:
        if self._series is not None:
            self._series.close()
            self._series = None
        self.write_manifest()
        self.logger.debug("Run directory closed", out_dir=str(self.out_dir), steps=len(self.manifest.steps),
                          status=self.manifest.status)

    def __enter__(self) -> "OutputWriter":
        return self if self._series is not None else self.open()

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()


def write_outputs(trajectory: Trajectory, manifest: RunManifest, out_dir: Union[str, Path],
                  snapshot_every: int = 1) -> Dict[str, Path]:
    """Write every artifact of a finished trajectory at once"""
    writer = OutputWriter(out_dir, manifest, snapshot_every)
    manifest.steps.clear()
    manifest.initial_ledger = trajectory.initial_ledger.to_dict()
    with writer.open(trajectory.states[0] if trajectory.states else None):
        for state, report in zip(trajectory.states[1:], trajectory.reports):
            writer(state, report)
        manifest.stats = RunStats.from_reports(trajectory.reports).to_dict()
    logger.info("Run outputs written", out_dir=str(out_dir), steps=len(trajectory.reports))
    return {"series": writer.series_path, "manifest": writer.manifest_path,
            "snapshots": writer.out_dir / SNAPSHOT_DIR}
