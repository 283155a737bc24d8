# src/scenario_io/config_validator.py
"""
Checks of a scenario against the modelling assumptions (H1)-(H8).

Each rule yields issue dicts {"rule", "label", "message", "severity"}; every
rule runs, so one pass reports every violation. Severity "error" blocks a
run, "warning" does not.
"""
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from src.constitutive.regularization import MAX_EPS
from src.coupled import PermeabilityLaw, weak_coupling_audit
from src.femcore import MeshSpec
from src.utils.errors import ConfigValidationError, PoromechError
from src.utils.logging_config import get_logger
from .config_loader import INITIAL_KEYWORD, Config

logger = get_logger(__name__)

ERROR = "error"
WARNING = "warning"

Issue = Dict[str, str]


@dataclass(frozen=True)
class Rule:
    name: str
    label: str
    description: str
    check: Callable[[Config, "_Context"], List[str]]
    severity: str = ERROR


class _Context:
    """Lazily built mesh and resolved fields shared by the rules"""

    def __init__(self, config: Config):
        self.config = config
        self._mesh = None
        self.mesh_error = None

    @property
    def mesh(self):
        if self._mesh is None and self.mesh_error is None:
            try:
                self._mesh = self.config.build_mesh()
            except PoromechError as exc:
                self.mesh_error = str(exc)
        return self._mesh

    def field(self, key: str):
        mesh = self.mesh
        if mesh is None:
            return None
        return self.config.field_values(key, mesh)


def _positive(config: Config, names) -> List[str]:
    return [f"{name} must be positive, got {getattr(config, name)}"
            for name in names if not getattr(config, name) > 0]


def _check_constants(config: Config, ctx: _Context) -> List[str]:
    problems = _positive(config, ("viscosity_n_pa_s", "viscosity_w_pa_s", "density_n_kg_m3", "density_w_kg_m3",
                                  "lame_mu_pa", "lame_lambda_pa", "biot_modulus_pa"))
    if not 0.0 < config.biot_coefficient <= 1.0:
        problems.append(f"biot_coefficient belongs to (0,1], got {config.biot_coefficient}")
    if not np.all(np.isfinite(config.gravity_m_s2)):
        problems.append("gravity_m_s2 must be a finite constant vector")
    if not 0.0 < config.porosity_min < config.porosity_max < 1.0:
        problems.append(f"porosity bounds must satisfy 0 < min < max < 1, got "
                        f"({config.porosity_min}, {config.porosity_max})")
    return problems


def _check_rest_porosity(config: Config, ctx: _Context) -> List[str]:
    try:
        phi_r = ctx.field("residual_porosity")
    except PoromechError as exc:
        return [f"residual_porosity: {exc}"]
    if phi_r is None:
        return []
    if np.any(phi_r < config.porosity_min) or np.any(phi_r > config.porosity_max):
        return [f"residual_porosity must lie in [{config.porosity_min}, {config.porosity_max}], "
                f"got range [{phi_r.min():g}, {phi_r.max():g}]"]
    return []


def _check_capillary(config: Config, ctx: _Context) -> List[str]:
    problems = []
    if config.capillary_gamma0_pa < 0:
        problems.append("capillary_gamma0_pa must be nonnegative, γ maps into R+")
    if config.capillary_model == "brooks-corey":
        if not config.entry_pressure_pa > 0:
            problems.append(f"entry_pressure_pa must be positive, got {config.entry_pressure_pa}")
        if not config.brooks_corey_lambda > 2:
            problems.append(f"brooks_corey_lambda must exceed 2 so that √(1-s)γ'' is integrable "
                            f"(belonging to L¹(0,1)), got {config.brooks_corey_lambda}")
    elif config.capillary_model == "tabulated":
        knots, values = np.asarray(config.tabulated_knots), np.asarray(config.tabulated_d2_pa)
        if knots.size < 2 or knots.shape != values.shape:
            problems.append("tabulated_knots and tabulated_d2_pa need matching lengths of at least 2")
        elif knots[0] != 0.0 or knots[-1] != 1.0 or np.any(np.diff(knots) <= 0):
            problems.append("tabulated_knots must increase strictly from 0 to 1")
        elif np.any(values <= 0):
            problems.append("tabulated_d2_pa must be positive for a strictly convex γ")
        if config.tabulated_dgamma0_pa < 0:
            problems.append("tabulated_dgamma0_pa must be nonnegative for an increasing γ")
    else:
        problems.append(f"unknown capillary_model '{config.capillary_model}'")
    return problems


def _check_permeability(config: Config, ctx: _Context) -> List[str]:
    problems = _positive(config, ("permeability_scale_m2",))
    if config.permeability_law not in {law.value for law in PermeabilityLaw}:
        problems.append(f"unknown permeability_law '{config.permeability_law}'")
    return problems


def _check_initial(config: Config, ctx: _Context) -> List[str]:
    try:
        phi_n, phi_w = ctx.field("initial_content_n"), ctx.field("initial_content_w")
    except PoromechError as exc:
        return [f"initial contents: {exc}"]
    if phi_n is None:
        return []
    problems = []
    if np.any(phi_n < 0) or np.any(phi_w < 0):
        problems.append("initial contents must be nonnegative")
    phi = phi_n + phi_w
    if np.any(phi < config.porosity_min) or np.any(phi > config.porosity_max):
        problems.append(f"initial porosity must lie in [{config.porosity_min}, {config.porosity_max}], "
                        f"got range [{phi.min():g}, {phi.max():g}]")
    return problems


def _check_dirichlet_data(config: Config, ctx: _Context) -> List[str]:
    problems = []
    for key in ("dirichlet_pressure_n_pa", "dirichlet_pressure_w_pa"):
        if getattr(config, key) == INITIAL_KEYWORD:
            continue
        try:
            values = ctx.field(key)
        except PoromechError as exc:
            problems.append(f"{key}: {exc}")
            continue
        if values is not None and not np.all(np.isfinite(values)):
            problems.append(f"{key} must be finite")
    return problems


def _check_domain(config: Config, ctx: _Context) -> List[str]:
    try:
        MeshSpec(config.mesh_kind, n=config.mesh_n, nx=config.mesh_nx, ny=config.mesh_ny,
                 extent=tuple(config.mesh_extent_m))
    except PoromechError as exc:
        return [f"mesh: {exc}"]
    mesh = ctx.mesh
    if mesh is None:
        return [f"mesh: {ctx.mesh_error}"]
    problems = []
    markers = mesh.markers
    for key in ("flow_dirichlet", "mechanics_dirichlet"):
        unknown = sorted(set(getattr(config, key)) - set(markers))
        if unknown:
            problems.append(f"{key} names unknown boundary markers {unknown} (mesh has {sorted(markers)})")
    if not set(config.mechanics_dirichlet) & set(markers):
        problems.append("mechanics needs a Dirichlet boundary of positive measure (Korn inequality)")
    return problems


def _check_body_force(config: Config, ctx: _Context) -> List[str]:
    problems = []
    if len(config.external_force_n_m3) not in (1, 2 if config.mesh_kind == "rectangle" else 1):
        problems.append("external_force_n_m3 takes one value or one value per dimension")
    if not np.all(np.isfinite(config.external_force_n_m3)):
        problems.append("external_force_n_m3 must be finite")
    try:
        rho = ctx.field("rock_density_kg_m3")
    except PoromechError as exc:
        return problems + [f"rock_density_kg_m3: {exc}"]
    if rho is not None and not np.all(np.isfinite(rho)):
        problems.append("rock_density_kg_m3 must be bounded")
    return problems


def _check_controls(config: Config, ctx: _Context) -> List[str]:
    problems = _positive(config, ("time_step_s", "newton_tol", "fp_tol", "h_max_s", "heps2_max"))
    schedule = config.schedule()
    if not schedule:
        problems.append("eps_schedule is empty")
    elif any(not 0.0 < e <= MAX_EPS for e in schedule):
        problems.append(f"eps levels must lie in (0, {MAX_EPS}], got {list(schedule)}")
    elif any(b >= a for a, b in zip(schedule, schedule[1:])):
        problems.append(f"eps_schedule must be strictly decreasing, got {list(schedule)}")
    if config.n_steps < 0:
        problems.append("n_steps must be nonnegative")
    if config.newton_max < 1 or config.fp_max < 1:
        problems.append("newton_max and fp_max must be at least 1")
    if not 0.0 < config.fp_relax <= 1.0:
        problems.append(f"fp_relax must lie in (0, 1], got {config.fp_relax}")
    if config.constraint_residual not in ("monotone", "verbatim"):
        problems.append(f"constraint_residual is 'monotone' or 'verbatim', got '{config.constraint_residual}'")
    if config.time_step_s > config.h_max_s:
        problems.append(f"time_step_s={config.time_step_s:g} exceeds h_max_s={config.h_max_s:g}")
    if schedule and config.time_step_s * schedule[0] ** 2 > config.heps2_max:
        problems.append(f"h*eps^2={config.time_step_s * schedule[0] ** 2:g} exceeds heps2_max={config.heps2_max:g}")
    return problems


def _check_keys(config: Config, ctx: _Context) -> List[str]:
    return [f"unknown key '{key}'" for key in config.unknown_keys]


RULES: List[Rule] = [
    Rule("constants", "(H1)", "positive viscosities, densities, Lamé and Biot moduli; b in (0,1]; "
         "0 < φ♭ < φ♯ < 1", _check_constants),
    Rule("rest_porosity", "(H1)", "φ_r within [φ♭, φ♯]", _check_rest_porosity),
    Rule("capillary", "(H2)", "γ ≥ 0 strictly convex and increasing, √(1-s)γ'' integrable (λ_BC > 2)",
         _check_capillary),
    Rule("permeability", "(H3)", "K(φ) bounded above and below by positive constants", _check_permeability),
    Rule("initial", "(H4)", "φ⁰ nonnegative with φ♭ ≤ φ⁰ ≤ φ♯", _check_initial),
    Rule("dirichlet_data", "(H5)", "time-independent, bounded Dirichlet pressures", _check_dirichlet_data),
    Rule("domain", "(H6)", "valid mesh; boundary markers exist; mechanics Γ^D of positive measure", _check_domain),
    Rule("body_force", "(H8)", "f_ext square integrable, rock density bounded", _check_body_force),
    Rule("controls", "(controls)", "h > 0, ε schedule decreasing in (0, 1/4], step caps respected",
         _check_controls),
    Rule("keys", "(config)", "only known keys", _check_keys),
]

WEAK_COUPLING_RULE = Rule("weak_coupling", "(H7)", "λ > M b² C₁ with C₁ sampled (advisory)",
                          lambda config, ctx: [], WARNING)


def explain() -> List[Dict[str, str]]:
    """Rule to assumption mapping, as printed by `check --explain`"""
    return [{"rule": r.name, "label": r.label, "severity": r.severity, "description": r.description}
            for r in RULES + [WEAK_COUPLING_RULE]]


def _issue(rule: Rule, message: str, severity: str = None) -> Issue:
    return {"rule": rule.name, "label": rule.label, "message": message, "severity": severity or rule.severity}


def weak_coupling_issues(config: Config) -> List[Issue]:
    mesh = config.build_mesh()
    spaces = config.build_spaces(mesh)
    report = weak_coupling_audit(spaces, config.material(mesh), samples=16, seed=config.seed)
    message = (f"C1 estimate {report.c1_estimate:.6g}, margin λ - M b² C1 = {report.margin:.6g}"
               f" ({'satisfied' if report.satisfied else 'violated'})")
    return [_issue(WEAK_COUPLING_RULE, message, WARNING if not report.satisfied else "info")]


def validate_config(config: Config, audit_weak_coupling: bool = True) -> List[Issue]:
    """Every issue of every rule; the (H7) audit runs only when nothing else failed"""
    ctx = _Context(config)
    issues = [_issue(rule, message) for rule in RULES for message in rule.check(config, ctx)]
    if audit_weak_coupling and not any(issue["severity"] == ERROR for issue in issues):
        try:
            issues.extend(weak_coupling_issues(config))
        except PoromechError as exc:
            issues.append(_issue(WEAK_COUPLING_RULE, f"audit failed: {exc}", WARNING))
    for issue in issues:
        if issue["severity"] == WARNING:
            logger.warning("Configuration warning", rule=issue["rule"], label=issue["label"], detail=issue["message"])
    return issues


def ensure_valid(config: Config, audit_weak_coupling: bool = True) -> List[Issue]:
    """Raise ConfigValidationError listing every error; return the non-blocking issues"""
    issues = validate_config(config, audit_weak_coupling)
    errors = [issue for issue in issues if issue["severity"] == ERROR]
    if errors:
        raise ConfigValidationError(errors)
    return issues
