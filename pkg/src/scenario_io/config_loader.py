# src/scenario_io/config_loader.py
"""
Scenario documents: dotenv-style `key=value` files with units in the key names.

Field-valued keys take a constant (`0.25`), an expression of x and y
(`expr:0.1+0.05*y`) or a nodal file in the field format (`file:phi0.txt`).
"""
import ast
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from dotenv import dotenv_values

from src.constitutive import CapillaryModel, PhaseContentPair, PorosityBounds, build_capillary_model
from src.coupled import MaterialParams, PermeabilityLaw, ProblemSpaces, build_problem_spaces
from src.femcore import Mesh, MeshSpec, generate_mesh
from src.stepper import DEFAULT_EPS_SCHEDULE, StepControls
from src.utils.errors import ConfigParseError
from .field_io import read_field

EXPR_PREFIX = "expr:"
FILE_PREFIX = "file:"
INITIAL_KEYWORD = "initial"

EXPRESSION_NAMESPACE = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "tanh", "abs", "minimum", "maximum", "where", "pi")
}

EXPRESSION_NAMES = frozenset(EXPRESSION_NAMESPACE) | {"x", "y"}

EXPRESSION_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Compare, ast.Call, ast.Name, ast.Constant, ast.Load,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.Mod, ast.UAdd, ast.USub,
    ast.Lt, ast.LtE, ast.Gt, ast.GtE,
)


def compile_expression(source: str, names: frozenset):
    """Code object of an arithmetic expression over `names`; anything else is a ConfigParseError"""
    try:
        tree = ast.parse(source.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigParseError(f"invalid field expression '{source}': {exc.msg}") from exc
    for node in ast.walk(tree):
        if not isinstance(node, EXPRESSION_NODES):
            raise ConfigParseError(f"field expression '{source}' may not contain {type(node).__name__}")
        if isinstance(node, ast.Name) and node.id not in names:
            raise ConfigParseError(f"field expression '{source}' uses unknown name '{node.id}'")
        if isinstance(node, ast.Constant) and (isinstance(node.value, bool) or not isinstance(node.value, (int, float))):
            raise ConfigParseError(f"field expression '{source}' may only contain numeric literals")
        if isinstance(node, ast.Call) and (node.keywords or not isinstance(node.func, ast.Name)):
            raise ConfigParseError(f"field expression '{source}' may only call {sorted(EXPRESSION_NAMESPACE)}")
    return compile(tree, "<field expression>", "eval")


FIELD_KEYS = frozenset({
    "residual_porosity", "rock_density_kg_m3", "initial_content_n", "initial_content_w",
    "dirichlet_pressure_n_pa", "dirichlet_pressure_w_pa",
})


@dataclass
class Config:
    mesh_kind: str = "rectangle"
    mesh_n: int = 16
    mesh_nx: int = 8
    mesh_ny: int = 8
    mesh_extent_m: Tuple[float, ...] = (0.0, 1.0, 0.0, 1.0)
    flow_dirichlet: Tuple[str, ...] = ()
    mechanics_dirichlet: Tuple[str, ...] = ("bottom",)

    porosity_min: float = 0.1
    porosity_max: float = 0.5
    viscosity_n_pa_s: float = 1.0
    viscosity_w_pa_s: float = 1.0
    density_n_kg_m3: float = 1.0
    density_w_kg_m3: float = 1.0
    gravity_m_s2: Tuple[float, ...] = (0.0, 0.0)
    lame_mu_pa: float = 1.0
    lame_lambda_pa: float = 1.0
    biot_coefficient: float = 1.0
    biot_modulus_pa: float = 1.0
    permeability_scale_m2: float = 1.0
    permeability_law: str = PermeabilityLaw.KOZENY_CARMAN.value
    residual_porosity: str = "0.3"
    rock_density_kg_m3: str = "0"
    external_force_n_m3: Tuple[float, ...] = (0.0,)

    capillary_model: str = "brooks-corey"
    entry_pressure_pa: float = 1.0
    brooks_corey_lambda: float = 3.0
    capillary_gamma0_pa: float = 0.0
    tabulated_knots: Tuple[float, ...] = ()
    tabulated_d2_pa: Tuple[float, ...] = ()
    tabulated_dgamma0_pa: float = 1.0

    initial_content_n: str = "0.1"
    initial_content_w: str = "0.2"
    dirichlet_pressure_n_pa: str = "0"
    dirichlet_pressure_w_pa: str = "0"

    time_step_s: float = 1e-2
    n_steps: int = 10
    eps_schedule: Tuple[float, ...] = DEFAULT_EPS_SCHEDULE
    eps_final: Optional[float] = None
    newton_tol: float = 1e-10
    newton_max: int = 40
    fp_tol: float = 1e-8
    fp_max: int = 60
    fp_relax: float = 1.0
    h_max_s: float = 1e-1
    heps2_max: float = 1e-3
    constraint_residual: str = "monotone"

    output_dir: str = "runs/default"
    snapshot_every: int = 0
    seed: int = 0
    audit_samples: int = 200

    source_dir: Optional[str] = field(default=None, compare=False)
    unknown_keys: Tuple[str, ...] = field(default=(), compare=False)
    issues: List[Dict[str, str]] = field(default_factory=list, compare=False)

    # -- identity --------------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        for key in ("source_dir", "unknown_keys", "issues"):
            data.pop(key)
        return data

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, default=list)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_overrides(self, **changes) -> "Config":
        return replace(self, **changes)

    # -- builders --------------------------------------------------------------

    def mesh_spec(self) -> MeshSpec:
        return MeshSpec(self.mesh_kind, n=self.mesh_n, nx=self.mesh_nx, ny=self.mesh_ny,
                        extent=tuple(self.mesh_extent_m))

    def build_mesh(self) -> Mesh:
        return generate_mesh(self.mesh_spec())

    def build_spaces(self, mesh: Optional[Mesh] = None) -> ProblemSpaces:
        return build_problem_spaces(mesh or self.build_mesh(), self.flow_dirichlet, self.mechanics_dirichlet)

    def bounds(self) -> PorosityBounds:
        return PorosityBounds(self.porosity_min, self.porosity_max)

    def capillary(self) -> CapillaryModel:
        return build_capillary_model(
            self.capillary_model,
            entry_pressure=self.entry_pressure_pa,
            exponent=self.brooks_corey_lambda,
            gamma0=self.capillary_gamma0_pa,
            knots=self.tabulated_knots or None,
            d2_values=self.tabulated_d2_pa or None,
            dgamma0=self.tabulated_dgamma0_pa,
        )

    def field_values(self, key: str, mesh: Mesh) -> np.ndarray:
        return resolve_field(getattr(self, key), mesh, self.source_dir)

    def external_force(self, mesh: Mesh):
        values = tuple(self.external_force_n_m3)
        return float(values[0]) if len(values) == 1 else np.asarray(values[:mesh.dim], dtype=float)

    def material(self, mesh: Mesh) -> MaterialParams:
        """MaterialParams with every field resolved to nodal values.

        Dirichlet pressures given as `initial` are placeholders (zero) until the
        orchestrator replaces them with the equilibrium pressures.
        """
        def dirichlet(key):
            return 0.0 if getattr(self, key) == INITIAL_KEYWORD else self.field_values(key, mesh)

        return MaterialParams(
            bounds=self.bounds(),
            viscosity_n=self.viscosity_n_pa_s,
            viscosity_w=self.viscosity_w_pa_s,
            density_n=self.density_n_kg_m3,
            density_w=self.density_w_kg_m3,
            gravity=tuple(self.gravity_m_s2),
            lame_mu=self.lame_mu_pa,
            lame_lambda=self.lame_lambda_pa,
            biot_b=self.biot_coefficient,
            biot_modulus=self.biot_modulus_pa,
            permeability_scale=self.permeability_scale_m2,
            permeability_law=PermeabilityLaw(self.permeability_law),
            phi_r=self.field_values("residual_porosity", mesh),
            rock_density=self.field_values("rock_density_kg_m3", mesh),
            f_ext=self.external_force(mesh),
            p_dirichlet_n=dirichlet("dirichlet_pressure_n_pa"),
            p_dirichlet_w=dirichlet("dirichlet_pressure_w_pa"),
        )

    def dirichlet_from_initial(self) -> Tuple[bool, bool]:
        return (self.dirichlet_pressure_n_pa == INITIAL_KEYWORD,
                self.dirichlet_pressure_w_pa == INITIAL_KEYWORD)

    def schedule(self) -> Tuple[float, ...]:
        """The ε levels, cut at eps_final when it is set"""
        levels = tuple(float(e) for e in self.eps_schedule)
        if self.eps_final is None:
            return levels
        return tuple(e for e in levels if e > self.eps_final) + (float(self.eps_final),)

    def controls(self) -> StepControls:
        return StepControls(
            h=self.time_step_s,
            eps_schedule=self.schedule(),
            newton_tol=self.newton_tol,
            newton_max=self.newton_max,
            fp_tol=self.fp_tol,
            fp_max=self.fp_max,
            fp_relax=self.fp_relax,
            h_max=self.h_max_s,
            heps2_max=self.heps2_max,
            constraint_residual=self.constraint_residual,
        )

    def initial_contents(self, spaces: ProblemSpaces) -> PhaseContentPair:
        mesh = spaces.mesh
        return PhaseContentPair(spaces.cell_means(self.field_values("initial_content_n", mesh)),
                                spaces.cell_means(self.field_values("initial_content_w", mesh)))

    def snapshot_cadence(self) -> int:
        if self.snapshot_every > 0:
            return self.snapshot_every
        return 1 if self.n_steps <= 100 else -(-self.n_steps // 100)


# -- field values ---------------------------------------------------------------

def resolve_field(spec: Union[str, float], mesh: Mesh, base_dir: Optional[str] = None) -> np.ndarray:
    """Nodal values of a constant, `expr:` or `file:` field specification"""
    text = str(spec).strip()
    if text.startswith(EXPR_PREFIX):
        coords = {"x": mesh.vertices[:, 0], "y": mesh.vertices[:, 1] if mesh.dim > 1 else 0.0 * mesh.vertices[:, 0]}
        namespace = {**EXPRESSION_NAMESPACE, **coords}
        code = compile_expression(text[len(EXPR_PREFIX):], frozenset(namespace))
        try:
            values = eval(code, {"__builtins__": {}}, namespace)
        except (ArithmeticError, TypeError, ValueError) as exc:
            raise ConfigParseError(f"cannot evaluate field expression '{text}': {exc}") from exc
        return np.broadcast_to(np.asarray(values, dtype=float), (mesh.n_vertices,)).copy()
    if text.startswith(FILE_PREFIX):
        path = Path(text[len(FILE_PREFIX):].strip())
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        values = read_field(path)
        if values.shape != (mesh.n_vertices,):
            raise ConfigParseError(f"field file {path} has {values.shape[0]} values, mesh has {mesh.n_vertices} vertices")
        return values
    return np.full(mesh.n_vertices, float(text))


def _check_field_syntax(value: str, key: str, line: int) -> str:
    text = value.strip()
    if key.startswith("dirichlet_pressure") and text == INITIAL_KEYWORD:
        return text
    if text.startswith((EXPR_PREFIX, FILE_PREFIX)):
        if not text.split(":", 1)[1].strip():
            raise ConfigParseError(f"{key}: empty field specification", line)
        if text.startswith(EXPR_PREFIX):
            try:
                compile_expression(text[len(EXPR_PREFIX):], EXPRESSION_NAMES)
            except ConfigParseError as exc:
                raise ConfigParseError(f"{key}: {exc}", line) from None
        return text
    try:
        float(text)
    except ValueError:
        raise ConfigParseError(f"{key}: expected a number, expr: or file: value, got '{value}'", line) from None
    return text


# -- parsing ----------------------------------------------------------------------

_FIELD_TYPES = {f.name: f.type for f in fields(Config)}
_INTERNAL = {"source_dir", "unknown_keys", "issues"}


def _convert(key: str, value: str, line: int) -> Any:
    kind = _FIELD_TYPES[key]
    text = value.strip()
    try:
        if key in FIELD_KEYS:
            return _check_field_syntax(text, key, line)
        if kind in (float, "float"):
            return float(text)
        if kind in (int, "int"):
            number = float(text)
            if number != int(number):
                raise ValueError
            return int(number)
        if kind in (str, "str"):
            return text
        if kind == Optional[float]:
            return None if text.lower() in ("", "none") else float(text)
        if kind == Tuple[str, ...]:
            return tuple(tok.strip() for tok in text.split(",") if tok.strip())
        if kind == Tuple[float, ...]:
            return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise ConfigParseError(f"{key}: invalid value '{value}'", line) from None
    raise ConfigParseError(f"{key}: unsupported setting", line)


def _key_lines(text: str) -> Dict[str, int]:
    """Line number of every key; a non-comment line without '=' is a parse error"""
    lines = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("export "):
            line = line[len("export "):].lstrip()
        if "=" not in line:
            raise ConfigParseError(f"expected key=value, got '{raw.strip()}'", number)
        key = line.split("=", 1)[0].strip()
        if not key:
            raise ConfigParseError("empty key", number)
        lines[key] = number
    return lines


def parse_config(text: str, source_dir: Optional[str] = None) -> Config:
    """Config from document text without validation"""
    lines = _key_lines(text)
    values = dotenv_values(stream=io.StringIO(text))

    settings: Dict[str, Any] = {}
    unknown: List[str] = []
    for key, value in values.items():
        if key not in _FIELD_TYPES or key in _INTERNAL:
            unknown.append(key)
            continue
        if value is None:
            raise ConfigParseError(f"{key}: missing value", lines.get(key))
        settings[key] = _convert(key, value, lines.get(key))
    return Config(**settings, source_dir=source_dir, unknown_keys=tuple(unknown))


def load_config(text: str, source_dir: Optional[str] = None, audit_weak_coupling: bool = True) -> Config:
    """Parse and validate; errors raise ConfigValidationError, warnings land on config.issues"""
    from .config_validator import ensure_valid

    config = parse_config(text, source_dir)
    config.issues = ensure_valid(config, audit_weak_coupling=audit_weak_coupling)
    return config


def load_config_file(path: Union[str, Path], audit_weak_coupling: bool = True) -> Config:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc}") from exc
    return load_config(text, str(path.parent), audit_weak_coupling)


def parse_setting(key: str, value: str) -> Any:
    """Typed value of one setting given as text, as a document line would give it"""
    if key not in _FIELD_TYPES or key in _INTERNAL:
        raise ConfigParseError(f"unknown key '{key}'")
    return _convert(key, value, None)
