# src/diagnostics/convergence.py
"""
Manufactured-solution study of the single-phase limit (s_n = 0) of the step map.

One frozen backward-Euler step from rest, solved by the production Newton
path, on the unit square with every side clamped and pressure-Dirichlet:

    p_w = π = a sin(πx) sinh(πy) / sinh(π)      (harmonic)
    u   = a (sin(πx) sin(πy), sin(πx) sin(πy))
    φ   = (φ♭ + φ♯)/2, so χ = G_ε(φ) = 0 and p_w - π = γ_ε(0) = 0

The residual porosity absorbs b div u + π/M and the body force absorbs the
mechanics residual, so (p_w, π, u) is exact for the flow, constraint and
mechanics rows. |p_w| stays below γ'(0), which keeps the saturation on its
s_n = 0 plateau and p_n at zero. Errors are L² over P1 pressure and
displacement.
"""
from dataclasses import asdict, dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from src.constitutive import BrooksCoreyModel, PorosityBounds, RegularizedModel
from src.coupled import MaterialParams, MechanicsSystem, PermeabilityLaw, State, build_problem_spaces
from src.femcore import Mesh, MeshSpec, generate_mesh
from src.utils.errors import DomainError
from src.utils.logging_config import get_logger

logger = get_logger(__name__)

SIDES = ("left", "right", "bottom", "top")
DEFAULT_LEVELS = (8, 16, 32)


@dataclass(frozen=True)
class BiotParams:
    biot_modulus: float = 1.0
    biot_b: float = 1.0
    permeability: float = 1.0
    time_step: float = 1.0
    lame_mu: float = 1.0
    lame_lambda: float = 1.0
    amplitude: float = 0.01
    eps: float = 0.02
    porosity_bounds: Tuple[float, float] = (0.1, 0.9)


def _trig(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(S, Cx, Cy, Cxy) with S = sin sin, Cx = cos sin, Cy = sin cos, Cxy = cos cos"""
    px, py = np.pi * points[..., 0], np.pi * points[..., 1]
    return (np.sin(px) * np.sin(py), np.cos(px) * np.sin(py),
            np.sin(px) * np.cos(py), np.cos(px) * np.cos(py))


def exact_pressure(points: np.ndarray, params: BiotParams) -> np.ndarray:
    px, py = np.pi * points[..., 0], np.pi * points[..., 1]
    return params.amplitude * np.sin(px) * np.sinh(py) / np.sinh(np.pi)


def exact_displacement(points: np.ndarray, params: BiotParams) -> np.ndarray:
    s = params.amplitude * _trig(points)[0]
    return np.stack([s, s], axis=-1)


def manufactured_sources(points: np.ndarray, params: BiotParams) -> Tuple[np.ndarray, np.ndarray]:
    """(b div u + π/M, f) at the points: what φ_r and the body force must absorb"""
    s, cx, cy, cxy = _trig(points)
    a, pi, pi2 = params.amplitude, np.pi, np.pi ** 2
    mu, lam, b = params.lame_mu, params.lame_lambda, params.biot_b
    px, py = pi * points[..., 0], pi * points[..., 1]

    storage = b * a * pi * (cx + cy) + exact_pressure(points, params) / params.biot_modulus
    grad_pi = a * pi / np.sinh(pi) * np.stack([np.cos(px) * np.sinh(py), np.sin(px) * np.cosh(py)], axis=-1)
    common = a * (2.0 * mu * pi2 * s - (mu + lam) * pi2 * (cxy - s))
    return storage, np.stack([common, common], axis=-1) + b * grad_pi


def edge_midpoint_error(mesh: Mesh, nodal: np.ndarray, exact: np.ndarray) -> float:
    """L² error of a P1 field (nv, k) against exact values at edge midpoints (nc, 3, k)"""
    cells = mesh.cells
    pairs = ((0, 1), (1, 2), (2, 0))
    sq = np.zeros(mesh.n_cells)
    for m, (a, c) in enumerate(pairs):
        approx = 0.5 * (nodal[cells[:, a]] + nodal[cells[:, c]])
        sq += np.sum((approx - exact[:, m]) ** 2, axis=-1)
    return float(np.sqrt(mesh.cell_volumes @ sq / 3.0))


def _midpoints(mesh: Mesh) -> np.ndarray:
    v = mesh.vertices[mesh.cells]
    return np.stack([0.5 * (v[:, 0] + v[:, 1]), 0.5 * (v[:, 1] + v[:, 2]), 0.5 * (v[:, 2] + v[:, 0])], axis=1)


def manufactured_biot_step(n: int, params: BiotParams = BiotParams()) -> State:
    """The accepted single-phase step on an n×n mesh, solved by frozen_step_solve"""
    from src.stepper import FrozenData, StepControls, frozen_step_solve

    regmodel = RegularizedModel(BrooksCoreyModel(entry_pressure=1.0, exponent=3.0), params.eps)
    plateau_edge = regmodel.dgamma_range()[0]
    if params.amplitude >= plateau_edge:
        raise DomainError(f"amplitude {params.amplitude} leaves the single-phase plateau below {plateau_edge}")

    mesh = generate_mesh(MeshSpec("rectangle", nx=n, ny=n))
    spaces = build_problem_spaces(mesh, SIDES, SIDES)
    bounds = PorosityBounds(*params.porosity_bounds)
    storage, force = manufactured_sources(mesh.vertices, params)
    material = MaterialParams(
        bounds=bounds,
        gravity=(0.0, 0.0),
        lame_mu=params.lame_mu,
        lame_lambda=params.lame_lambda,
        biot_b=params.biot_b,
        biot_modulus=params.biot_modulus,
        permeability_scale=params.permeability,
        permeability_law=PermeabilityLaw.CONSTANT,
        phi_r=bounds.midpoint - storage,
        f_ext=force,
        p_dirichlet_n=0.0,
        p_dirichlet_w=exact_pressure(mesh.vertices, params),
    )
    mechanics = MechanicsSystem(spaces, material)

    zeros_p = np.zeros(mesh.n_vertices)
    zeros_c = np.zeros(mesh.n_cells)
    rest = State(spaces, zeros_p, zeros_p.copy(), np.zeros(spaces.displacement.n_dofs), zeros_c,
                 np.full(mesh.n_cells, bounds.midpoint), zeros_c.copy(), zeros_c.copy(), zeros_c.copy(), params.eps)
    controls = StepControls(h=params.time_step, eps_schedule=(params.eps,), h_max=2.0 * params.time_step)
    result = frozen_step_solve(rest, FrozenData.from_state(rest, bounds), params.eps, controls, material, spaces,
                               regmodel, mechanics)
    logger.debug("Manufactured Biot step solved", n=n, newton_iterations=result.iterations,
                 residual=result.residual_norm)
    return result.system.state_from(result.unknowns, params.time_step)


def manufactured_biot_errors(n: int, params: BiotParams = BiotParams()) -> Tuple[float, float]:
    """(‖p_w,h - p_w‖, ‖u_h - u‖) in L² on an n×n mesh"""
    state = manufactured_biot_step(n, params)
    mesh = state.spaces.mesh
    mids = _midpoints(mesh)
    err_p = edge_midpoint_error(mesh, state.p_w[:, None], exact_pressure(mids, params)[:, :, None])
    err_u = edge_midpoint_error(mesh, state.displacement_nodal(), exact_displacement(mids, params))
    return err_p, err_u


@dataclass
class ConvergenceStudy:
    levels: List[int] = field(default_factory=list)
    errors_p: List[float] = field(default_factory=list)
    errors_u: List[float] = field(default_factory=list)

    @staticmethod
    def _orders(levels, errors) -> List[float]:
        return [float(np.log(e0 / e1) / np.log(n1 / n0))
                for (n0, e0), (n1, e1) in zip(zip(levels, errors), zip(levels[1:], errors[1:]))]

    @property
    def orders_p(self) -> List[float]:
        return self._orders(self.levels, self.errors_p)

    @property
    def orders_u(self) -> List[float]:
        return self._orders(self.levels, self.errors_u)

    @property
    def min_order(self) -> float:
        return min(self.orders_p + self.orders_u, default=float("nan"))

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(orders_p=self.orders_p, orders_u=self.orders_u, min_order=self.min_order)
        return out


def linear_biot_study(levels: Sequence[int] = DEFAULT_LEVELS, params: BiotParams = BiotParams()) -> ConvergenceStudy:
    study = ConvergenceStudy()
    for n in levels:
        err_p, err_u = manufactured_biot_errors(n, params)
        study.levels.append(int(n))
        study.errors_p.append(err_p)
        study.errors_u.append(err_u)
        logger.debug("Manufactured Biot level", n=n, error_p=err_p, error_u=err_u)
    return study
