# src/scenario_io/audit_battery.py
"""
Property checks on a configured scenario: capillary identities, the
Lipschitz bounds of the Kirchhoff transforms, the convex-duality roundtrip
of Φ_ε, sampled monotonicity of the frozen map and the energy audit of one
time step.
"""
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Tuple

import numpy as np

from src.constitutive import (
    PhaseContentPair,
    f_eps_energy,
    gamma_eval,
    hat_pressures,
    kirchhoff_lipschitz_excess,
    phi_from_potentials,
    saturation_from_capillary,
)
from src.diagnostics import energy_audit, graph_consistency
from src.stepper import build_frozen_system, eps_continuation, monotonicity_probe
from src.utils.errors import PoromechError
from src.utils.logging_config import get_logger
from .scenario import Scenario

logger = get_logger(__name__)

CAPILLARY_SAMPLES = 1000
DUALITY_SAMPLES = 1000
LIPSCHITZ_SAMPLES = 10_000
IDENTITY_TOL = 1e-12
DUALITY_TOL = 1e-8
LIPSCHITZ_SLACK = 1e-12


@dataclass
class AuditCheck:
    name: str
    passed: bool
    value: float
    threshold: float
    details: Dict[str, Any] = field(default_factory=dict)


@dataclass
class AuditReport:
    checks: List[AuditCheck] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failed(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {"passed": self.passed, "wall_time": self.wall_time, "checks": [asdict(c) for c in self.checks]}


def capillary_identities(scenario: Scenario, rng: np.random.Generator) -> AuditCheck:
    """p̂_n - p̂_w = γ' and s p̂_n + (1-s) p̂_w = γ, relative to the value scale"""
    s = rng.uniform(0.0, 1.0, CAPILLARY_SAMPLES)
    s = s[(s > 0.0) & (s < 1.0)]
    gamma, dgamma, _ = gamma_eval(scenario.base, s)
    p_n, p_w = hat_pressures(scenario.base, s)
    scale = np.maximum(1.0, np.maximum(np.abs(gamma), np.abs(dgamma)))
    difference = np.max(np.abs(p_n - p_w - dgamma) / scale)
    average = np.max(np.abs(s * p_n + (1.0 - s) * p_w - gamma) / scale)
    worst = float(max(difference, average))
    return AuditCheck("capillary_identities", worst <= IDENTITY_TOL, worst, IDENTITY_TOL,
                      {"difference": float(difference), "average": float(average), "samples": int(s.size)})


def kirchhoff_lipschitz(scenario: Scenario, rng: np.random.Generator) -> AuditCheck:
    """ξ∘S and ψ∘ξ⁻¹ on random pairs; capillary pressures span both saturation plateaus"""
    low, high = scenario.base.dgamma_range()
    top = high if np.isfinite(high) else low + 20.0 * max(abs(low), 1.0)
    margin = 0.1 * (top - low)
    a, b = rng.uniform(low - margin, top + margin, (2, LIPSCHITZ_SAMPLES))
    s, t = rng.uniform(0.0, 1.0, (2, LIPSCHITZ_SAMPLES))
    composed, inverse = kirchhoff_lipschitz_excess(scenario.base, a, b, s, t)
    worst = max(composed, inverse)
    return AuditCheck("kirchhoff_lipschitz", worst <= LIPSCHITZ_SLACK, worst, LIPSCHITZ_SLACK,
                      {"xi_of_saturation": composed, "psi_of_xi_inverse": inverse, "pairs": LIPSCHITZ_SAMPLES})


def duality_roundtrip(scenario: Scenario, rng: np.random.Generator) -> AuditCheck:
    """DF_ε(Φ_ε(y)) = y for potentials whose difference lies in the range of γ_ε'.

    The potentials are built from a saturation difference and a multiplier
    χ with |χ| ≤ 10ε, where G_ε⁻¹ is resolved to full precision.
    """
    eps = scenario.final_eps
    regmodel = scenario.regmodel
    bounds = scenario.params.bounds
    low, high = regmodel.dgamma_range()
    span = high - low
    difference = rng.uniform(low + 0.01 * span, high - 0.01 * span, DUALITY_SAMPLES)
    chi = rng.uniform(-10.0 * eps, 10.0 * eps, DUALITY_SAMPLES)
    s = saturation_from_capillary(regmodel, difference)
    y_w = chi - s * difference + regmodel.gamma(s)
    y_n = y_w + difference

    contents = phi_from_potentials(regmodel, bounds, eps, y_n, y_w)
    _, (grad_n, grad_w) = f_eps_energy(regmodel, bounds, eps, PhaseContentPair(contents.phi_n, contents.phi_w))
    scale = np.maximum(1.0, np.maximum(np.abs(y_n), np.abs(y_w)))
    defect = float(np.max(np.maximum(np.abs(grad_n - y_n), np.abs(grad_w - y_w)) / scale))
    return AuditCheck("duality_roundtrip", defect <= DUALITY_TOL, defect, DUALITY_TOL,
                      {"eps": eps, "samples": DUALITY_SAMPLES})


def frozen_monotonicity(scenario: Scenario, samples: int, seed: int) -> AuditCheck:
    system = build_frozen_system(scenario.initial, scenario.final_eps, scenario.controls, scenario.params,
                                 scenario.spaces, scenario.family, scenario.mechanics)
    report = monotonicity_probe(system, samples=samples, seed=seed)
    return AuditCheck("frozen_monotonicity", report.monotone, report.min_normalized_pairing, -1e-12,
                      report.to_dict())


def one_step_energy(scenario: Scenario) -> AuditCheck:
    """Energy audit, bound preservation and graph distance after one time step"""
    prev = scenario.initial
    continuation = eps_continuation(prev, scenario.controls, scenario.params, scenario.spaces,
                                    scenario.family, scenario.mechanics)
    state, final = continuation.state, continuation.final
    audit = energy_audit(prev, state, final.terms, scenario.controls.h, scenario.final_eps, scenario.params,
                         scenario.regmodel, scenario.mechanics)
    bounds = scenario.params.bounds
    strictly_inside = bool(np.all(state.phi > bounds.phi_lo) and np.all(state.phi < bounds.phi_hi))
    graph = graph_consistency(state, bounds)
    passed = audit.identity_holds and audit.inequality_holds and strictly_inside
    return AuditCheck("one_step_energy", passed, audit.inequality_residual, 0.0, {
        **audit.to_dict(),
        "strictly_inside_bounds": strictly_inside,
        "graph_max_distance": graph.max_distance,
        "levels": [level.to_dict() for level in continuation.levels],
    })


def run_audit_battery(scenario: Scenario, samples: int = 200, seed: int = 0) -> AuditReport:
    """Run every check; a check that raises is recorded as failed and the rest still run"""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    checks: List[Tuple[str, Callable[[], AuditCheck]]] = [
        ("capillary_identities", lambda: capillary_identities(scenario, rng)),
        ("kirchhoff_lipschitz", lambda: kirchhoff_lipschitz(scenario, rng)),
        ("duality_roundtrip", lambda: duality_roundtrip(scenario, rng)),
        ("frozen_monotonicity", lambda: frozen_monotonicity(scenario, samples, seed)),
        ("one_step_energy", lambda: one_step_energy(scenario)),
    ]

    report = AuditReport()
    for name, check in checks:
        try:
            result = check()
        except PoromechError as exc:
            logger.error("Audit check raised", error=exc, check=name)
            result = AuditCheck(name, False, float("nan"), float("nan"), {"error": str(exc)})
        logger.info("Audit check", check=result.name, passed=result.passed, value=result.value)
        report.checks.append(result)
    report.wall_time = time.perf_counter() - start
    return report
