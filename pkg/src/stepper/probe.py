# src/stepper/probe.py
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from src.constitutive import RegularizedFamily
from src.coupled import MaterialParams, MechanicsSystem, ProblemSpaces, State
from src.utils.logging_config import get_logger
from .controls import FrozenData, StepControls
from .frozen_system import FrozenSystem

logger = get_logger(__name__)

MONOTONE_SLACK = 1e-12


@dataclass
class MonotonicityReport:
    samples: int
    min_ratio: float
    mean_ratio: float
    min_normalized_pairing: float
    violations: int

    @property
    def monotone(self) -> bool:
        return self.violations == 0

    @property
    def coercivity(self) -> float:
        return self.min_ratio

    def to_dict(self) -> dict:
        out = asdict(self)
        out["monotone"] = self.monotone
        return out


def build_frozen_system(prev: State, eps: float, controls: StepControls, params: MaterialParams,
                        spaces: ProblemSpaces, family: RegularizedFamily,
                        mechanics: Optional[MechanicsSystem] = None) -> FrozenSystem:
    """The step map frozen at prev itself"""
    mechanics = mechanics or MechanicsSystem(spaces, params)
    return FrozenSystem(prev, FrozenData.from_state(prev, params.bounds), eps, controls.h, params, spaces,
                        family.at(eps), mechanics, controls.constraint_residual)


def _perturbation(system: FrozenSystem, rng: np.random.Generator, amplitude: float) -> np.ndarray:
    z = rng.standard_normal(system.layout.size)
    norms = system.block_norms_sq(z)
    for index, norm in enumerate(norms):
        block = system.layout.block(index)
        if norm > 0.0:
            z[block] *= amplitude * rng.uniform(0.1, 1.0) / np.sqrt(norm)
    return z


def monotonicity_probe(system: FrozenSystem, base_unknowns: Optional[np.ndarray] = None,
                       samples: int = 200, seed: int = 0, amplitude: float = 1.0) -> MonotonicityReport:
    """Sample ⟨H(Y₁) - H(Y₂), Y₁ - Y₂⟩ over random pairs near base_unknowns.

    Each perturbation is scaled block by block in the probe norm, so no block
    dominates a sample. The ratio to ‖Y₁ - Y₂‖² in that norm estimates the
    coercivity constant; a pair counts as a violation when the pairing is
    below -1e-12 ‖ΔY‖².
    """
    rng = np.random.default_rng(seed)
    base = system.unknowns_from_state(system.prev) if base_unknowns is None else np.asarray(base_unknowns)

    ratios, normalized = [], []
    violations = 0
    for _ in range(samples):
        y1 = base + _perturbation(system, rng, amplitude)
        y2 = base + _perturbation(system, rng, amplitude)
        dy = y1 - y2
        pairing = float((system.residual(y1) - system.residual(y2)) @ dy)
        norm_sq = system.probe_norm_sq(dy)
        if norm_sq <= 0.0:
            continue
        ratios.append(pairing / norm_sq)
        normalized.append(pairing / float(dy @ dy))
        if pairing < -MONOTONE_SLACK * norm_sq:
            violations += 1

    report = MonotonicityReport(
        samples=len(ratios),
        min_ratio=float(min(ratios)) if ratios else 0.0,
        mean_ratio=float(np.mean(ratios)) if ratios else 0.0,
        min_normalized_pairing=float(min(normalized)) if normalized else 0.0,
        violations=violations,
    )
    logger.debug("Monotonicity probe", **report.to_dict())
    return report
