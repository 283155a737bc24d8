# src/diagnostics/graph.py
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.constitutive import PorosityBounds
from src.coupled import State

VIOLATION_TOL = 1e-6


@dataclass
class GraphReport:
    """Distance of (φ, χ) to the graph of ∂𝟙[φ♭, φ♯]"""

    max_distance: float
    sign_violations: int
    eps: Optional[float] = None

    def to_dict(self) -> dict:
        return {"eps": self.eps, "max_distance": self.max_distance, "sign_violations": self.sign_violations}


def graph_distances(phi: np.ndarray, chi: np.ndarray, bounds: PorosityBounds,
                    margin: Optional[float] = None) -> np.ndarray:
    """Pointwise distance, the minimum over the interior and the two end branches"""
    phi = np.asarray(phi, dtype=float)
    chi = np.asarray(chi, dtype=float)
    delta = bounds.width / 100.0 if margin is None else margin

    interior = (phi > bounds.phi_lo + delta) & (phi < bounds.phi_hi - delta)
    to_interior = np.where(interior, np.abs(chi), np.inf)
    to_lower = np.hypot(phi - bounds.phi_lo, np.maximum(chi, 0.0))
    to_upper = np.hypot(phi - bounds.phi_hi, np.maximum(-chi, 0.0))
    return np.minimum(to_interior, np.minimum(to_lower, to_upper))


def graph_report_from_values(phi: np.ndarray, chi: np.ndarray, bounds: PorosityBounds,
                             margin: Optional[float] = None, eps: Optional[float] = None) -> GraphReport:
    """Maximum graph distance and the count of multiplier sign violations.

    A sign violation is χ < 0 away from φ♭ or χ > 0 away from φ♯ by more than
    the margin, with |χ| above the tolerance.
    """
    phi = np.asarray(phi, dtype=float)
    chi = np.asarray(chi, dtype=float)
    delta = bounds.width / 100.0 if margin is None else margin

    distances = graph_distances(phi, chi, bounds, delta)
    away_from_lo = phi > bounds.phi_lo + delta
    away_from_hi = phi < bounds.phi_hi - delta
    violations = (away_from_lo & (chi < -VIOLATION_TOL)) | (away_from_hi & (chi > VIOLATION_TOL))
    return GraphReport(
        max_distance=float(distances.max()) if distances.size else 0.0,
        sign_violations=int(violations.sum()),
        eps=eps,
    )


def graph_consistency(state: State, bounds: PorosityBounds, margin: Optional[float] = None) -> GraphReport:
    return graph_report_from_values(state.phi, state.chi, bounds, margin, eps=state.eps)
