# src/constitutive/porosity_constraint.py
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, xlogy

from src.utils.errors import DomainError


@dataclass(frozen=True)
class PorosityBounds:
    phi_lo: float
    phi_hi: float

    def __post_init__(self):
        if not 0.0 < self.phi_lo < self.phi_hi < 1.0:
            raise DomainError(
                f"porosity bounds must satisfy 0 < lo < hi < 1, got ({self.phi_lo}, {self.phi_hi})"
            )

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.phi_lo + self.phi_hi)

    @property
    def width(self) -> float:
        return self.phi_hi - self.phi_lo

    def strictly_inside(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        return (phi > self.phi_lo) & (phi < self.phi_hi)


def _require_open_interval(bounds: PorosityBounds, phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if not np.all(bounds.strictly_inside(phi)):
        raise DomainError(
            "porosity must lie strictly inside the bounds",
            (float(np.nanmin(phi)), float(np.nanmax(phi))),
        )
    return phi


def soft_constraint_g(bounds: PorosityBounds, eps: float, phi) -> np.ndarray:
    """χ = ε log((φ - φ♭)/(φ♯ - φ))"""
    phi = _require_open_interval(bounds, phi)
    return eps * (np.log(phi - bounds.phi_lo) - np.log(bounds.phi_hi - phi))


def soft_constraint_g_prime(bounds: PorosityBounds, eps: float, phi) -> np.ndarray:
    phi = _require_open_interval(bounds, phi)
    return eps * (1.0 / (phi - bounds.phi_lo) + 1.0 / (bounds.phi_hi - phi))


def soft_constraint_g_inv(bounds: PorosityBounds, eps: float, chi) -> np.ndarray:
    """Inverse of G_ε, a sigmoid between the bounds.

    expit keeps large |χ|/ε from overflowing; the result is nudged inside the
    open interval when rounding lands on a bound.
    """
    t = np.asarray(chi, dtype=float) / eps
    phi = bounds.phi_lo + bounds.width * expit(t)
    return np.clip(phi, np.nextafter(bounds.phi_lo, 1.0), np.nextafter(bounds.phi_hi, 0.0))


def soft_constraint_g_inv_slope(bounds: PorosityBounds, eps: float, chi) -> np.ndarray:
    """dφ/dχ of the inverse, from the two gaps computed without cancellation"""
    t = np.asarray(chi, dtype=float) / eps
    return bounds.width * expit(t) * expit(-t) / eps


def soft_constraint_energy(bounds: PorosityBounds, eps: float, phi) -> np.ndarray:
    """𝒢_ε(φ) = ∫_mid^φ G_ε, finite on the closed interval"""
    phi = np.asarray(phi, dtype=float)
    if np.any(phi < bounds.phi_lo) or np.any(phi > bounds.phi_hi):
        raise DomainError(
            "porosity outside the bounds (energy is +inf there)",
            (float(np.nanmin(phi)), float(np.nanmax(phi))),
        )
    lo_gap = phi - bounds.phi_lo
    hi_gap = bounds.phi_hi - phi
    half = 0.5 * bounds.width
    return eps * (xlogy(lo_gap, lo_gap) + xlogy(hi_gap, hi_gap) - 2.0 * half * np.log(half))


def mobility_floor(eps: float, s) -> np.ndarray:
    """k_ε(s) = max(ε, s)"""
    return np.maximum(eps, np.asarray(s, dtype=float))
