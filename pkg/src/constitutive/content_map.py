# src/constitutive/content_map.py
"""
The potential-to-content map Φ_ε and its convex potential F_ε.

Φ_ε sends shifted potentials y_α = p_α - π to phase contents (φ_n, φ_w) in
the admissible set K_φ; it is the gradient of the convex conjugate of F_ε,
so DF_ε(Φ_ε(y)) = y wherever the saturation is not on a plateau.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.utils.errors import DomainError, EpsMismatchError
from .capillary_models import saturation_from_capillary
from .porosity_constraint import (
    PorosityBounds,
    soft_constraint_energy,
    soft_constraint_g,
    soft_constraint_g_inv,
    soft_constraint_g_inv_slope,
)
from .regularization import RegularizedModel


@dataclass
class PhaseContentPair:
    phi_n: np.ndarray
    phi_w: np.ndarray

    def __post_init__(self):
        self.phi_n = np.asarray(self.phi_n, dtype=float)
        self.phi_w = np.asarray(self.phi_w, dtype=float)

    @property
    def phi(self) -> np.ndarray:
        return self.phi_n + self.phi_w

    @property
    def s_n(self) -> np.ndarray:
        return self.phi_n / self.phi

    @property
    def s_w(self) -> np.ndarray:
        return self.phi_w / self.phi

    def in_k_phi(self, bounds: PorosityBounds, tol: float = 0.0) -> np.ndarray:
        phi = self.phi
        return (
            (self.phi_n >= -tol) & (self.phi_w >= -tol)
            & (phi >= bounds.phi_lo - tol) & (phi <= bounds.phi_hi + tol)
        )

    def stacked(self) -> np.ndarray:
        return np.stack([self.phi_n, self.phi_w], axis=-1)

    def copy(self) -> "PhaseContentPair":
        return PhaseContentPair(self.phi_n.copy(), self.phi_w.copy())


def _check_eps(regmodel: RegularizedModel, eps: float):
    if regmodel.eps != eps:
        raise EpsMismatchError(f"regularized model built for eps={regmodel.eps}, called with eps={eps}")


def phi_from_potentials(regmodel: RegularizedModel, bounds: PorosityBounds, eps: float,
                        y_n, y_w) -> PhaseContentPair:
    """Φ_ε(y_n, y_w)"""
    _check_eps(regmodel, eps)
    y_n = np.asarray(y_n, dtype=float)
    y_w = np.asarray(y_w, dtype=float)

    s_n = saturation_from_capillary(regmodel, y_n - y_w)
    phi = soft_constraint_g_inv(bounds, eps, s_n * y_n + (1.0 - s_n) * y_w - regmodel.gamma(s_n))
    return PhaseContentPair(phi * s_n, phi * (1.0 - s_n))


def phi_jacobian(regmodel: RegularizedModel, bounds: PorosityBounds, eps: float,
                 y_n, y_w) -> Tuple[PhaseContentPair, np.ndarray]:
    """Φ_ε and its derivative, shape (..., 2, 2) indexed [phase, potential].

    On saturation plateaus dS_ε = 0 is used (generalized derivative).
    """
    _check_eps(regmodel, eps)
    y_n = np.asarray(y_n, dtype=float)
    y_w = np.asarray(y_w, dtype=float)
    delta = y_n - y_w

    s = saturation_from_capillary(regmodel, delta)
    chi = s * y_n + (1.0 - s) * y_w - regmodel.gamma(s)
    phi = soft_constraint_g_inv(bounds, eps, chi)
    slope = soft_constraint_g_inv_slope(bounds, eps, chi)

    low, high = regmodel.dgamma_range()
    on_range = (delta > low) & (delta < high)
    ds = np.where(on_range, 1.0 / regmodel.d2gamma(s), 0.0)

    s_w = 1.0 - s
    jac = np.empty(s.shape + (2, 2))
    jac[..., 0, 0] = s * s * slope + phi * ds
    jac[..., 0, 1] = s * s_w * slope - phi * ds
    jac[..., 1, 0] = jac[..., 0, 1]
    jac[..., 1, 1] = s_w * s_w * slope + phi * ds

    return PhaseContentPair(phi * s, phi * s_w), jac


def f_eps_energy(regmodel: RegularizedModel, bounds: PorosityBounds, eps: float,
                 pair: PhaseContentPair,
                 with_gradient: bool = True) -> Tuple[np.ndarray, Optional[Tuple[np.ndarray, np.ndarray]]]:
    """F_ε(φ_n, φ_w) = φ γ_ε(s_n) + 𝒢_ε(φ) and, optionally, DF_ε.

    The gradient is (p̄_n,ε(s_n) + G_ε(φ), p̄_w,ε(s_n) + G_ε(φ)); it needs φ
    strictly inside the bounds.
    """
    _check_eps(regmodel, eps)
    if not np.all(pair.in_k_phi(bounds)):
        raise DomainError("content pair outside K_phi (F_eps is +inf there)")

    phi = pair.phi
    s_n = pair.s_n
    value = phi * regmodel.gamma(s_n) + soft_constraint_energy(bounds, eps, phi)

    if not with_gradient:
        return value, None

    chi = soft_constraint_g(bounds, eps, phi)
    gamma = regmodel.gamma(s_n)
    dgamma = regmodel.dgamma(s_n)
    grad_n = gamma + (1.0 - s_n) * dgamma + chi
    grad_w = gamma - s_n * dgamma + chi
    return value, (grad_n, grad_w)


def _project_onto_segment(a, b, p, q):
    d = (q[0] - p[0], q[1] - p[1])
    t = ((a - p[0]) * d[0] + (b - p[1]) * d[1]) / (d[0] ** 2 + d[1] ** 2)
    t = np.clip(t, 0.0, 1.0)
    return p[0] + t * d[0], p[1] + t * d[1]


def project_k_phi(pair: PhaseContentPair, bounds: PorosityBounds) -> PhaseContentPair:
    """Euclidean projection onto K_φ.

    K_φ is the trapezoid with corners (φ♭,0), (φ♯,0), (0,φ♯), (0,φ♭); outside
    points go to the nearest of the four edge projections, which covers the
    face and corner cases of the KKT analysis.
    """
    a = np.asarray(pair.phi_n, dtype=float)
    b = np.asarray(pair.phi_w, dtype=float)
    lo, hi = bounds.phi_lo, bounds.phi_hi

    corners = [(lo, 0.0), (hi, 0.0), (0.0, hi), (0.0, lo)]
    best_a = np.array(a, copy=True)
    best_b = np.array(b, copy=True)
    best_dist = np.full(np.shape(a), np.inf)

    for p, q in zip(corners, corners[1:] + corners[:1]):
        ca, cb = _project_onto_segment(a, b, p, q)
        dist = (ca - a) ** 2 + (cb - b) ** 2
        closer = dist < best_dist
        best_a = np.where(closer, ca, best_a)
        best_b = np.where(closer, cb, best_b)
        best_dist = np.where(closer, dist, best_dist)

    total = a + b
    inside = (a >= 0.0) & (b >= 0.0) & (total >= lo) & (total <= hi)
    return PhaseContentPair(np.where(inside, a, best_a), np.where(inside, b, best_b))
