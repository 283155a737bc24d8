# src/constitutive/capillary_models.py
"""
Capillary energy densities γ on [0, 1].

γ is the antiderivative of the capillary pressure; p̂_n = γ + (1-s)γ' and
p̂_w = γ - sγ' are the phase pressures it induces, and ξ, ψ are the
Kirchhoff transforms built from γ''.
"""
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterator, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special
from scipy.interpolate import PchipInterpolator

from src.utils.errors import DomainError, EndpointDivergenceError, QuadratureError

QUADRATURE_TOL = 1e-10
ROOT_TOL = 1e-12


class CapillaryKind(str, Enum):
    BROOKS_COREY = "brooks-corey"
    TABULATED = "tabulated"
    REGULARIZED = "regularized"


class CapillaryModel(ABC):
    """Interface shared by every capillary energy density.

    The evaluation methods take arrays of saturations and perform no domain
    checks; use the module-level operations for checked access.
    """

    kind: CapillaryKind

    @property
    @abstractmethod
    def gamma0(self) -> float:
        """Value of γ(0)"""

    @property
    def diverges_at_one(self) -> bool:
        return False

    @property
    def singularity_order(self) -> float:
        """Exponent κ with γ''(s) ~ (1-s)^-κ near s = 1 (0 when bounded)"""
        return 0.0

    @abstractmethod
    def gamma(self, s: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def dgamma(self, s: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def d2gamma(self, s: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def d2gamma_crossings(self, level: float) -> np.ndarray:
        """Sorted saturations in (0, 1) where γ'' crosses the given level"""

    def breakpoints(self) -> np.ndarray:
        return np.array([0.0, 1.0])

    def dgamma_range(self) -> Tuple[float, float]:
        upper = math.inf if self.diverges_at_one else float(self.dgamma(np.array([1.0]))[0])
        return float(self.dgamma(np.array([0.0]))[0]), upper

    def dgamma_inverse(self, p: np.ndarray) -> np.ndarray:
        """(γ')⁻¹ on the invertible range, by safeguarded Newton/bisection"""
        p = np.asarray(p, dtype=float)
        upper = 1.0 - 1e-15 if self.diverges_at_one else 1.0
        return invert_increasing(self.dgamma, self.d2gamma, p,
                                 np.zeros_like(p), np.full_like(p, upper))

    def kirchhoff_xi(self, s: np.ndarray) -> np.ndarray:
        return cumulative_quadrature(
            lambda z: np.sqrt(z * (1.0 - z)) * self.d2gamma(z),
            s, self.breakpoints(), self._substitution_power(0.5),
        )

    def kirchhoff_psi(self, s: np.ndarray) -> np.ndarray:
        return cumulative_quadrature(
            lambda z: z * (1.0 - z) * self.d2gamma(z),
            s, self.breakpoints(), self._substitution_power(1.0),
        )

    def _substitution_power(self, weight_exponent: float) -> int:
        # z = 1 - t^q turns (1-z)^(w-κ) into a bounded integrand in t
        margin = 1.0 + weight_exponent - self.singularity_order
        if self.singularity_order <= weight_exponent or margin <= 0:
            return 1
        return int(math.ceil(1.0 / margin))


@dataclass(frozen=True)
class BrooksCoreyModel(CapillaryModel):
    """γ'(s) = p_e (1-s)^(-1/λ) with γ(0) = gamma0.

    Requires λ > 2 so that √(1-s)·γ''(s) is integrable near s = 1.
    """

    entry_pressure: float = 1.0
    exponent: float = 3.0
    gamma_at_zero: float = 0.0

    kind = CapillaryKind.BROOKS_COREY

    def __post_init__(self):
        if self.entry_pressure <= 0:
            raise DomainError(f"entry pressure must be positive, got {self.entry_pressure}")
        if self.exponent <= 2:
            raise DomainError(
                f"Brooks-Corey exponent must exceed 2 for an integrable Kirchhoff weight, got {self.exponent}"
            )

    @property
    def gamma0(self) -> float:
        return self.gamma_at_zero

    @property
    def diverges_at_one(self) -> bool:
        return True

    @property
    def singularity_order(self) -> float:
        return 1.0 + 1.0 / self.exponent

    def gamma(self, s):
        s = np.asarray(s, dtype=float)
        lam = self.exponent
        return self.gamma_at_zero + self.entry_pressure * lam / (lam - 1.0) * (
            1.0 - np.power(1.0 - s, (lam - 1.0) / lam)
        )

    def dgamma(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            return self.entry_pressure * np.power(1.0 - s, -1.0 / self.exponent)

    def d2gamma(self, s):
        s = np.asarray(s, dtype=float)
        lam = self.exponent
        with np.errstate(divide="ignore"):
            return self.entry_pressure / lam * np.power(1.0 - s, -1.0 / lam - 1.0)

    def d2gamma_crossings(self, level: float) -> np.ndarray:
        lam = self.exponent
        ratio = lam * level / self.entry_pressure
        if ratio <= 1.0:
            return np.empty(0)
        return np.array([1.0 - ratio ** (-lam / (1.0 + lam))])

    def dgamma_inverse(self, p):
        p = np.asarray(p, dtype=float)
        return 1.0 - np.power(np.maximum(p, self.entry_pressure) / self.entry_pressure, -self.exponent)

    def kirchhoff_xi(self, s):
        # incomplete Beta form: (p_e/λ) B(s; 3/2, 1/2 - 1/λ)
        s = np.asarray(s, dtype=float)
        a, b = 1.5, 0.5 - 1.0 / self.exponent
        return self.entry_pressure / self.exponent * special.beta(a, b) * special.betainc(a, b, s)

    def kirchhoff_psi(self, s):
        s = np.asarray(s, dtype=float)
        a = 1.0 - 1.0 / self.exponent
        t = 1.0 - s
        return self.entry_pressure / self.exponent * (
            (1.0 - np.power(t, a)) / a - (1.0 - np.power(t, a + 1.0)) / (a + 1.0)
        )


class TabulatedModel(CapillaryModel):
    """γ'' from positive knot values by monotone cubic interpolation."""

    kind = CapillaryKind.TABULATED

    def __init__(self, knots: Sequence[float], d2_values: Sequence[float],
                 gamma_at_zero: float = 0.0, dgamma_at_zero: float = 1.0):
        knots = np.asarray(knots, dtype=float)
        d2_values = np.asarray(d2_values, dtype=float)

        if knots.ndim != 1 or knots.shape != d2_values.shape or knots.size < 2:
            raise DomainError("tabulated model needs matching 1D knot and value arrays")
        if knots[0] != 0.0 or knots[-1] != 1.0 or np.any(np.diff(knots) <= 0):
            raise DomainError("tabulated knots must increase strictly from 0 to 1")
        if np.any(d2_values <= 0):
            raise DomainError("tabulated γ'' values must be positive")

        self.knots = knots
        self.d2_values = d2_values
        self.gamma_at_zero = float(gamma_at_zero)
        self.dgamma_at_zero = float(dgamma_at_zero)

        self._d2 = PchipInterpolator(knots, d2_values, extrapolate=False)
        self._d1 = self._d2.antiderivative(1)
        self._d0 = self._d2.antiderivative(2)

    @property
    def gamma0(self) -> float:
        return self.gamma_at_zero

    def gamma(self, s):
        s = np.asarray(s, dtype=float)
        return self.gamma_at_zero + self.dgamma_at_zero * s + self._d0(s)

    def dgamma(self, s):
        s = np.asarray(s, dtype=float)
        return self.dgamma_at_zero + self._d1(s)

    def d2gamma(self, s):
        return self._d2(np.asarray(s, dtype=float))

    def d2gamma_crossings(self, level: float) -> np.ndarray:
        roots = np.asarray(self._d2.solve(level, discontinuity=False, extrapolate=False))
        roots = roots[np.isfinite(roots) & (roots > 0.0) & (roots < 1.0)]
        return np.unique(roots)

    def breakpoints(self) -> np.ndarray:
        return self.knots.copy()


@dataclass
class PressurePair:
    """p̂_n, p̂_w plus a flag marking graph selections at s ∈ {0, 1}"""

    p_n: np.ndarray
    p_w: np.ndarray
    is_selection: np.ndarray

    def __iter__(self) -> Iterator[np.ndarray]:
        yield self.p_n
        yield self.p_w


def invert_increasing(f: Callable, df: Callable, target: np.ndarray,
                      lo: np.ndarray, hi: np.ndarray,
                      tol: float = ROOT_TOL, max_iter: int = 200) -> np.ndarray:
    """Vectorized safeguarded Newton/bisection for an increasing f on [lo, hi]"""
    a = np.array(lo, dtype=float, copy=True)
    b = np.array(hi, dtype=float, copy=True)
    x = 0.5 * (a + b)

    for _ in range(max_iter):
        fx = f(x) - target
        a = np.where(fx < 0, x, a)
        b = np.where(fx > 0, x, b)

        with np.errstate(divide="ignore", invalid="ignore"):
            newton = x - fx / df(x)
        inside = np.isfinite(newton) & (newton > a) & (newton < b)
        x_new = np.where(inside, newton, 0.5 * (a + b))
        x_new = np.where(fx == 0, x, x_new)

        if np.all(np.abs(x_new - x) <= tol):
            return x_new
        x = x_new

    return x


def cumulative_quadrature(integrand: Callable, s: np.ndarray, breakpoints: np.ndarray,
                          power: int = 1, tol: float = QUADRATURE_TOL) -> np.ndarray:
    """∫₀ˢ integrand for every entry of s, sharing work between sorted samples"""
    s = np.asarray(s, dtype=float)
    flat = s.ravel()
    order = np.argsort(flat)
    sorted_s = flat[order]

    def transformed(t):
        z = 1.0 - t ** power
        return float(integrand(np.array(z))) * power * t ** (power - 1)

    values = np.empty_like(sorted_s)
    total = 0.0
    previous = 0.0
    for k, upper in enumerate(sorted_s):
        if upper > previous:
            inner = breakpoints[(breakpoints > previous) & (breakpoints < upper)]
            if power == 1:
                piece, err = integrate.quad(
                    lambda z: float(integrand(np.array(z))), previous, upper,
                    points=inner if inner.size else None, limit=200, epsabs=tol * 1e-2, epsrel=1e-12,
                )
            else:
                t_hi = (1.0 - previous) ** (1.0 / power)
                t_lo = (1.0 - upper) ** (1.0 / power)
                t_points = (1.0 - inner) ** (1.0 / power)
                piece, err = integrate.quad(
                    transformed, t_lo, t_hi,
                    points=t_points if t_points.size else None, limit=200, epsabs=tol * 1e-2, epsrel=1e-12,
                )
            if err > tol:
                raise QuadratureError(f"Kirchhoff quadrature on [{previous}, {upper}] did not converge", err)
            total += piece
            previous = upper
        values[k] = total

    result = np.empty_like(flat)
    result[order] = values
    return result.reshape(s.shape)


def _check_saturation(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if np.any(~np.isfinite(s)) or np.any(s < 0.0) or np.any(s > 1.0):
        raise DomainError("saturation outside [0, 1]", (float(np.nanmin(s)), float(np.nanmax(s))))
    return s


def gamma_eval(model: CapillaryModel, s) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(γ, γ', γ'') at s; regularized models return the clamped γ_ε''"""
    s = _check_saturation(s)
    if model.diverges_at_one and np.any(s == 1.0):
        raise EndpointDivergenceError("γ'(1) and γ''(1) are infinite for this model")
    return model.gamma(s), model.dgamma(s), model.d2gamma(s)


def hat_pressures(model: CapillaryModel, s) -> PressurePair:
    """Phase pressures p̂_n = γ + (1-s)γ', p̂_w = γ - sγ'"""
    s = _check_saturation(s)
    at_one = s == 1.0
    if model.diverges_at_one and np.any(at_one):
        raise EndpointDivergenceError("p̂_w diverges at s = 1 for this model")

    gamma = model.gamma(s)
    dgamma = model.dgamma(s)
    return PressurePair(
        p_n=gamma + (1.0 - s) * dgamma,
        p_w=gamma - s * dgamma,
        is_selection=(s == 0.0) | at_one,
    )


def kirchhoff_eval(model: CapillaryModel, s) -> Tuple[np.ndarray, np.ndarray]:
    """(ξ(s), ψ(s)) with ξ = ∫√(z(1-z))γ'' and ψ = ∫z(1-z)γ''"""
    s = _check_saturation(s)
    return model.kirchhoff_xi(s), model.kirchhoff_psi(s)


def saturation_from_capillary(model: CapillaryModel, p) -> np.ndarray:
    """Extended saturation map S: 0 below γ'(0), (γ')⁻¹ inside, 1 above γ'(1)"""
    p = np.asarray(p, dtype=float)
    low, high = model.dgamma_range()

    s = np.zeros_like(p)
    inside = (p > low) & (p < high)
    if np.any(inside):
        s[inside] = np.clip(model.dgamma_inverse(p[inside]), 0.0, 1.0)
    s[p >= high] = 1.0
    return s


def build_capillary_model(kind: str, entry_pressure: float = 1.0, exponent: float = 3.0,
                          gamma0: float = 0.0, knots: Optional[Sequence[float]] = None,
                          d2_values: Optional[Sequence[float]] = None,
                          dgamma0: float = 1.0) -> CapillaryModel:
    """Factory used by the scenario loader"""
    if kind == CapillaryKind.BROOKS_COREY.value:
        return BrooksCoreyModel(entry_pressure=entry_pressure, exponent=exponent, gamma_at_zero=gamma0)
    if kind == CapillaryKind.TABULATED.value:
        if knots is None or d2_values is None:
            raise DomainError("tabulated model needs knots and γ'' values")
        return TabulatedModel(knots, d2_values, gamma_at_zero=gamma0, dgamma_at_zero=dgamma0)
    raise DomainError(f"unknown capillary model kind: {kind}")


def kirchhoff_lipschitz_excess(model: CapillaryModel, a, b, s, t) -> Tuple[float, float]:
    """Worst excess of |ξ(S(a)) - ξ(S(b))| over ½|a - b| and of |ψ(s) - ψ(t)| over ½|ξ(s) - ξ(t)|.

    Both compositions are ½-Lipschitz since √(s(1-s)) ≤ ½, so neither excess
    should rise above roundoff.
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    xi_a, _ = kirchhoff_eval(model, saturation_from_capillary(model, a))
    xi_b, _ = kirchhoff_eval(model, saturation_from_capillary(model, b))
    composed = np.max(np.abs(xi_a - xi_b) - 0.5 * np.abs(a - b))

    xi_s, psi_s = kirchhoff_eval(model, s)
    xi_t, psi_t = kirchhoff_eval(model, t)
    inverse = np.max(np.abs(psi_s - psi_t) - 0.5 * np.abs(xi_s - xi_t))
    return float(composed), float(inverse)
