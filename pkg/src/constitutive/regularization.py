# src/constitutive/regularization.py
from typing import Dict, List, Tuple

import numpy as np

from src.utils.errors import DomainError
from .capillary_models import CapillaryKind, CapillaryModel

MAX_EPS = 0.25

FREE = "free"
CLAMP_LOW = "low"
CLAMP_HIGH = "high"


class RegularizedModel(CapillaryModel):
    """ε-regularized capillary energy γ_ε.

    γ_ε'' = min(1/ε, max(ε, γ'')) with γ_ε'(0) = γ'(0) and γ_ε(0) = γ(0).
    [0, 1] is split at the clamp crossings of the base model; on each segment
    γ_ε'' is either a constant or the base γ'', so both antiderivatives are
    evaluated exactly from the base closed forms.
    """

    kind = CapillaryKind.REGULARIZED

    def __init__(self, base: CapillaryModel, eps: float):
        if isinstance(base, RegularizedModel):
            raise DomainError("cannot regularize an already regularized model")
        if not 0.0 < eps <= MAX_EPS:
            raise DomainError(f"eps must lie in (0, {MAX_EPS}], got {eps}")

        self.base = base
        self.eps = float(eps)

        crossings = np.concatenate([base.d2gamma_crossings(self.eps), base.d2gamma_crossings(1.0 / self.eps)])
        self._knots = np.unique(np.concatenate([[0.0], crossings, [1.0]]))
        self._segments = self._classify_segments()
        self._d1_at_knots, self._d0_at_knots = self._accumulate()

    def _classify_segments(self) -> List[Tuple[str, float]]:
        segments = []
        for lo, hi in zip(self._knots[:-1], self._knots[1:]):
            mid = float(self.base.d2gamma(np.array(0.5 * (lo + hi))))
            if mid < self.eps:
                segments.append((CLAMP_LOW, self.eps))
            elif mid > 1.0 / self.eps:
                segments.append((CLAMP_HIGH, 1.0 / self.eps))
            else:
                segments.append((FREE, float("nan")))
        return segments

    def _accumulate(self) -> Tuple[np.ndarray, np.ndarray]:
        base = self.base
        d1 = [float(base.dgamma(np.array(0.0)))]
        d0 = [float(base.gamma(np.array(0.0)))]

        for (mode, level), lo, hi in zip(self._segments, self._knots[:-1], self._knots[1:]):
            length = hi - lo
            if mode == FREE:
                g_lo, g_hi = base.gamma(np.array([lo, hi]))
                dg_lo, dg_hi = base.dgamma(np.array([lo, hi]))
                d0.append(d0[-1] + d1[-1] * length + (g_hi - g_lo - dg_lo * length))
                d1.append(d1[-1] + dg_hi - dg_lo)
            else:
                d0.append(d0[-1] + d1[-1] * length + 0.5 * level * length ** 2)
                d1.append(d1[-1] + level * length)

        return np.array(d1), np.array(d0)

    @property
    def gamma0(self) -> float:
        return self.base.gamma0

    @property
    def segments(self) -> List[Tuple[float, float, str]]:
        return [(lo, hi, mode) for (mode, _), lo, hi in zip(self._segments, self._knots[:-1], self._knots[1:])]

    def breakpoints(self) -> np.ndarray:
        return np.union1d(self._knots, self.base.breakpoints())

    def d2gamma_crossings(self, level: float) -> np.ndarray:
        raise DomainError("crossings of a regularized model are not needed")

    def _segment_index(self, s: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self._knots, s, side="right") - 1
        return np.clip(idx, 0, len(self._segments) - 1)

    def _evaluate(self, s, order: int) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        idx = self._segment_index(s)

        for k, (mode, level) in enumerate(self._segments):
            mask = idx == k
            if not np.any(mask):
                continue
            lo = self._knots[k]
            x = s[mask]
            dx = x - lo
            d1_lo = self._d1_at_knots[k]
            d0_lo = self._d0_at_knots[k]

            if mode == FREE:
                base = self.base
                if order == 2:
                    out[mask] = base.d2gamma(x)
                elif order == 1:
                    out[mask] = d1_lo + base.dgamma(x) - base.dgamma(np.array(lo))
                else:
                    dg_lo = base.dgamma(np.array(lo))
                    out[mask] = d0_lo + d1_lo * dx + (base.gamma(x) - base.gamma(np.array(lo)) - dg_lo * dx)
            else:
                if order == 2:
                    out[mask] = level
                elif order == 1:
                    out[mask] = d1_lo + level * dx
                else:
                    out[mask] = d0_lo + d1_lo * dx + 0.5 * level * dx ** 2

        return out

    def gamma(self, s):
        return self._evaluate(s, 0)

    def dgamma(self, s):
        return self._evaluate(s, 1)

    def d2gamma(self, s):
        return self._evaluate(s, 2)

    def dgamma_range(self) -> Tuple[float, float]:
        return float(self._d1_at_knots[0]), float(self._d1_at_knots[-1])

    def dgamma_inverse(self, p):
        """S_ε on the invertible range, segment by segment"""
        p = np.asarray(p, dtype=float)
        out = np.empty_like(p)
        idx = np.clip(np.searchsorted(self._d1_at_knots, p, side="right") - 1, 0, len(self._segments) - 1)

        for k, (mode, level) in enumerate(self._segments):
            mask = idx == k
            if not np.any(mask):
                continue
            lo, hi = self._knots[k], self._knots[k + 1]
            shift = p[mask] - self._d1_at_knots[k]
            if mode == FREE:
                target = shift + self.base.dgamma(np.array(lo))
                out[mask] = np.clip(self.base.dgamma_inverse(target), lo, hi)
            else:
                out[mask] = np.clip(lo + shift / level, lo, hi)

        return out


class RegularizedFamily:
    """γ_ε for several ε over one base model, built on first use"""

    def __init__(self, base: CapillaryModel):
        self.base = base
        self._models: Dict[float, RegularizedModel] = {}

    def at(self, eps: float) -> RegularizedModel:
        eps = float(eps)
        if eps not in self._models:
            self._models[eps] = RegularizedModel(self.base, eps)
        return self._models[eps]
