# src/stepper/controls.py
from dataclasses import dataclass, field
from enum import Enum
from typing import Tuple

import numpy as np

from src.constitutive import PhaseContentPair, PorosityBounds, project_k_phi
from src.constitutive.regularization import MAX_EPS
from src.coupled import State
from src.utils.errors import StepPreconditionError
from src.utils.logging_config import get_logger

logger = get_logger(__name__)

DEFAULT_EPS_SCHEDULE: Tuple[float, ...] = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
CAP_WARNING_FRACTION = 0.8


class ConstraintResidual(str, Enum):
    MONOTONE = "monotone"
    VERBATIM = "verbatim"


@dataclass
class StepControls:
    h: float = 1e-2
    eps_schedule: Tuple[float, ...] = DEFAULT_EPS_SCHEDULE
    newton_tol: float = 1e-10
    newton_max: int = 40
    fp_tol: float = 1e-8
    fp_max: int = 60
    fp_relax: float = 1.0
    h_max: float = 1e-1
    heps2_max: float = 1e-3
    constraint_residual: ConstraintResidual = ConstraintResidual.MONOTONE
    armijo_c: float = 1e-4
    min_line_step: float = 2.0 ** -12

    def __post_init__(self):
        self.eps_schedule = tuple(float(e) for e in self.eps_schedule)
        self.constraint_residual = ConstraintResidual(self.constraint_residual)
        if not self.h > 0:
            raise StepPreconditionError(f"time step must be positive, got {self.h}")
        if not self.eps_schedule:
            raise StepPreconditionError("eps schedule is empty")
        if any(not 0.0 < e <= MAX_EPS for e in self.eps_schedule):
            raise StepPreconditionError(f"eps levels must lie in (0, {MAX_EPS}]")
        if any(b >= a for a, b in zip(self.eps_schedule, self.eps_schedule[1:])):
            raise StepPreconditionError("eps schedule must be strictly decreasing")
        if not 0.0 < self.fp_relax <= 1.0:
            raise StepPreconditionError(f"fixed-point relaxation must lie in (0, 1], got {self.fp_relax}")

    def check_caps(self, eps: float) -> None:
        """Enforce h ≤ h_max and h·ε² ≤ heps2_max, warning when a cap is nearly reached"""
        heps2 = self.h * eps * eps
        if self.h > self.h_max:
            raise StepPreconditionError(f"h={self.h:g} exceeds h_max={self.h_max:g}")
        if heps2 > self.heps2_max:
            raise StepPreconditionError(f"h*eps^2={heps2:g} exceeds heps2_max={self.heps2_max:g}")
        if self.h > CAP_WARNING_FRACTION * self.h_max or heps2 > CAP_WARNING_FRACTION * self.heps2_max:
            logger.warning("Step size close to its cap", h=self.h, eps=eps, heps2=heps2)


@dataclass
class FrozenData:
    """(φ̃, ũ): contents projected onto K_φ and the displacement the coefficients are frozen at"""

    contents: PhaseContentPair
    u: np.ndarray

    @property
    def phi(self) -> np.ndarray:
        return self.contents.phi

    @property
    def s_n(self) -> np.ndarray:
        phi = self.phi
        return np.divide(self.contents.phi_n, phi, out=np.zeros_like(phi), where=phi > 0)

    @property
    def s_w(self) -> np.ndarray:
        return 1.0 - self.s_n

    @classmethod
    def build(cls, phi_n: np.ndarray, phi_w: np.ndarray, u: np.ndarray,
              bounds: PorosityBounds) -> "FrozenData":
        projected = project_k_phi(PhaseContentPair(phi_n, phi_w), bounds)
        return cls(projected, np.array(u, dtype=float, copy=True))

    @classmethod
    def from_state(cls, state: State, bounds: PorosityBounds) -> "FrozenData":
        return cls.build(state.phi_n, state.phi_w, state.u, bounds)


@dataclass(frozen=True)
class UnknownLayout:
    """Y = [p_n° free | p_w° free | u free | θ cells | π cells]"""

    n_pressure: int
    n_displacement: int
    n_cells: int
    offsets: Tuple[int, ...] = field(init=False)

    def __post_init__(self):
        sizes = (self.n_pressure, self.n_pressure, self.n_displacement, self.n_cells, self.n_cells)
        object.__setattr__(self, "offsets", tuple(np.cumsum((0,) + sizes).tolist()))

    @property
    def size(self) -> int:
        return self.offsets[-1]

    def block(self, index: int) -> slice:
        return slice(self.offsets[index], self.offsets[index + 1])

    @property
    def p_n(self) -> slice:
        return self.block(0)

    @property
    def p_w(self) -> slice:
        return self.block(1)

    @property
    def u(self) -> slice:
        return self.block(2)

    @property
    def theta(self) -> slice:
        return self.block(3)

    @property
    def pi(self) -> slice:
        return self.block(4)

    def pack(self, p_n: np.ndarray, p_w: np.ndarray, u: np.ndarray,
             theta: np.ndarray, pi: np.ndarray) -> np.ndarray:
        return np.concatenate([p_n, p_w, u, theta, pi]).astype(float)
