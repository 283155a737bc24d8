# src/stepper/__init__.py
"""
Time stepping

Components:
- controls: StepControls, frozen data (φ̃, ũ) and the unknown layout
- frozen_system: residual and Jacobian of the frozen step map
- newton_solver: damped Newton with chord fallback on the frozen map
- fixed_point: unfreezing iteration and ε continuation
- transient: the time loop with per-step diagnostics
- probe: sampled monotonicity of the frozen map
"""

from .controls import (
    DEFAULT_EPS_SCHEDULE,
    ConstraintResidual,
    FrozenData,
    StepControls,
    UnknownLayout,
)
from .frozen_system import FrozenSystem
from .newton_solver import NewtonResult, frozen_step_solve, newton_solve
from .fixed_point import (
    ContinuationResult,
    FixedPointResult,
    LevelRecord,
    eps_continuation,
    fixed_point_step,
)
from .transient import StepReport, Trajectory, run_transient
from .probe import MonotonicityReport, build_frozen_system, monotonicity_probe

__all__ = [
    'DEFAULT_EPS_SCHEDULE', 'ConstraintResidual', 'FrozenData', 'StepControls', 'UnknownLayout',
    'FrozenSystem', 'NewtonResult', 'frozen_step_solve', 'newton_solve', 'ContinuationResult',
    'FixedPointResult', 'LevelRecord', 'eps_continuation', 'fixed_point_step', 'StepReport',
    'Trajectory', 'run_transient', 'MonotonicityReport', 'build_frozen_system', 'monotonicity_probe',
]
