# src/utils/__init__.py
from .logging_config import get_logger, setup_global_logging, LoggerMixin, StructuredLogger
from .errors import (
    PoromechError,
    DomainError,
    EndpointDivergenceError,
    QuadratureError,
    MeshError,
    SpaceMismatchError,
    LinearSolveError,
    NewtonConvergenceError,
    FixedPointConvergenceError,
    ContinuationError,
    StepPreconditionError,
    EpsMismatchError,
    TransientRunError,
    ConfigParseError,
    ConfigValidationError,
)

__all__ = [
    'get_logger', 'setup_global_logging', 'LoggerMixin', 'StructuredLogger',
    'PoromechError', 'DomainError', 'EndpointDivergenceError', 'QuadratureError',
    'MeshError', 'SpaceMismatchError', 'LinearSolveError', 'NewtonConvergenceError',
    'FixedPointConvergenceError', 'ContinuationError', 'StepPreconditionError',
    'EpsMismatchError', 'TransientRunError', 'ConfigParseError', 'ConfigValidationError',
]
