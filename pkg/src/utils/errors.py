# src/utils/errors.py
from typing import Any, Dict, List, Optional


class PoromechError(Exception):
    """Base class for every error raised by the simulator"""


class DomainError(PoromechError, ValueError):
    """Argument outside the domain of a constitutive law"""

    def __init__(self, message: str, value_range: Optional[tuple] = None):
        super().__init__(message)
        self.value_range = value_range


class EndpointDivergenceError(DomainError):
    """Derivative requested at an endpoint where the model diverges"""


class QuadratureError(PoromechError, RuntimeError):
    def __init__(self, message: str, achieved_error: float):
        super().__init__(f"{message} (estimated error {achieved_error:.3e})")
        self.achieved_error = achieved_error


class MeshError(PoromechError, ValueError):
    pass


class SpaceMismatchError(PoromechError, ValueError):
    pass


class LinearSolveError(PoromechError, RuntimeError):
    def __init__(self, message: str, achieved_residual: float):
        super().__init__(f"{message} (relative residual {achieved_residual:.3e})")
        self.achieved_residual = achieved_residual


class NewtonConvergenceError(PoromechError, RuntimeError):
    def __init__(self, message: str, best_residual: float, trace: List[Dict[str, Any]]):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual
        self.trace = trace


class FixedPointConvergenceError(PoromechError, RuntimeError):
    def __init__(self, message: str, change_history: List[float]):
        super().__init__(message)
        self.change_history = change_history


class ContinuationError(PoromechError, RuntimeError):
    """A level of the eps schedule failed; carries the last good level"""

    def __init__(self, message: str, last_level: Optional[float], last_state: Any, cause: Exception):
        super().__init__(message)
        self.last_level = last_level
        self.last_state = last_state
        self.cause = cause


class StepPreconditionError(PoromechError, ValueError):
    pass


class EpsMismatchError(PoromechError, ValueError):
    pass


class TransientRunError(PoromechError, RuntimeError):
    def __init__(self, message: str, trajectory: Any, cause: Exception):
        super().__init__(message)
        self.trajectory = trajectory
        self.cause = cause


class ConfigParseError(PoromechError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line


class ConfigValidationError(PoromechError, ValueError):
    def __init__(self, issues: List[Dict[str, str]]):
        lines = [f"{issue['label']} {issue['message']}" for issue in issues]
        super().__init__("configuration violates assumptions:\n  " + "\n  ".join(lines))
        self.issues = issues
