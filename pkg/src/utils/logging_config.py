# src/utils/logging_config.py
"""
Structured logging: every record carries keyword context rendered as key=value.
"""
import logging
import logging.handlers
import os
import sys
import traceback
from pathlib import Path
from typing import Any, Dict, List, Optional

CONSOLE_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"
FILE_FORMAT = "%(asctime)s %(levelname)-7s %(name)s [%(funcName)s:%(lineno)d]: %(message)s"
LOG_FILE = "poromech.log"
LOG_FILE_BYTES = 10 * 1024 * 1024
LOG_FILE_BACKUPS = 5
PACKAGE_PREFIX = "src."


def _level(name: Optional[str]) -> int:
    return getattr(logging, (name or "INFO").upper(), logging.INFO)


class StructuredFormatter(logging.Formatter):
    """Appends the record's keyword context as ` | key=value ...`"""

    def format(self, record: logging.LogRecord) -> str:
        text = super().format(record)
        context: Dict[str, Any] = getattr(record, "context", None) or {}
        if context:
            text += " | " + " ".join(f"{key}={self.render(value)}" for key, value in context.items())
        return text

    @staticmethod
    def render(value: Any) -> str:
        if isinstance(value, float):
            return format(value, ".6g")
        if isinstance(value, (list, tuple)) and value and all(isinstance(v, float) for v in value):
            return "[" + ",".join(format(v, ".6g") for v in value) + "]"
        return str(value)


def _build_handlers() -> List[logging.Handler]:
    console = logging.StreamHandler(sys.stderr)
    console.setFormatter(StructuredFormatter(CONSOLE_FORMAT))
    handlers: List[logging.Handler] = [console]
    log_dir = os.getenv("LOG_DIR")
    if log_dir:
        directory = Path(log_dir)
        directory.mkdir(parents=True, exist_ok=True)
        rotating = logging.handlers.RotatingFileHandler(
            directory / LOG_FILE, maxBytes=LOG_FILE_BYTES, backupCount=LOG_FILE_BACKUPS, encoding="utf-8"
        )
        rotating.setFormatter(StructuredFormatter(FILE_FORMAT))
        handlers.append(rotating)
    return handlers


class StructuredLogger:
    """Keyword-context logger with solver helpers.

    `solver_trace` and `performance_metric` log at DEBUG, so iteration-level
    bookkeeping is silent at the default level.
    """

    def __init__(self, name: str, log_level: str = "INFO"):
        self.logger = logging.getLogger(name)
        self.logger.setLevel(_level(log_level))
        if not self.logger.handlers:
            for handler in _build_handlers():
                self.logger.addHandler(handler)
            self.logger.propagate = False

    def _emit(self, level: int, message: str, context: Dict[str, Any]) -> None:
        if self.logger.isEnabledFor(level):
            # stacklevel 3 attributes the record to the caller of the public method
            self.logger.log(level, message, extra={"context": context}, stacklevel=3)

    def debug(self, message: str, **context: Any) -> None:
        self._emit(logging.DEBUG, message, context)

    def info(self, message: str, **context: Any) -> None:
        self._emit(logging.INFO, message, context)

    def warning(self, message: str, **context: Any) -> None:
        self._emit(logging.WARNING, message, context)

    def error(self, message: str, error: Optional[BaseException] = None, **context: Any) -> None:
        """ERROR record; an exception adds its type and text, its traceback goes to DEBUG"""
        if error is not None:
            context = {"error_type": type(error).__name__, "error_message": str(error), **context}
            stack = "".join(traceback.format_exception(type(error), error, error.__traceback__))
            self._emit(logging.DEBUG, f"{message} (traceback)", {"traceback": stack})
        self._emit(logging.ERROR, message, context)

    def solver_trace(self, stage: str, **context: Any) -> None:
        """One iteration of a nonlinear solve: residual norms, step lengths"""
        self._emit(logging.DEBUG, f"TRACE: {stage}", {"stage": stage, **context})

    def performance_metric(self, operation: str, duration: float, **context: Any) -> None:
        self._emit(logging.DEBUG, f"PERF: {operation} took {duration:.3f}s",
                   {"operation": operation, "duration_seconds": duration, **context})


def get_logger(name: str, log_level: Optional[str] = None) -> StructuredLogger:
    return StructuredLogger(name, log_level or os.getenv("LOG_LEVEL", "INFO"))


def setup_global_logging(quiet: bool = False) -> None:
    """Apply LOG_LEVEL (WARNING with `quiet`) to every package logger created so far"""
    if quiet:
        os.environ["LOG_LEVEL"] = "WARNING"
    level = _level(os.getenv("LOG_LEVEL"))
    for name in list(logging.root.manager.loggerDict):
        if name.startswith(PACKAGE_PREFIX):
            logging.getLogger(name).setLevel(level)


class LoggerMixin:
    """Lazy `logger` named after the concrete class"""

    @property
    def logger(self) -> StructuredLogger:
        if getattr(self, "_logger", None) is None:
            self._logger = get_logger(f"{type(self).__module__}.{type(self).__name__}")
        return self._logger
