"""
Structured logging for gdefinetti.

Three console formats are available: ``plain`` lines, ``colored`` output
through Rich, and one JSON object per line. Records carry the seed, the
verification suite and the current operation from context variables, and
``PerformanceLogger`` adds durations and Monte-Carlo throughput.

Everything goes to stderr; stdout belongs to the reports, which must stay
byte-identical between runs with the same seed.
"""

import json
import logging
import os
import time
from contextvars import ContextVar
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, Optional, Union

from rich.console import Console
from rich.logging import RichHandler

if TYPE_CHECKING:
    from ..core.config import GdfConfig

LOGGER_NAMESPACE = "gdefinetti"

seed_var: ContextVar[Optional[int]] = ContextVar('seed', default=None)
suite_var: ContextVar[Optional[str]] = ContextVar('suite', default=None)
operation_var: ContextVar[Optional[str]] = ContextVar('operation', default=None)

_CONTEXT_VARS = (("seed", seed_var), ("suite", suite_var), ("operation", operation_var))

# Attributes every LogRecord has; anything else arrived through ``extra=``.
_RESERVED_RECORD_KEYS = frozenset(
    logging.LogRecord('probe', 0, 'probe', 0, 'probe', (), None).__dict__
) | {"message", "asctime"}

# Extras rendered in the bracketed suffix of text formats
_TIMING_KEYS = ("duration_ms", "samples_per_s")


class LogFormat(Enum):
    """Supported log output formats."""
    COLORED = "colored"
    JSON = "json"
    PLAIN = "plain"


def current_context() -> Dict[str, Any]:
    """Context variables that are currently set."""
    return {key: var.get() for key, var in _CONTEXT_VARS if var.get() is not None}


class StructuredFormatter(logging.Formatter):
    """
    Render a record as JSON, as a plain line, or as the message part of a
    Rich console line.

    Fields passed with ``extra=`` end up under ``extra`` in JSON output;
    ``duration_ms`` and ``samples_per_s`` are promoted to top level.
    """

    def __init__(self, format_type: LogFormat = LogFormat.PLAIN, include_context: bool = True):
        super().__init__()
        self.format_type = format_type
        self.include_context = include_context

    def format(self, record: logging.LogRecord) -> str:
        payload = self._payload(record)
        if self.format_type is LogFormat.JSON:
            return json.dumps(payload, default=str)
        suffix = self._suffix(payload)
        if self.format_type is LogFormat.COLORED:
            # Rich prints time and level itself
            return f"{payload['message']}{suffix}"
        return f"[{payload['timestamp']}] {payload['level']:8s} {payload['message']}{suffix}"

    def _payload(self, record: logging.LogRecord) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            'timestamp': datetime.fromtimestamp(record.created, tz=timezone.utc).isoformat(),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'function': record.funcName,
            'line': record.lineno,
        }
        if record.exc_info and record.exc_info[0] is not None:
            payload['exception'] = {
                'type': record.exc_info[0].__name__,
                'message': str(record.exc_info[1]),
                'traceback': self.formatException(record.exc_info),
            }

        extra = {k: v for k, v in record.__dict__.items() if k not in _RESERVED_RECORD_KEYS}
        for key in _TIMING_KEYS:
            if key in extra:
                payload[key] = extra.pop(key)
        if extra:
            payload['extra'] = extra

        if self.include_context:
            payload.update(current_context())
        return payload

    @staticmethod
    def _suffix(payload: Dict[str, Any]) -> str:
        parts = [f"{key}={payload[key]}" for key in ("seed", "suite", "operation") if key in payload]
        if 'duration_ms' in payload:
            parts.append(f"{payload['duration_ms']:.1f}ms")
        if 'samples_per_s' in payload:
            parts.append(f"{payload['samples_per_s']:.3g} samples/s")
        return f" [{' '.join(parts)}]" if parts else ""


class PerformanceLogger:
    """
    Time a computation and log the result when the block exits.

    With ``samples`` set, the throughput of a Monte-Carlo run is logged as
    well. The operation name is placed in the logging context for the
    duration of the block.

    Usage:
        with PerformanceLogger("operator_matrix_P_eta", logger, samples=10**6):
            pair = operator_matrix_P_eta(n, K, eta, 10**6)
    """

    def __init__(self, operation: str, logger: logging.Logger, level: int = logging.INFO,
                 samples: Optional[int] = None):
        self.operation = operation
        self.logger = logger
        self.level = level
        self.samples = samples
        self.duration_ms: Optional[float] = None
        self._start: Optional[float] = None
        self._token = None

    def __enter__(self) -> "PerformanceLogger":
        self._token = operation_var.set(self.operation)
        self._start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        elapsed = time.perf_counter() - (self._start or time.perf_counter())
        self.duration_ms = elapsed * 1000.0
        extra: Dict[str, Any] = {'duration_ms': self.duration_ms}
        if self.samples and elapsed > 0:
            extra['samples_per_s'] = self.samples / elapsed
        status = "failed" if exc_type is not None else "completed"
        self.logger.log(self.level, f"{self.operation} {status}", extra=extra)
        if self._token is not None:
            operation_var.reset(self._token)
            self._token = None


def _console_handler(format_type: LogFormat, include_context: bool) -> logging.Handler:
    if format_type is LogFormat.COLORED:
        handler: logging.Handler = RichHandler(
            console=Console(stderr=True),
            show_path=False,
            markup=False,
            rich_tracebacks=False,
        )
    else:
        handler = logging.StreamHandler()  # stderr
    handler.setFormatter(StructuredFormatter(format_type, include_context))
    return handler


def setup_logging(
    level: Union[int, str] = logging.WARNING,
    format_type: Union[LogFormat, str] = LogFormat.PLAIN,
    log_file: Optional[Union[str, Path]] = None,
    include_context: bool = True,
    json_logs: bool = False,
) -> logging.Logger:
    """
    Configure the ``gdefinetti`` logger, replacing earlier handlers.

    Args:
        level: Level name such as ``"INFO"`` or a logging constant.
        format_type: Console format.
        log_file: Optional file that receives JSON lines as well.
        include_context: Attach seed, suite and operation to every record.
        json_logs: Force JSON on the console.

    Returns:
        The namespace logger.
    """
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.WARNING
    if isinstance(format_type, str):
        format_type = LogFormat(format_type.lower())
    if json_logs:
        format_type = LogFormat.JSON

    logger = logging.getLogger(LOGGER_NAMESPACE)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    logger.propagate = False
    logger.setLevel(level)
    logger.addHandler(_console_handler(format_type, include_context))

    if log_file:
        path = Path(log_file)
        path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(path, encoding="utf-8")
        file_handler.setFormatter(StructuredFormatter(LogFormat.JSON, include_context))
        logger.addHandler(file_handler)

    return logger


def setup_logging_from_env(settings: Optional["GdfConfig"] = None) -> logging.Logger:
    """
    Set up logging from the configuration and the environment.

    Level and format come from ``settings`` (runtime value, ``GDF_LOG_LEVEL``
    and ``GDF_LOG_FORMAT``, the YAML file, then defaults). ``GDF_LOG_FILE``
    adds a JSON file handler and ``GDF_JSON_LOGS=true`` forces JSON output.
    """
    if settings is None:
        from ..core.config import config as settings

    return setup_logging(
        level=settings.get_log_level(),
        format_type=settings.get("log_format"),
        log_file=os.getenv("GDF_LOG_FILE") or None,
        json_logs=os.getenv("GDF_JSON_LOGS", "false").lower() in ("1", "true", "yes"),
    )


def get_logger(name: str = LOGGER_NAMESPACE) -> logging.Logger:
    """Logger below the ``gdefinetti`` namespace; ``name`` is usually ``__name__``."""
    if name != LOGGER_NAMESPACE and not name.startswith(LOGGER_NAMESPACE + "."):
        name = f"{LOGGER_NAMESPACE}.{name}"
    return logging.getLogger(name)


def set_context(
    seed: Optional[int] = None,
    suite: Optional[str] = None,
    operation: Optional[str] = None,
) -> None:
    """Set the logging context; arguments left as ``None`` keep their value."""
    if seed is not None:
        seed_var.set(seed)
    if suite is not None:
        suite_var.set(suite)
    if operation is not None:
        operation_var.set(operation)


def clear_context() -> None:
    for _, var in _CONTEXT_VARS:
        var.set(None)
