"""Shared logger for the solvers, simulators and CLI of proxdyn_helper."""

import logging
import sys

LOGGER_NAME = "proxdyn_helper"
LOG_LEVEL_NAMES = ["CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG", "NOTSET"]

_logger = logging.getLogger(LOGGER_NAME)

_DEFAULT_FORMAT = "%(asctime)s %(levelname)s %(name)s - %(message)s"

_configured = False

def level_from_name(name: str) -> int | None:
    """Map a level name such as ``"debug"`` to its numeric value.

    Returns None for names the logging module does not know.
    """
    if sys.version_info >= (3, 11):
        return logging.getLevelNamesMapping().get(name.upper())
    # getLevelName returns a string for unknown names on older interpreters
    level = logging.getLevelName(name.upper())
    return level if isinstance(level, int) else None

def configure_logging(level: int | None = logging.INFO, *, propagate: bool = False, force: bool = False,
                      fmt: str = _DEFAULT_FORMAT, stream=None) -> logging.Logger:
    """Configure and return the package logger.

    The first call attaches a stream handler; later calls only change the
    level unless `force` is set, in which case handlers are rebuilt.

    Args:
        level: Logging level; None falls back to INFO.
        propagate: Forward records to the root logger (pytest's caplog needs this).
        force: Drop existing handlers and reconfigure.
        fmt: Format string for the handler.
        stream: Handler stream, `sys.stderr` when None.

    Returns:
        The shared logger.
    """
    global _configured
    if level is None:
        level = logging.INFO
    if _configured and not force:
        _logger.setLevel(level)
        _logger.propagate = propagate or _logger.propagate
        return _logger
    if force and _logger.handlers:
        _logger.handlers.clear()
    handler = logging.StreamHandler(stream)
    handler.setFormatter(logging.Formatter(fmt))
    _logger.addHandler(handler)
    _logger.setLevel(level)
    _logger.propagate = propagate
    _configured = True
    return _logger

logger = _logger

__all__ = ["logger", "configure_logging", "level_from_name", "LOGGER_NAME", "LOG_LEVEL_NAMES"]
