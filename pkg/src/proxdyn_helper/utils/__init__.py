"""Utility functions for proxdyn_helper."""

from .logging import configure_logging, level_from_name, logger, LOGGER_NAME
from .validation import (
    ConfigError,
    ConvergenceError,
    DegenerateConstraintError,
    GraphValidationError,
    InvalidModeError,
    InvalidStateError,
    SignalError,
    StructuralError,
    UnsupportedConfigurationError,
    UnsupportedPlotError,
    ValidationReport,
)

__all__ = [
    "configure_logging",
    "level_from_name",
    "logger",
    "LOGGER_NAME",
    "ValidationReport",
    "StructuralError",
    "GraphValidationError",
    "UnsupportedConfigurationError",
    "ConvergenceError",
    "InvalidModeError",
    "SignalError",
    "InvalidStateError",
    "DegenerateConstraintError",
    "ConfigError",
    "UnsupportedPlotError",
]
