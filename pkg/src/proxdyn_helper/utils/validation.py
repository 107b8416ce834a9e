"""Error types and validation reports shared across proxdyn_helper."""

from dataclasses import dataclass, field

import numpy as np

from proxdyn_helper.utils.logging import logger

__all__ = [
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
    "require_square",
    "require_finite",
]


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of a semantic check: a flag plus one message per failed rule."""

    is_valid: bool
    violations: tuple[str, ...] = field(default_factory=tuple)

    @classmethod
    def from_violations(cls, violations: list[str]) -> "ValidationReport":
        return cls(is_valid=not violations, violations=tuple(violations))

    def __bool__(self) -> bool:
        return self.is_valid


class StructuralError(ValueError):
    """Input has the wrong shape or contains non-finite numbers."""


class GraphValidationError(ValueError):
    """A communication matrix failed one of the adjacency rules."""

    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__("; ".join(report.violations))


class UnsupportedConfigurationError(ValueError):
    """No closed-form proximal step exists for this cost; use the numerical oracle."""


class ConvergenceError(RuntimeError):
    """An inner numerical loop hit its iteration cap."""


class InvalidModeError(ValueError):
    """A switching mode has φ ≥ 1 or lacks a feasible weight certificate."""


class SignalError(ValueError):
    """A switching signal violates its dwell-time preconditions."""

    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__("; ".join(report.violations))


class InvalidStateError(ValueError):
    """A robot position lies inside an obstacle."""


class DegenerateConstraintError(ValueError):
    """Every obstacle-free sub-box is empty; `fallback` is the singleton set."""

    def __init__(self, message: str, fallback):
        self.fallback = fallback
        super().__init__(message)


class ConfigError(ValueError):
    """Malformed configuration document or out-of-range run override."""


class UnsupportedPlotError(ValueError):
    """Plots are only drawn for planar (n = 2) states."""


def require_square(matrix, name: str = "matrix") -> np.ndarray:
    """Return `matrix` as a finite square float array or raise StructuralError."""
    array = np.asarray(matrix, dtype=float)
    if array.ndim != 2 or array.shape[0] != array.shape[1] or array.shape[0] == 0:
        logger.error(f"{name} must be a non-empty square array, got shape {array.shape}")
        raise StructuralError(f"{name} must be a non-empty square array, got shape {array.shape}")
    return require_finite(array, name)


def require_finite(array, name: str = "array") -> np.ndarray:
    array = np.asarray(array, dtype=float)
    if not np.all(np.isfinite(array)):
        logger.error(f"{name} contains non-finite entries")
        raise StructuralError(f"{name} contains non-finite entries")
    return array
