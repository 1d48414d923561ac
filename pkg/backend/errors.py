# backend/errors.py
"""
Exception types raised across the backend.

Everything derives from TopologyError so the CLI can map failures to exit
codes in one place. Value-type problems also subclass ValueError and
numerical failures subclass RuntimeError, so callers that only know the
builtin hierarchy still catch them.
"""

from typing import Optional


class TopologyError(Exception):
    """Base class for all backend errors."""


class InvalidFieldError(TopologyError, ValueError):
    """A Gaussian field with non-positive scales."""


class ShapeError(TopologyError, ValueError):
    """Array length or node count does not match what the caller declared."""


class ProjectionError(TopologyError, ValueError):
    """Invalid projection parameters or an undefined Heaviside derivative."""


class DefinitionError(TopologyError, ValueError):
    """Problem definition is inconsistent with its mesh or with itself."""


class ConfigError(TopologyError, ValueError):
    """Run configuration could not be parsed or validated."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SingularSystemError(TopologyError, RuntimeError):
    """Stiffness system cannot be solved (rigid-body modes or void design)."""

    def __init__(self, message: str, null_dim: int = 0):
        self.null_dim = null_dim
        super().__init__(message)


class StateError(TopologyError, RuntimeError):
    """An analysis result was requested before it was computed."""


class OptimizationError(TopologyError, RuntimeError):
    """Numerical failure inside the optimization loop."""

    def __init__(self, message: str, iteration: int):
        self.iteration = iteration
        super().__init__(f"iteration {iteration}: {message}")


class ContourError(TopologyError, ValueError):
    """Contour too short or degenerate for curvature estimation."""
