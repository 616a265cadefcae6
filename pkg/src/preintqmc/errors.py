"""Exception types shared across the package.

Numeric failures derive from :class:`NumericError` so callers (and the CLI)
can distinguish them from configuration mistakes, which derive from
:class:`ConfigError`.
"""

from __future__ import annotations

__all__ = [
    "NumericError",
    "ConfigError",
    "DomainError",
    "UnsupportedCombinationError",
    "EvaluationError",
    "RootRefinementError",
    "ConvexityError",
    "QuadratureError",
    "OrthogonalGradientError",
    "OutOfNeighborhoodError",
    "FactorizationError",
    "VectorParseError",
]


class NumericError(Exception):
    """An algorithm failed to produce a trustworthy numeric result."""


class ConfigError(ValueError):
    """Invalid user-supplied configuration or arguments."""


class DomainError(ConfigError):
    """Argument outside the mathematical domain of an operation."""


class UnsupportedCombinationError(ConfigError):
    """No closed form is available for the requested combination."""


class EvaluationError(NumericError):
    """A function evaluation produced NaN or another poisoned value."""


class RootRefinementError(NumericError):
    """A bracketed root failed to converge; carries the final bracket."""

    def __init__(self, message: str, bracket: tuple[float, float]):
        super().__init__(f"{message} (bracket [{bracket[0]!r}, {bracket[1]!r}])")
        self.bracket = bracket


class ConvexityError(NumericError):
    """The integrand is not convex along the requested axis."""


class QuadratureError(NumericError):
    """Adaptive quadrature did not reach tolerance; carries the estimate."""

    def __init__(self, message: str, estimate: float, achieved: float):
        super().__init__(f"{message} (estimate {estimate!r}, error bound {achieved!r})")
        self.estimate = estimate
        self.achieved = achieved


class OrthogonalGradientError(NumericError):
    """The probe direction is orthogonal to the gradient (zero denominator)."""


class OutOfNeighborhoodError(NumericError):
    """Level-point tracking left the neighborhood where it is guaranteed."""


class FactorizationError(NumericError):
    """Covariance factorization failed."""


class VectorParseError(ConfigError):
    """Malformed generating-vector file; carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line
