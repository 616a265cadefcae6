"""Integrand abstraction and closed-form analytic examples.

An :class:`Integrand` bundles a smooth scalar field ``phi`` on R^d with its
per-axis first and second derivatives and its gradient.  Axes are numbered
from 1.  Full Hessians are never needed, so they are never formed; this keeps
high-dimensional models cheap.

The four two-dimensional examples (parabola, hyperbola, cross, cubic) have
known preintegrals along axis 1 (axis 2 as well for the parabola), exposed
through :func:`oracle_preintegral` and :func:`oracle_kink_preintegral`.
They serve as exact references for the numeric preintegration machinery.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import UnsupportedCombinationError
from .normals import cdf, pdf

__all__ = [
    "Integrand",
    "Flavor",
    "IndicatorSpec",
    "ExampleId",
    "example_integrand",
    "oracle_preintegral",
    "oracle_kink_preintegral",
]


@dataclass(frozen=True)
class Integrand:
    """A scalar field with per-axis derivatives.

    Attributes
    ----------
    dim : int
        Number of coordinates d.
    eval : callable
        ``y -> phi(y)`` for ``y`` of shape ``(d,)``.
    d1, d2 : callable
        ``(j, y) -> d phi / d y_j`` and ``(j, y) -> d^2 phi / d y_j^2``
        with the axis ``j`` in ``1..d``.
    grad : callable
        ``y -> grad phi(y)`` of shape ``(d,)``.
    eval_axis, d1_axis : callable, optional
        Vectorized restrictions to a line: ``(j, y_rest, x) -> values`` where
        ``y_rest`` holds the other d-1 coordinates in order and ``x`` is an
        array of axis-j values.  When absent, a scalar loop is used.
    """

    dim: int
    eval: Callable[[np.ndarray], float]
    d1: Callable[[int, np.ndarray], float]
    d2: Callable[[int, np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    eval_axis: Callable[[int, np.ndarray, np.ndarray], np.ndarray] | None = None
    d1_axis: Callable[[int, np.ndarray, np.ndarray], np.ndarray] | None = None

    def embed(self, j: int, y_rest: np.ndarray, x: float) -> np.ndarray:
        """Assemble the full point with value ``x`` in coordinate ``j``."""
        y = np.empty(self.dim)
        y[: j - 1] = y_rest[: j - 1]
        y[j - 1] = x
        y[j:] = y_rest[j - 1 :]
        return y

    def values_along(self, j: int, y_rest: np.ndarray, x: np.ndarray) -> np.ndarray:
        if self.eval_axis is not None:
            return np.asarray(self.eval_axis(j, y_rest, x), dtype=float)
        return np.array([self.eval(self.embed(j, y_rest, v)) for v in x], dtype=float)

    def d1_along(self, j: int, y_rest: np.ndarray, x: np.ndarray) -> np.ndarray:
        if self.d1_axis is not None:
            return np.asarray(self.d1_axis(j, y_rest, x), dtype=float)
        return np.array([self.d1(j, self.embed(j, y_rest, v)) for v in x], dtype=float)


class Flavor(Enum):
    """Discontinuity flavor of the indicator-type integrand."""

    JUMP = "jump"
    KINK = "kink"


@dataclass(frozen=True)
class IndicatorSpec:
    """``ind(phi(y) - t)`` for JUMP, ``max(phi(y) - t, 0)`` for KINK."""

    base: Integrand
    threshold: float
    flavor: Flavor = Flavor.JUMP


class ExampleId(Enum):
    PARABOLA = "parabola"
    HYPERBOLA = "hyperbola"
    CROSS = "cross"
    CUBIC = "cubic"


def _parabola() -> Integrand:
    # phi = y2 - y1^2
    return Integrand(
        dim=2,
        eval=lambda y: y[1] - y[0] * y[0],
        d1=lambda j, y: -2.0 * y[0] if j == 1 else 1.0,
        d2=lambda j, y: -2.0 if j == 1 else 0.0,
        grad=lambda y: np.array([-2.0 * y[0], 1.0]),
        eval_axis=lambda j, rest, x: (rest[0] - x * x) if j == 1 else (x - rest[0] ** 2),
        d1_axis=lambda j, rest, x: -2.0 * x if j == 1 else np.ones_like(x),
    )


def _hyperbola() -> Integrand:
    # phi = y2^2 - y1^2 - 1
    return Integrand(
        dim=2,
        eval=lambda y: y[1] * y[1] - y[0] * y[0] - 1.0,
        d1=lambda j, y: -2.0 * y[0] if j == 1 else 2.0 * y[1],
        d2=lambda j, y: -2.0 if j == 1 else 2.0,
        grad=lambda y: np.array([-2.0 * y[0], 2.0 * y[1]]),
        eval_axis=lambda j, rest, x: (rest[0] ** 2 - x * x - 1.0)
        if j == 1
        else (x * x - rest[0] ** 2 - 1.0),
        d1_axis=lambda j, rest, x: -2.0 * x if j == 1 else 2.0 * x,
    )


def _cross() -> Integrand:
    # phi = y2^2 - y1^2
    return Integrand(
        dim=2,
        eval=lambda y: y[1] * y[1] - y[0] * y[0],
        d1=lambda j, y: -2.0 * y[0] if j == 1 else 2.0 * y[1],
        d2=lambda j, y: -2.0 if j == 1 else 2.0,
        grad=lambda y: np.array([-2.0 * y[0], 2.0 * y[1]]),
        eval_axis=lambda j, rest, x: (rest[0] ** 2 - x * x) if j == 1 else (x * x - rest[0] ** 2),
        d1_axis=lambda j, rest, x: -2.0 * x if j == 1 else 2.0 * x,
    )


def _cubic() -> Integrand:
    # phi = y1^3 - y2
    return Integrand(
        dim=2,
        eval=lambda y: y[0] ** 3 - y[1],
        d1=lambda j, y: 3.0 * y[0] * y[0] if j == 1 else -1.0,
        d2=lambda j, y: 6.0 * y[0] if j == 1 else 0.0,
        grad=lambda y: np.array([3.0 * y[0] * y[0], -1.0]),
        eval_axis=lambda j, rest, x: (x**3 - rest[0]) if j == 1 else (rest[0] ** 3 - x),
        d1_axis=lambda j, rest, x: 3.0 * x * x if j == 1 else -np.ones_like(x),
    )


_FACTORIES = {
    ExampleId.PARABOLA: _parabola,
    ExampleId.HYPERBOLA: _hyperbola,
    ExampleId.CROSS: _cross,
    ExampleId.CUBIC: _cubic,
}


def example_integrand(example: ExampleId) -> Integrand:
    """Exact integrand with analytic derivatives for one of the examples."""
    return _FACTORIES[example]()


def _symmetric_mass(c: float) -> float:
    """Normal mass of (-sqrt(c), sqrt(c)); zero when the interval is empty."""
    if c <= 0.0:
        return 0.0
    s = np.sqrt(c)
    return cdf(s) - cdf(-s)


def oracle_preintegral(example: ExampleId, j: int, t: float, coord: float) -> float:
    """Closed-form preintegral of ``ind(phi - t)`` along axis ``j``.

    ``coord`` is the remaining coordinate (y2 for j=1, y1 for j=2).  Supported
    combinations: every example with j=1, and the parabola with j=2.

    Regions, with Phi the normal CDF:

    * parabola, j=1: positivity set |y1| < sqrt(coord - t), so the value is
      Phi(sqrt(c)) - Phi(-sqrt(c)) with c = coord - t, and 0 for c <= 0.
    * parabola, j=2: positivity set y2 > coord^2 + t, value 1 - Phi(coord^2 + t).
    * hyperbola, j=1: same symmetric form with c = coord^2 - 1 - t.
    * cross, j=1: same symmetric form with c = coord^2 - t.
    * cubic, j=1: positivity set y1 > cbrt(coord + t), value
      1 - Phi(cbrt(coord + t)) with the real (signed) cube root.
    """
    if j == 1:
        if example is ExampleId.PARABOLA:
            return _symmetric_mass(coord - t)
        if example is ExampleId.HYPERBOLA:
            return _symmetric_mass(coord * coord - 1.0 - t)
        if example is ExampleId.CROSS:
            return _symmetric_mass(coord * coord - t)
        if example is ExampleId.CUBIC:
            return 1.0 - cdf(float(np.cbrt(coord + t)))
    if j == 2 and example is ExampleId.PARABOLA:
        return 1.0 - cdf(coord * coord + t)
    raise UnsupportedCombinationError(
        f"no closed-form preintegral for {example.value} along axis {j}"
    )


def oracle_kink_preintegral(example: ExampleId, j: int, t: float, coord: float) -> float:
    """Closed-form preintegral of ``max(phi - t, 0)`` (parabola, axis 1 only).

    With c = coord - t > 0 the integral over (-sqrt(c), sqrt(c)) of
    (c - y1^2) rho(y1) integrates by parts to

        (c - 1) * (Phi(sqrt(c)) - Phi(-sqrt(c))) + 2 sqrt(c) rho(sqrt(c))

    and is 0 for c <= 0.  Leading behavior for small c is (4/3) c^{3/2} rho(0).
    """
    if example is not ExampleId.PARABOLA or j != 1:
        raise UnsupportedCombinationError(
            f"no closed-form kink preintegral for {example.value} along axis {j}"
        )
    c = coord - t
    if c <= 0.0:
        return 0.0
    s = float(np.sqrt(c))
    return (c - 1.0) * (cdf(s) - cdf(-s)) + 2.0 * s * pdf(s)
