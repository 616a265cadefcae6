"""Detection and measurement of preintegration-induced singularities.

A critical point of ``phi`` along the preintegration axis (vanishing first
derivative, nonvanishing curvature and gradient) makes the preintegrated
function behave like ``C * sqrt(s - s*)`` near the matching level.  This
module checks those conditions at a candidate point, predicts the square-root
coefficient, tracks the singular point across nearby levels, and estimates
exponent and amplitude empirically from one-sided log-log fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .errors import OrthogonalGradientError, OutOfNeighborhoodError
from .integrands import Integrand
from .normals import pdf

__all__ = [
    "Side",
    "CriticalPoint",
    "SingularityReport",
    "SingularityProbe",
    "check_sqrt_conditions",
    "zeta_second_derivative",
    "sqrt_prediction",
    "directional_sqrt_prediction",
    "find_level_point",
    "estimate_exponent",
    "probe_singularity",
    "default_h_grid",
]

# Condition thresholds for analytic derivatives; the psi gradient comes from
# central differences of d1, which loosens its effective accuracy to ~1e-6.
_COND_TOL = 1e-8
_FD_STEP = 1e-5
_NEIGHBORHOOD_RADIUS = 1.0


class Side(Enum):
    RIGHT = "right"
    LEFT = "left"
    BOTH = "both"


@dataclass(frozen=True, eq=False)
class CriticalPoint:
    """Condition checks for a square-root singularity candidate."""

    y_star: np.ndarray
    axis: int
    t_star: float
    d1_zero: bool
    d2_nonzero: bool
    grad_nonzero: bool
    grad_dpsi_nonzero: bool
    not_parallel: bool

    @property
    def sqrt_conditions(self) -> bool:
        """The three conditions creating a square-root singularity."""
        return self.d1_zero and self.d2_nonzero and self.grad_nonzero

    @property
    def tracking_conditions(self) -> bool:
        """Extra conditions under which the singular point moves smoothly with the level."""
        return self.sqrt_conditions and self.grad_dpsi_nonzero and self.not_parallel


@dataclass(frozen=True)
class SingularityReport:
    """One-sided power-law fit ``|g(x0 + sigma h) - g(x0)| ~ amplitude * h^exponent``."""

    location: float
    exponent: float
    amplitude: float
    side: Side
    fit_points: tuple[tuple[float, float], ...]
    residual: float

    @property
    def flat(self) -> bool:
        return math.isinf(self.exponent)


@dataclass(frozen=True)
class SingularityProbe:
    """Two-sided classification of a probe location."""

    is_singular: bool
    left: SingularityReport
    right: SingularityReport


def _psi_gradient(phi: Integrand, j: int, y: np.ndarray, h: float = _FD_STEP) -> np.ndarray:
    """Gradient of psi = d phi / d y_j by central differences of d1."""
    g = np.empty(phi.dim)
    for k in range(phi.dim):
        yp = y.copy()
        ym = y.copy()
        yp[k] += h
        ym[k] -= h
        g[k] = (phi.d1(j, yp) - phi.d1(j, ym)) / (2.0 * h)
    return g


def check_sqrt_conditions(phi: Integrand, y_star: Sequence[float], j: int) -> CriticalPoint:
    """Evaluate the singularity conditions at a candidate critical point.

    Failures are reported through the boolean fields, never raised: a point
    violating a condition is a legitimate answer (no square-root behavior is
    predicted there).
    """
    y = np.asarray(y_star, dtype=float)
    d1v = phi.d1(j, y)
    d2v = phi.d2(j, y)
    grad = np.asarray(phi.grad(y), dtype=float)
    gpsi = _psi_gradient(phi, j, y)

    ngrad = float(np.linalg.norm(grad))
    ngpsi = float(np.linalg.norm(gpsi))
    if ngrad > _COND_TOL and ngpsi > _COND_TOL:
        cosang = float(grad @ gpsi) / (ngrad * ngpsi)
        sinang = math.sqrt(max(0.0, 1.0 - min(1.0, cosang * cosang)))
        not_parallel = sinang > _COND_TOL
    else:
        not_parallel = False

    return CriticalPoint(
        y_star=y,
        axis=j,
        t_star=float(phi.eval(y)),
        d1_zero=abs(d1v) <= _COND_TOL,
        d2_nonzero=abs(d2v) > _COND_TOL,
        grad_nonzero=ngrad > _COND_TOL,
        grad_dpsi_nonzero=ngpsi > _COND_TOL,
        not_parallel=not_parallel,
    )


def zeta_second_derivative(phi: Integrand, y_star: Sequence[float], j: int = 1) -> float:
    """Curvature of the level curve seen from the probe coordinate (2-D slice).

    Parameterizing the level set near the critical point as a function
    ``zeta`` of the axis coordinate gives
    ``zeta'' = -(d^2 phi / d y_j^2) / (d phi / d y_probe)`` with the probe
    fixed to the second coordinate.  A vanishing denominator means the
    gradient is orthogonal to the probe direction.
    """
    if j != 1 or phi.dim != 2:
        raise ValueError("zeta_second_derivative uses the 2-D slice with axis 1")
    y = np.asarray(y_star, dtype=float)
    den = phi.d1(2, y)
    if abs(den) <= _COND_TOL:
        raise OrthogonalGradientError(f"probe-direction derivative {den!r} vanishes at {y!r}")
    return -phi.d2(1, y) / den


def sqrt_prediction(phi: Integrand, y_star: Sequence[float]) -> tuple[float, float, float]:
    """Predicted (zeta'', c, amplitude) with c = sqrt(2/zeta'') and amplitude 2 c rho(y1*)."""
    y = np.asarray(y_star, dtype=float)
    zeta2 = zeta_second_derivative(phi, y, 1)
    if zeta2 <= 0.0:
        raise OrthogonalGradientError(f"level-curve curvature {zeta2!r} is not positive")
    c = math.sqrt(2.0 / zeta2)
    return zeta2, c, 2.0 * c * pdf(float(y[0]))


def directional_sqrt_prediction(
    phi: Integrand, y_star: Sequence[float], j: int, direction: Sequence[float]
) -> tuple[float, Side]:
    """Predicted amplitude and singular side along a probe line in the other coordinates.

    The probe line is ``y_rest(s) = y_rest* + s * u`` for a unit vector ``u``.
    The amplitude generalizes the 2-D slice value to
    ``2 * sqrt(2 |g| / |d2|) * rho(y_j*)`` with ``g`` the directional
    derivative of ``phi`` along ``u`` in the non-axis coordinates; the
    singular side is where the local extremum crosses the level.
    """
    y = np.asarray(y_star, dtype=float)
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    grad_rest = np.delete(np.asarray(phi.grad(y), dtype=float), j - 1)
    g = float(grad_rest @ u)
    if abs(g) <= _COND_TOL:
        raise OrthogonalGradientError("probe direction is orthogonal to the reduced gradient")
    d2v = phi.d2(j, y)
    if abs(d2v) <= _COND_TOL:
        raise OrthogonalGradientError("vanishing curvature along the preintegration axis")
    amplitude = 2.0 * math.sqrt(2.0 * abs(g) / abs(d2v)) * pdf(float(y[j - 1]))
    side = Side.RIGHT if g * d2v < 0.0 else Side.LEFT
    return amplitude, side


def find_level_point(
    phi: Integrand, y_star: Sequence[float], j: int, t: float
) -> np.ndarray:
    """Track the singular point onto the level ``phi = t`` near ``y_star``.

    Solves the two-equation system ``(phi - t, d phi/d y_j) = (0, 0)`` with a
    damped Gauss-Newton iteration taking minimal-norm steps, starting at
    ``y_star``.  The iterate must stay within a ball of radius 1 around the
    start; leaving it, stalling, or failing to converge in 100 iterations
    raises :class:`OutOfNeighborhoodError`.
    """
    y0 = np.asarray(y_star, dtype=float)
    y = y0.copy()

    def residual(pt: np.ndarray) -> np.ndarray:
        return np.array([phi.eval(pt) - t, phi.d1(j, pt)])

    F = residual(y)
    for _ in range(100):
        if abs(F[0]) <= 1e-10 and abs(F[1]) <= 1e-8:
            return y
        J = np.vstack([np.asarray(phi.grad(y), dtype=float), _psi_gradient(phi, j, y)])
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        norm_before = float(np.linalg.norm(F))
        lam = 1.0
        improved = False
        for _ in range(20):
            cand = y + lam * step
            Fc = residual(cand)
            if float(np.linalg.norm(Fc)) < norm_before:
                y, F = cand, Fc
                improved = True
                break
            lam *= 0.5
        if not improved:
            raise OutOfNeighborhoodError(
                f"level tracking stalled at {y!r} with residual {norm_before!r}"
            )
        if float(np.linalg.norm(y - y0)) > _NEIGHBORHOOD_RADIUS:
            raise OutOfNeighborhoodError(
                f"level tracking left the unit ball around {y0!r} (t={t!r})"
            )
    raise OutOfNeighborhoodError(f"level tracking did not converge for t={t!r}")


def default_h_grid() -> tuple[float, ...]:
    """Geometric offsets 2^-4 .. 2^-20, ascending."""
    return tuple(2.0**-k for k in range(20, 3, -1))


def _trim_count(n: int) -> int:
    """Points dropped from each end of the h grid before fitting."""
    return min(2, max(0, (n - 3) // 2))


def estimate_exponent(
    g: Callable[[float], float],
    x0: float,
    side: Side,
    h_grid: Sequence[float] | None = None,
) -> SingularityReport:
    """Fit ``log|g(x0 + sigma h) - g(x0)|`` against ``log h`` by least squares.

    The two largest offsets are discarded (higher-order contamination) and so
    are the two smallest (cancellation noise); ``Side.BOTH`` pools both
    one-sided increment sets into a single regression.  If every increment is
    exactly zero the function is locally constant on that side and the report
    carries ``exponent = inf`` with zero amplitude.
    """
    hs = sorted(h_grid) if h_grid is not None else list(default_h_grid())
    baseline = g(x0)
    if not math.isfinite(baseline):
        raise ValueError(f"g({x0!r}) = {baseline!r} is not a usable baseline")

    sigmas = {Side.RIGHT: (1.0,), Side.LEFT: (-1.0,), Side.BOTH: (1.0, -1.0)}[side]
    k = _trim_count(len(hs))
    kept = hs[k : len(hs) - k if k else len(hs)]

    points: list[tuple[float, float]] = []
    for h in kept:
        for sigma in sigmas:
            points.append((h, g(x0 + sigma * h) - baseline))

    usable = [(h, inc) for h, inc in points if inc != 0.0 and math.isfinite(inc)]
    if len(usable) < 3:
        return SingularityReport(
            location=x0,
            exponent=math.inf,
            amplitude=0.0,
            side=side,
            fit_points=tuple(points),
            residual=0.0,
        )

    log_h = np.log([h for h, _ in usable])
    log_inc = np.log([abs(inc) for _, inc in usable])
    slope, intercept = np.polyfit(log_h, log_inc, 1)
    residual = float(np.max(np.abs(log_inc - (slope * log_h + intercept))))
    return SingularityReport(
        location=x0,
        exponent=float(slope),
        amplitude=float(np.exp(intercept)),
        side=side,
        fit_points=tuple(usable),
        residual=residual,
    )


def probe_singularity(
    g: Callable[[float], float],
    x0: float,
    h_grid: Sequence[float] | None = None,
) -> SingularityProbe:
    """Classify ``x0``: singular (jump in value, derivative, or a root-type power law) or smooth.

    Smooth points show opposite-signed one-sided increments with matching
    unit exponents, or same-signed quadratic increments at an interior
    extremum.  Everything else (exponent below 0.9 on either side, one-sided
    flatness against one-sided variation, same-signed increments with
    sub-quadratic growth, or mismatched one-sided amplitudes) is singular.
    """
    left = estimate_exponent(g, x0, Side.LEFT, h_grid)
    right = estimate_exponent(g, x0, Side.RIGHT, h_grid)

    if left.flat and right.flat:
        return SingularityProbe(False, left, right)
    if left.flat != right.flat:
        return SingularityProbe(True, left, right)

    alpha_min = min(left.exponent, right.exponent)
    if alpha_min < 0.9:
        return SingularityProbe(True, left, right)

    sign_left = math.copysign(1.0, left.fit_points[0][1])
    sign_right = math.copysign(1.0, right.fit_points[0][1])
    if sign_left == sign_right and alpha_min < 1.5:
        return SingularityProbe(True, left, right)

    if alpha_min < 1.9:
        ratio = max(left.amplitude, right.amplitude) / min(left.amplitude, right.amplitude)
        if ratio > 1.25:
            return SingularityProbe(True, left, right)

    return SingularityProbe(False, left, right)
