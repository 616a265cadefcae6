"""Preintegration along one coordinate of an indicator-type integrand.

For a spec ``ind(phi(y) - t)`` and an axis ``j``, :func:`decompose` finds the
positivity set ``{x : phi(x, y_rest) > t}`` restricted to a scan range and
returns it as disjoint intervals with refined endpoints.
:func:`preintegrate_jump` turns the decomposition into exact normal-CDF mass,
:func:`preintegrate_convex` is the two-root fast path for integrands that are
strictly convex along the axis, and :func:`preintegrate_kink` integrates
``max(phi - t, 0)`` against the normal density with adaptive quadrature.

Scanning walks the axis twice: once through the derivative to locate the
stationary points that bound monotone pieces, and once through the values to
bracket at most one crossing per piece.  Positivity features whose derivative
sign structure is finer than the scan grid are beyond the declared resolution
and are missed; ``scan_points`` is that resolution limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConvexityError, EvaluationError, QuadratureError, RootRefinementError
from .integrands import Flavor, IndicatorSpec
from .normals import cdf

__all__ = [
    "RootFinderConfig",
    "IntervalDecomposition",
    "decompose",
    "preintegrate_jump",
    "preintegrate_convex",
    "preintegrate_kink",
]

# Classification bound for the convex fast path: normal mass beyond +-46
# underflows to exactly 0.0 in double precision.
_CONVEX_BOUND = 46.0
_MAX_DOUBLINGS = 64
_ROOT_XTOL = 1e-11


@dataclass(frozen=True)
class RootFinderConfig:
    """Scan and refinement parameters for axis decomposition.

    ``root_tol`` is an absolute tolerance on ``|phi - t|``.  Refinement also
    stops once the bracket has collapsed to a few ulps, which is the best an
    evaluation noisier than ``root_tol`` permits.
    """

    scan_halfwidth: float = 10.0
    scan_points: int = 1024
    root_tol: float = 1e-12
    max_iter: int = 50

    def __post_init__(self) -> None:
        if not self.scan_halfwidth > 0:
            raise ConfigError("scan_halfwidth must be positive")
        if self.scan_points < 16:
            raise ConfigError("scan_points must be at least 16")
        if not self.root_tol > 0:
            raise ConfigError("root_tol must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be at least 1")


DEFAULT_CONFIG = RootFinderConfig()


@dataclass(frozen=True)
class IntervalDecomposition:
    """Disjoint open intervals where ``phi > t`` along the probed axis."""

    intervals: tuple[tuple[float, float], ...]
    roots: tuple[float, ...]
    saturated: bool

    @property
    def empty(self) -> bool:
        return not self.intervals


def _refine_root(f, df, lo: float, hi: float, flo: float, fhi: float, cfg: RootFinderConfig) -> float:
    """Newton iteration on ``f`` confined to a sign-changing bracket.

    Steps that leave the bracket (or divide by a vanishing derivative) fall
    back to bisection, so progress is unconditional.
    """
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    x = 0.5 * (lo + hi)
    step_prev = hi - lo
    for _ in range(cfg.max_iter):
        fx = f(x)
        if math.isnan(fx):
            raise EvaluationError(f"NaN during root refinement at x={x!r}")
        if fx == 0.0:
            return x
        if (fx > 0.0) == (fhi > 0.0):
            hi, fhi = x, fx
        else:
            lo, flo = x, fx
        d = df(x)
        # a small residual alone does not bound the root error where f is
        # nearly flat (tangential crossings): also require the first-order
        # error estimate |f/f'| (or the bracket itself) to be tight in x
        x_tol = _ROOT_XTOL * max(1.0, abs(x))
        if abs(fx) <= cfg.root_tol and (
            hi - lo <= x_tol
            or (math.isfinite(d) and d != 0.0 and abs(fx / d) <= x_tol)
        ):
            return x
        if hi - lo <= 4.0 * np.spacing(max(abs(lo), abs(hi), 1.0)):
            return lo if abs(flo) <= abs(fhi) else hi
        # take the Newton step only while it keeps halving the projected
        # root error; one-sided creep toward a flat crossing bisects instead
        newton_ok = math.isfinite(d) and d != 0.0 and abs(fx) <= 0.5 * step_prev * abs(d)
        xn = x - fx / d if newton_ok else math.nan
        if not (math.isfinite(xn) and lo < xn < hi):
            xn = 0.5 * (lo + hi)
        step_prev = abs(xn - x)
        x = xn
    raise RootRefinementError("root refinement did not converge", (lo, hi))


def _stationary_points(spec: IndicatorSpec, j: int, y_rest: np.ndarray, grid: np.ndarray, d1: np.ndarray, cfg: RootFinderConfig) -> list[float]:
    """Locations where the axis derivative changes sign on the grid."""
    base = spec.base
    out: list[float] = []
    sgn = np.sign(d1)
    for i in np.nonzero(sgn == 0.0)[0]:
        out.append(float(grid[i]))
    for i in np.nonzero(sgn[:-1] * sgn[1:] < 0.0)[0]:
        f = lambda x: base.d1(j, base.embed(j, y_rest, x))
        df = lambda x: base.d2(j, base.embed(j, y_rest, x))
        out.append(_refine_root(f, df, float(grid[i]), float(grid[i + 1]), float(d1[i]), float(d1[i + 1]), cfg))
    return sorted(out)


def decompose(
    spec: IndicatorSpec,
    j: int,
    y_rest: np.ndarray,
    cfg: RootFinderConfig = DEFAULT_CONFIG,
) -> IntervalDecomposition:
    """Positivity decomposition of ``phi(., y_rest) > t`` along axis ``j``.

    The scan range is ``[-L, L]`` with ``L = cfg.scan_halfwidth``; an end
    interval extends to ``+-inf`` when ``phi - t`` is positive at the matching
    scan boundary.  Finite endpoints are crossings refined until the residual
    is within ``cfg.root_tol`` and the first-order root-error estimate is
    tight.  A stationary point where ``phi - t`` touches zero without changing
    sign contributes no interval (it has measure zero).
    """
    base = spec.base
    y_rest = np.asarray(y_rest, dtype=float)
    t = spec.threshold
    L = cfg.scan_halfwidth
    grid = np.linspace(-L, L, cfg.scan_points)
    d1 = base.d1_along(j, y_rest, grid)

    stationary = [s for s in _stationary_points(spec, j, y_rest, grid, d1, cfg) if -L < s < L]
    samples = np.unique(np.concatenate([grid, np.asarray(stationary, dtype=float)]))
    fvals = base.values_along(j, y_rest, samples) - t
    if np.isnan(fvals).any():
        raise EvaluationError("phi returned NaN at a scan sample")

    f_line = lambda x: base.eval(base.embed(j, y_rest, x)) - t
    df_line = lambda x: base.d1(j, base.embed(j, y_rest, x))

    # Crossings live between consecutive samples of opposite strict sign.
    # Stationary points are sampled exactly so that a positivity bump hiding
    # inside one grid cell still produces a sign change; an exactly-zero
    # stretch between opposite signs is itself the crossing.
    signs = np.sign(fvals)
    roots: list[float] = []
    nonzero = np.nonzero(signs != 0.0)[0]
    for i_a, i_b in zip(nonzero, nonzero[1:]):
        if signs[i_a] * signs[i_b] != -1.0:
            continue
        if i_b == i_a + 1:
            roots.append(
                _refine_root(
                    f_line,
                    df_line,
                    float(samples[i_a]),
                    float(samples[i_b]),
                    float(fvals[i_a]),
                    float(fvals[i_b]),
                    cfg,
                )
            )
        else:
            roots.append(0.5 * float(samples[i_a + 1] + samples[i_b - 1]))
    roots.sort()
    deduped: list[float] = []
    for r in roots:
        if not deduped or r - deduped[-1] > 4.0 * np.spacing(max(1.0, abs(r))):
            deduped.append(r)
    roots = deduped

    cuts = [-L, *roots, L]
    n_regions = len(cuts) - 1
    intervals: list[tuple[float, float]] = []
    for k in range(n_regions):
        lo_c, hi_c = cuts[k], cuts[k + 1]
        if not hi_c - lo_c > 0.0:
            continue
        if not f_line(0.5 * (lo_c + hi_c)) > 0.0:
            continue
        lo = -math.inf if k == 0 else lo_c
        hi = math.inf if k == n_regions - 1 else hi_c
        intervals.append((lo, hi))

    saturated = len(intervals) == 1 and intervals[0] == (-math.inf, math.inf)
    return IntervalDecomposition(tuple(intervals), tuple(roots), saturated)


def preintegrate_jump(
    spec: IndicatorSpec,
    j: int,
    y_rest: np.ndarray,
    cfg: RootFinderConfig = DEFAULT_CONFIG,
) -> float:
    """Normal mass of the positivity set: sum of cdf(b) - cdf(a)."""
    if spec.flavor is not Flavor.JUMP:
        raise ConfigError("preintegrate_jump requires a JUMP-flavored spec")
    dec = decompose(spec, j, y_rest, cfg)
    if dec.saturated:
        return 1.0
    if dec.empty:
        return 0.0
    return math.fsum(cdf(b) - cdf(a) for a, b in dec.intervals)


def _expand_until(f_line, start: float, direction: float, predicate) -> tuple[float, float]:
    """Geometric search from ``start``: first point (and value) satisfying ``predicate``."""
    step = 1.0
    for _ in range(_MAX_DOUBLINGS):
        x = start + direction * step
        v = f_line(x)
        if math.isnan(v):
            raise EvaluationError(f"NaN during bracket expansion at x={x!r}")
        if predicate(v):
            return x, v
        step *= 2.0
    raise RootRefinementError(
        "bracket expansion exhausted its doubling budget",
        (start, start + direction * step),
    )


def preintegrate_convex(
    spec: IndicatorSpec,
    j: int,
    y_rest: np.ndarray,
    cfg: RootFinderConfig = DEFAULT_CONFIG,
) -> float:
    """Two-root fast path for ``phi`` strictly convex along axis ``j``.

    Locates the unique line minimum with Newton on the axis derivative.  If
    the minimum value already exceeds the threshold the whole line is in the
    positivity set.  Otherwise the two crossings around the minimum are
    bracketed by geometric expansion and refined, giving
    ``cdf(xi_a) + 1 - cdf(xi_b)``.  Monotone lines (no interior sign change
    of the derivative over the classification range) reduce to a single
    crossing.  Concave behavior raises :class:`ConvexityError`.
    """
    base = spec.base
    y_rest = np.asarray(y_rest, dtype=float)
    t = spec.threshold
    B = _CONVEX_BOUND

    f_line = lambda x: base.eval(base.embed(j, y_rest, x)) - t
    d1_line = lambda x: base.d1(j, base.embed(j, y_rest, x))
    d2_line = lambda x: base.d2(j, base.embed(j, y_rest, x))

    slo = d1_line(-B)
    shi = d1_line(B)
    if slo > 0.0 and shi < 0.0:
        raise ConvexityError("axis derivative goes from positive to negative (concave line)")
    if slo == 0.0 and shi < 0.0:
        raise ConvexityError("axis derivative decreases from zero (not convex)")

    if slo == 0.0 and shi == 0.0:
        return 1.0 if f_line(0.0) > 0.0 else 0.0

    if slo < 0.0 < shi:
        x_star = _refine_root(d1_line, d2_line, -B, B, slo, shi, cfg)
        curvature = d2_line(x_star)
        if curvature <= 0.0:
            raise ConvexityError(f"second derivative {curvature!r} at the stationary point")
        f_min = f_line(x_star)
        if f_min >= 0.0:
            return 1.0
        hi, f_hi = _expand_until(f_line, x_star, +1.0, lambda v: v > 0.0)
        lo, f_lo = _expand_until(f_line, x_star, -1.0, lambda v: v > 0.0)
        xi_b = _refine_root(f_line, d1_line, x_star, hi, f_min, f_hi, cfg)
        xi_a = _refine_root(f_line, d1_line, lo, x_star, f_lo, f_min, cfg)
        return cdf(xi_a) + 1.0 - cdf(xi_b)

    if shi > 0.0:
        # Increasing over the whole classification range.
        f_left = f_line(-B)
        if f_left >= 0.0:
            return 1.0
        hi, f_hi = _expand_until(f_line, -B, +1.0, lambda v: v > 0.0)
        xi = _refine_root(f_line, d1_line, -B, hi, f_left, f_hi, cfg)
        return 1.0 - cdf(xi)

    # Decreasing over the whole classification range.
    f_right = f_line(B)
    if f_right >= 0.0:
        return 1.0
    lo, f_lo = _expand_until(f_line, B, -1.0, lambda v: v > 0.0)
    xi = _refine_root(f_line, d1_line, lo, B, f_lo, f_right, cfg)
    return cdf(xi)


# 15-point Kronrod extension of 7-point Gauss on [-1, 1].
_GK_NODES = np.array(
    [
        -0.9914553711208126,
        -0.9491079123427585,
        -0.8648644233597691,
        -0.7415311855993944,
        -0.5860872354676911,
        -0.4058451513773972,
        -0.2077849550078985,
        0.0,
        0.2077849550078985,
        0.4058451513773972,
        0.5860872354676911,
        0.7415311855993944,
        0.8648644233597691,
        0.9491079123427585,
        0.9914553711208126,
    ]
)
_GK_WEIGHTS = np.array(
    [
        0.0229353220105292,
        0.0630920926299786,
        0.1047900103222502,
        0.1406532597155259,
        0.1690047266392679,
        0.1903505780647854,
        0.2044329400752989,
        0.2094821410847278,
        0.2044329400752989,
        0.1903505780647854,
        0.1690047266392679,
        0.1406532597155259,
        0.1047900103222502,
        0.0630920926299786,
        0.0229353220105292,
    ]
)
_G7_IDX = np.array([1, 3, 5, 7, 9, 11, 13])
_G7_WEIGHTS = np.array(
    [
        0.1294849661688697,
        0.2797053914892767,
        0.3818300505051189,
        0.4179591836734694,
        0.3818300505051189,
        0.2797053914892767,
        0.1294849661688697,
    ]
)

_KINK_ABS_TOL = 1e-10
_TRUNCATION_RATIO = 1e-16
_MAX_PANELS = 4096


def _gk15(fvec, a: float, b: float) -> tuple[float, float]:
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    fx = fvec(c + h * _GK_NODES)
    if np.isnan(fx).any():
        raise EvaluationError(f"NaN inside quadrature panel [{a!r}, {b!r}]")
    k15 = h * float(fx @ _GK_WEIGHTS)
    g7 = h * float(fx[_G7_IDX] @ _G7_WEIGHTS)
    return k15, abs(k15 - g7)


def _adaptive_gk(fvec, a: float, b: float, tol: float) -> float:
    """Adaptive bisection with the embedded G7/K15 error estimate."""
    length = b - a
    if length <= 0.0:
        return 0.0
    accepted: list[float] = []
    err_accepted = 0.0
    stack = [(a, b)]
    panels = 0
    while stack:
        p, q = stack.pop()
        k15, err = _gk15(fvec, p, q)
        panels += 1
        if panels > _MAX_PANELS:
            estimate = math.fsum(accepted) + k15
            raise QuadratureError("adaptive quadrature exceeded its panel budget", estimate, err)
        tiny = (q - p) <= 1e-14 * max(1.0, abs(p), abs(q))
        if err <= tol * (q - p) / length or tiny:
            accepted.append(k15)
            err_accepted += err
        else:
            m = 0.5 * (p + q)
            stack.append((m, q))
            stack.append((p, m))
    if err_accepted > 10.0 * tol:
        raise QuadratureError("accumulated quadrature error above tolerance", math.fsum(accepted), err_accepted)
    return math.fsum(accepted)


def _truncate_tail(weighted, anchor: float, direction: float, scale: float) -> float:
    """Move outward from ``anchor`` until the weighted integrand is negligible."""
    step = 1.0
    x = anchor
    for _ in range(_MAX_DOUBLINGS):
        x = anchor + direction * step
        if weighted(np.array([x]))[0] <= _TRUNCATION_RATIO * scale or abs(x) >= _CONVEX_BOUND:
            return x
        step *= 2.0
    raise QuadratureError("could not truncate an unbounded integration tail", math.nan, math.inf)


def preintegrate_kink(
    spec: IndicatorSpec,
    j: int,
    y_rest: np.ndarray,
    cfg: RootFinderConfig = DEFAULT_CONFIG,
) -> float:
    """Integral of ``max(phi - t, 0)`` times the normal density along axis ``j``.

    Uses the jump decomposition for the integration domain, truncates
    unbounded ends where the weighted integrand drops below 1e-16 of its
    interval scale, and applies adaptive Gauss-Kronrod quadrature with
    absolute tolerance 1e-10.
    """
    if spec.flavor is not Flavor.KINK:
        raise ConfigError("preintegrate_kink requires a KINK-flavored spec")
    base = spec.base
    y_rest = np.asarray(y_rest, dtype=float)
    t = spec.threshold
    dec = decompose(spec, j, y_rest, cfg)
    if dec.empty:
        return 0.0

    def weighted(x: np.ndarray) -> np.ndarray:
        rho = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        return (base.values_along(j, y_rest, x) - t) * rho

    tol_each = _KINK_ABS_TOL / len(dec.intervals)
    total = []
    for a, b in dec.intervals:
        lo, hi = a, b
        if math.isinf(lo):
            anchor = 0.0 if math.isinf(hi) else hi
            probe = float(weighted(np.array([anchor - 1.0]))[0])
            lo = _truncate_tail(weighted, anchor, -1.0, max(probe, 1.0))
        if math.isinf(hi):
            anchor = 0.0 if math.isinf(a) else a
            probe = float(weighted(np.array([anchor + 1.0]))[0])
            hi = _truncate_tail(weighted, anchor, +1.0, max(probe, 1.0))
        total.append(_adaptive_gk(weighted, lo, hi, tol_each))
    return math.fsum(total)
