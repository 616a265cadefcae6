"""Digital Asian option model under Black-Scholes dynamics.

The discretized average price is a positive sum of exponentials,

    phi(y) = (S0/d) sum_k exp((r - sigma^2/2) k T / d + sigma * A_k . y),

where ``A`` factorizes the Brownian covariance Sigma_{k,l} = min(k,l) T / d.
Three factorizations are provided: the closed-form Cholesky factor, the
Brownian bridge, and principal components.  Along any axis phi is either
monotone (coefficient column of one sign) or strictly convex with a single
interior minimum, which makes the preintegration step a one- or two-root
problem with no search grid.

Pricing estimates the discounted digital payoff e^{-rT} E[ind(phi - K)] by
plain Monte Carlo, a shifted lattice rule, or the lattice rule applied after
preintegrating one coordinate.  The preintegated path runs a vectorized
Newton iteration over all cubature nodes at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import ndtr

from .errors import ConfigError, ConvexityError, FactorizationError
from .integrands import Integrand
from .qmc import Estimate, EstimatorConfig, GeneratingVector, embedded_vector, integrate_mc, integrate_qmc

__all__ = [
    "MarketParams",
    "FactorKind",
    "CovarianceFactorization",
    "Monotonicity",
    "PriceMethod",
    "covariance_matrix",
    "build_factorization",
    "phi_asian",
    "phi_asian_d1",
    "phi_asian_d2",
    "asian_integrand",
    "classify_monotonicity",
    "axis_minimum",
    "price_digital_asian",
]


@dataclass(frozen=True)
class MarketParams:
    """Market and discretization parameters of the digital Asian option."""

    s0: float
    strike: float
    maturity: float
    rate: float
    sigma: float
    d: int

    def __post_init__(self) -> None:
        if not (self.s0 > 0 and self.strike > 0 and self.maturity > 0 and self.sigma > 0):
            raise ConfigError("s0, strike, maturity and sigma must be positive")
        if self.d < 1:
            raise ConfigError("d must be at least 1")


class FactorKind(Enum):
    STANDARD = "standard"
    BROWNIAN_BRIDGE = "bb"
    PCA = "pca"


class Monotonicity(Enum):
    MONOTONE_INCREASING = "monotone_increasing"
    NOT_MONOTONE = "not_monotone"


@dataclass(frozen=True)
class CovarianceFactorization:
    """Matrix A with A A^T equal to the Brownian path covariance."""

    kind: FactorKind
    A: np.ndarray

    def row(self, k: int) -> np.ndarray:
        """Row A_k, 1-based."""
        return self.A[k - 1]


def covariance_matrix(params: MarketParams) -> np.ndarray:
    """Sigma_{k,l} = min(k,l) * T / d for k, l = 1..d."""
    k = np.arange(1, params.d + 1)
    return np.minimum.outer(k, k) * (params.maturity / params.d)


def _standard_factor(params: MarketParams) -> np.ndarray:
    # Closed-form Cholesky of min(k,l)T/d: sqrt(T/d) on and below the diagonal.
    return np.tril(np.full((params.d, params.d), math.sqrt(params.maturity / params.d)))


def _bridge_factor(params: MarketParams) -> np.ndarray:
    """Rows express the bridge-ordered conditional construction of the path.

    The terminal point is fixed first from y_1; each later y fills the
    rounded midpoint of the widest-open gap, conditioned on the two nearest
    already-fixed indices.  Every row is a convex combination of earlier rows
    plus a positive multiple of a fresh coordinate, so entries stay
    nonnegative for any d.
    """
    d = params.d
    dt = params.maturity / d
    rows = np.zeros((d + 1, d))
    rows[d, 0] = math.sqrt(d * dt)
    next_coord = 1
    queue = [(0, d)]
    while queue:
        a, b = queue.pop(0)
        if b - a < 2:
            continue
        m = (a + b) // 2
        w = (m - a) / (b - a)
        var = (m - a) * (b - m) / (b - a) * dt
        rows[m] = (1.0 - w) * rows[a] + w * rows[b]
        rows[m, next_coord] = math.sqrt(var)
        next_coord += 1
        queue.append((a, m))
        queue.append((m, b))
    return rows[1:]


def _pca_factor(params: MarketParams) -> np.ndarray:
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(covariance_matrix(params))
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = eigenvalues[order]
    eigenvectors = eigenvectors[:, order]
    if np.any(eigenvalues <= 0):
        raise FactorizationError("covariance matrix is not positive definite")
    A = eigenvectors * np.sqrt(eigenvalues)
    if A[0, 0] < 0:
        A[:, 0] = -A[:, 0]
    return A


def build_factorization(params: MarketParams, kind: FactorKind) -> CovarianceFactorization:
    if kind is FactorKind.STANDARD:
        A = _standard_factor(params)
    elif kind is FactorKind.BROWNIAN_BRIDGE:
        A = _bridge_factor(params)
    elif kind is FactorKind.PCA:
        A = _pca_factor(params)
    else:
        raise ConfigError(f"unknown factorization kind {kind!r}")
    A.setflags(write=False)
    return CovarianceFactorization(kind=kind, A=A)


def _drift(params: MarketParams) -> np.ndarray:
    k = np.arange(1, params.d + 1)
    return (params.rate - 0.5 * params.sigma**2) * k * (params.maturity / params.d)


def phi_asian(params: MarketParams, fact: CovarianceFactorization, y: np.ndarray) -> float:
    """Discretized average price at the Gaussian point y; overflows to +inf."""
    exponent = _drift(params) + params.sigma * (fact.A @ np.asarray(y, dtype=float))
    with np.errstate(over="ignore"):
        terms = np.exp(exponent)
    return (params.s0 / params.d) * math.fsum(terms)


def phi_asian_d1(params: MarketParams, fact: CovarianceFactorization, j: int, y: np.ndarray) -> float:
    exponent = _drift(params) + params.sigma * (fact.A @ np.asarray(y, dtype=float))
    coeff = params.sigma * fact.A[:, j - 1]
    with np.errstate(over="ignore"):
        terms = coeff * np.exp(exponent)
    return (params.s0 / params.d) * math.fsum(terms)


def phi_asian_d2(params: MarketParams, fact: CovarianceFactorization, j: int, y: np.ndarray) -> float:
    exponent = _drift(params) + params.sigma * (fact.A @ np.asarray(y, dtype=float))
    coeff = params.sigma * fact.A[:, j - 1]
    with np.errstate(over="ignore"):
        terms = coeff * coeff * np.exp(exponent)
    return (params.s0 / params.d) * math.fsum(terms)


def _axis_weights(
    params: MarketParams, fact: CovarianceFactorization, j: int, y_rest: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-term weights W_k and coefficients a_k with phi(x) = sum W_k exp(a_k x)."""
    rest_cols = np.delete(fact.A, j - 1, axis=1)
    exponent = _drift(params) + params.sigma * (rest_cols @ np.asarray(y_rest, dtype=float))
    with np.errstate(over="ignore"):
        weights = (params.s0 / params.d) * np.exp(exponent)
    return weights, params.sigma * fact.A[:, j - 1]


def asian_integrand(params: MarketParams, fact: CovarianceFactorization) -> Integrand:
    """phi wrapped for the generic preintegration and singularity tooling."""
    sigma, s0, d = params.sigma, params.s0, params.d
    A = fact.A
    drift = _drift(params)

    def eval_axis(j: int, y_rest: np.ndarray, x: np.ndarray) -> np.ndarray:
        weights, coeff = _axis_weights(params, fact, j, y_rest)
        with np.errstate(over="ignore"):
            return np.exp(np.asarray(x)[:, None] * coeff[None, :]) @ weights

    def d1_axis(j: int, y_rest: np.ndarray, x: np.ndarray) -> np.ndarray:
        weights, coeff = _axis_weights(params, fact, j, y_rest)
        with np.errstate(over="ignore"):
            return np.exp(np.asarray(x)[:, None] * coeff[None, :]) @ (weights * coeff)

    def grad(y: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore"):
            terms = np.exp(drift + sigma * (A @ np.asarray(y, dtype=float)))
        return (s0 / d) * sigma * (A.T @ terms)

    return Integrand(
        dim=d,
        eval=lambda y: phi_asian(params, fact, y),
        d1=lambda j, y: phi_asian_d1(params, fact, j, y),
        d2=lambda j, y: phi_asian_d2(params, fact, j, y),
        grad=grad,
        eval_axis=eval_axis,
        d1_axis=d1_axis,
    )


def classify_monotonicity(fact: CovarianceFactorization) -> tuple[Monotonicity, ...]:
    """Per-axis monotonicity of phi, read off the sign pattern of each column."""
    out = []
    for j in range(fact.A.shape[1]):
        col = fact.A[:, j]
        if np.all(col >= 0.0) and np.any(col > 0.0):
            out.append(Monotonicity.MONOTONE_INCREASING)
        else:
            out.append(Monotonicity.NOT_MONOTONE)
    return tuple(out)


def axis_minimum(
    params: MarketParams, fact: CovarianceFactorization, j: int, y_rest: np.ndarray
) -> float:
    """Location of the unique minimum of phi along axis j (mixed-sign column).

    Newton on the first derivative; the section is strictly convex so the
    iteration has a unique target.
    """
    weights, coeff = _axis_weights(params, fact, j, y_rest)
    if np.all(coeff >= 0.0) or np.all(coeff <= 0.0):
        raise ConvexityError(f"axis {j} is monotone; no interior minimum")
    clamp = 4.0 / np.max(np.abs(coeff))
    x = 0.0
    for _ in range(100):
        terms = weights * np.exp(coeff * x)
        d1 = float(terms @ coeff)
        d2 = float(terms @ (coeff * coeff))
        step = min(max(d1 / d2, -clamp), clamp)
        x -= step
        if abs(step) <= 1e-14 * (1.0 + abs(x)):
            return x
    raise ConvexityError(f"turning-point iteration did not converge on axis {j}")


class PriceMethod(Enum):
    MC = "mc"
    PLAIN_QMC = "qmc"
    PREINT_QMC = "preint"


_NEWTON_ITERS = 100
_MAX_EXPAND = 200
_ROOT_TOL = 1e-12
_CHUNK = 8192


def _batch_minimum(W: np.ndarray, coeff: np.ndarray) -> np.ndarray:
    """Per-row minimizer of sum_k W_k exp(coeff_k x), vectorized damped Newton."""
    clamp = 4.0 / np.max(np.abs(coeff))
    x = np.zeros(W.shape[0])
    with np.errstate(over="ignore"):
        for _ in range(_NEWTON_ITERS):
            E = W * np.exp(x[:, None] * coeff[None, :])
            step = (E @ coeff) / (E @ (coeff * coeff))
            np.clip(step, -clamp, clamp, out=step)
            x -= step
            if np.max(np.abs(step)) <= 1e-13 * (1.0 + np.max(np.abs(x))):
                break
    return x


def _expand_until(
    W: np.ndarray, coeff: np.ndarray, strike: float, start: np.ndarray, direction: float, below: bool
) -> np.ndarray:
    """Probe start + direction*(1, 2, 4, ...) per row until the section value
    is below (True) or at/above (False) the strike."""
    h = np.ones(start.shape[0])
    x = start + direction * h
    with np.errstate(over="ignore"):
        for _ in range(_MAX_EXPAND):
            f = (W * np.exp(x[:, None] * coeff[None, :])).sum(axis=1) - strike
            pending = ~((f < 0.0) if below else (f >= 0.0))
            if not pending.any():
                return x
            h[pending] *= 2.0
            x[pending] = start[pending] + direction * h[pending]
    raise ConvexityError("could not bracket the strike crossing")


def _batch_root(
    W: np.ndarray, coeff: np.ndarray, strike: float, inner: np.ndarray, outer: np.ndarray
) -> np.ndarray:
    """Per-row root of sum_k W_k exp(coeff_k x) = strike on a bracketed branch.

    ``inner`` has section value below the strike, ``outer`` at or above it.
    Newton from the outer side of a convex section converges monotonically;
    steps leaving the bracket fall back to bisection.
    """
    neg = inner.copy()
    pos = outer.copy()
    x = outer.copy()
    active = np.ones(x.shape[0], dtype=bool)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        for _ in range(_NEWTON_ITERS):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            xa = x[idx]
            E = W[idx] * np.exp(xa[:, None] * coeff[None, :])
            f = E.sum(axis=1) - strike
            negative = f < 0.0
            neg[idx[negative]] = xa[negative]
            pos[idx[~negative]] = xa[~negative]
            lo = np.minimum(neg[idx], pos[idx])
            hi = np.maximum(neg[idx], pos[idx])
            done = (np.abs(f) <= _ROOT_TOL) | (hi - lo <= 4.0 * np.spacing(np.maximum(np.abs(lo), np.abs(hi))))
            xn = xa - f / (E @ coeff)
            fallback = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
            xn[fallback] = 0.5 * (lo[fallback] + hi[fallback])
            keep = ~done
            x[idx[keep]] = xn[keep]
            active[idx[done]] = False
    return x


def _preintegral_rows(W: np.ndarray, coeff: np.ndarray, strike: float) -> np.ndarray:
    """Gaussian measure of {x : sum_k W_k exp(coeff_k x) > strike} per row."""
    n = W.shape[0]
    has_pos = bool(np.any(coeff > 0.0))
    has_neg = bool(np.any(coeff < 0.0))
    if not has_pos and not has_neg:
        return (W.sum(axis=1) > strike).astype(float)
    if not (has_pos and has_neg):
        # monotone section; mirror a decreasing one onto the increasing case
        c = coeff if has_pos else -coeff
        low_limit = W[:, c == 0.0].sum(axis=1)
        P = np.ones(n)
        solvable = low_limit < strike
        if solvable.any():
            Ws = W[solvable]
            zero = np.zeros(Ws.shape[0])
            inner = _expand_until(Ws, c, strike, zero, -1.0, below=True)
            outer = _expand_until(Ws, c, strike, zero, +1.0, below=False)
            xi = _batch_root(Ws, c, strike, inner, outer)
            P[solvable] = 1.0 - ndtr(xi)
        return P
    xmin = _batch_minimum(W, coeff)
    with np.errstate(over="ignore"):
        fmin = (W * np.exp(xmin[:, None] * coeff[None, :])).sum(axis=1) - strike
    P = np.ones(n)
    crossed = fmin < 0.0
    if crossed.any():
        Wc = W[crossed]
        xm = xmin[crossed]
        left = _expand_until(Wc, coeff, strike, xm, -1.0, below=False)
        right = _expand_until(Wc, coeff, strike, xm, +1.0, below=False)
        xi_a = _batch_root(Wc, coeff, strike, xm, left)
        xi_b = _batch_root(Wc, coeff, strike, xm, right)
        P[crossed] = ndtr(xi_a) + (1.0 - ndtr(xi_b))
    return P


def price_digital_asian(
    params: MarketParams,
    fact: CovarianceFactorization,
    method: PriceMethod,
    cfg: EstimatorConfig,
    *,
    axis: int | None = None,
    vector: GeneratingVector | None = None,
) -> Estimate:
    """Discounted digital payoff estimate; discount scales value and stderr."""
    if fact.A.shape != (params.d, params.d):
        raise ConfigError("factorization dimension does not match params.d")
    scale = params.s0 / params.d
    drift = _drift(params)
    sigma, strike = params.sigma, params.strike
    A = fact.A

    if method in (PriceMethod.MC, PriceMethod.PLAIN_QMC):
        if cfg.dim != params.d:
            raise ConfigError(f"cfg.dim must equal d={params.d} for {method.value}")

        def g(Y: np.ndarray) -> np.ndarray:
            with np.errstate(over="ignore"):
                phi = scale * np.exp(drift[None, :] + sigma * (Y @ A.T)).sum(axis=1)
            return (phi > strike).astype(float)

        if method is PriceMethod.MC:
            estimate = integrate_mc(g, cfg)
        else:
            estimate = integrate_qmc(g, cfg, vector if vector is not None else embedded_vector())
    elif method is PriceMethod.PREINT_QMC:
        if axis is None or not 1 <= axis <= params.d:
            raise ConfigError(f"preintegration needs an axis in 1..{params.d}, got {axis}")
        if cfg.dim != params.d - 1:
            raise ConfigError(f"cfg.dim must equal d-1={params.d - 1} for preintegration")
        rest_cols = np.delete(A, axis - 1, axis=1)
        coeff = sigma * A[:, axis - 1]

        def g(Y_rest: np.ndarray) -> np.ndarray:
            P = np.empty(Y_rest.shape[0])
            for lo in range(0, Y_rest.shape[0], _CHUNK):
                block = Y_rest[lo : lo + _CHUNK]
                with np.errstate(over="ignore"):
                    W = scale * np.exp(drift[None, :] + sigma * (block @ rest_cols.T))
                P[lo : lo + block.shape[0]] = _preintegral_rows(W, coeff, strike)
            return P

        estimate = integrate_qmc(g, cfg, vector if vector is not None else embedded_vector())
    else:
        raise ConfigError(f"unknown pricing method {method!r}")
    return estimate.scaled(math.exp(-params.rate * params.maturity))
