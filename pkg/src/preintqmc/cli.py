"""Command-line front end.

Four subcommands cover the library's workflows:

* ``example``      -- sample a numeric preintegral of one of the built-in
                      two-dimensional examples next to its closed form.
* ``singularity``  -- locate critical points over a grid of levels and fit
                      the singularity exponent of the preintegrated profile.
* ``converge``     -- the option-pricing convergence experiment; one CSV row
                      per (method, N) cell plus trailing fitted-rate rows.
* ``price``        -- a single option-price estimate.

Convergence CSV schema: header ``method,N,R,estimate,stderr,evals,wall_seconds``
with rate rows ``#rate,<method>,<rate>`` appended after the records.  Floats
are written with ``repr`` so identical runs produce identical bytes except
for the wall_seconds column.  Exit codes: 0 success, 2 configuration error,
3 numeric failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from typing import Sequence, TextIO

import numpy as np

from .asian import (
    CovarianceFactorization,
    FactorKind,
    MarketParams,
    PriceMethod,
    asian_integrand,
    axis_minimum,
    build_factorization,
    price_digital_asian,
)
from .errors import ConfigError, ConvexityError, NumericError, OutOfNeighborhoodError, RootRefinementError
from .integrands import ExampleId, IndicatorSpec, Integrand, example_integrand, oracle_preintegral
from .preintegrate import DEFAULT_CONFIG, preintegrate_convex, preintegrate_jump
from .qmc import EstimatorConfig, GeneratingVector, convergence_rate, embedded_vector, load_generating_vector
from .singularity import Side, check_sqrt_conditions, estimate_exponent, find_level_point, probe_singularity

__all__ = ["main", "build_parser"]

_CANONICAL_METHODS = ("mc", "qmc", "preint1", "preint2")
_CSV_HEADER = "method,N,R,estimate,stderr,evals,wall_seconds"
_DESK_D = 16
_DESK_N = tuple(2**k for k in range(10, 15))
_FULL_D = 256
_FULL_N = tuple(2**k for k in range(10, 20))


def _fmt(value) -> str:
    if isinstance(value, float):
        # numpy scalars pass the isinstance check but repr as np.float64(...)
        return repr(float(value))
    return str(value)


def _write_row(fh: TextIO, fields: Sequence) -> None:
    fh.write(",".join(_fmt(f) for f in fields) + "\n")
    fh.flush()


def _parse_n_list(text: str) -> tuple[int, ...]:
    try:
        ns = tuple(int(tok) for tok in text.split(","))
    except ValueError:
        raise ConfigError(f"--n-list must be comma-separated integers, got {text!r}") from None
    if not ns:
        raise ConfigError("--n-list must not be empty")
    for n in ns:
        if n < 2 or n & (n - 1):
            raise ConfigError(f"--n-list entries must be powers of two >= 2, got {n}")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigError("--n-list must be strictly increasing")
    return ns


def _parse_methods(text: str) -> tuple[str, ...]:
    tokens = [tok.strip() for tok in text.split(",") if tok.strip()]
    if not tokens:
        raise ConfigError("--methods must not be empty")
    for tok in tokens:
        if tok not in _CANONICAL_METHODS:
            raise ConfigError(f"unknown method {tok!r}; choose from {', '.join(_CANONICAL_METHODS)}")
    return tuple(m for m in _CANONICAL_METHODS if m in tokens)


def _parse_t_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(","))
    except ValueError:
        raise ConfigError(f"--t-list must be comma-separated numbers, got {text!r}") from None


def _market(args: argparse.Namespace, default_d: int) -> MarketParams:
    return MarketParams(
        s0=args.s0,
        strike=args.strike,
        maturity=args.maturity,
        rate=args.rate,
        sigma=args.sigma,
        d=args.d if args.d is not None else default_d,
    )


def _vector(args: argparse.Namespace) -> GeneratingVector:
    if args.vector == "embedded":
        return embedded_vector()
    return load_generating_vector(args.vector)


def _method_of(token: str) -> tuple[PriceMethod, int | None]:
    if token == "mc":
        return PriceMethod.MC, None
    if token == "qmc":
        return PriceMethod.PLAIN_QMC, None
    return PriceMethod.PREINT_QMC, int(token[-1])


# ---------------------------------------------------------------------------
# example


def cmd_example(args: argparse.Namespace) -> None:
    example = ExampleId(args.example)
    integrand = example_integrand(example)
    spec = IndicatorSpec(base=integrand, threshold=args.t)
    coords = np.linspace(args.coord_min, args.coord_max, args.samples)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("coord,value,oracle\n")
        for coord in coords:
            value = preintegrate_jump(spec, args.axis, np.array([coord]))
            try:
                oracle = repr(oracle_preintegral(example, args.axis, args.t, float(coord)))
            except ConfigError:
                oracle = ""
            _write_row(fh, [float(coord), value, oracle])
    print(f"wrote {len(coords)} rows to {args.out}")


# ---------------------------------------------------------------------------
# singularity


def _conditions_status(integrand: Integrand, y_star: np.ndarray, axis: int) -> str:
    point = check_sqrt_conditions(integrand, y_star, axis)
    failed = [
        name
        for name, ok in [
            ("d1_zero", point.d1_zero),
            ("d2_nonzero", point.d2_nonzero),
            ("grad_nonzero", point.grad_nonzero),
        ]
        if not ok
    ]
    return "ok" if not failed else ";".join(f"{name}=false" for name in failed)


def _probe_status(g, lo: float = -2.0, hi: float = 2.0, points: int = 11) -> str:
    flagged = [u for u in np.linspace(lo, hi, points) if probe_singularity(g, float(u)).is_singular]
    if flagged:
        return "no critical point; probe flagged " + ";".join(f"{u:.2f}" for u in flagged)
    return "no singularity detected on probe range"


def _scan_axis_of(axis: int) -> int:
    # first remaining coordinate once `axis` is integrated out, 1-based
    return 1 if axis > 1 else 2


def _critical_scan_value(
    params: MarketParams, fact: CovarianceFactorization, integrand: Integrand, axis: int, t: float
) -> float:
    """Scan-coordinate value at which the axis minimum of phi equals t.

    Newton on m(u) - t where m is the section minimum; the envelope gives
    m'(u) as the phi-derivative along the scanned coordinate.
    """
    scan_axis = _scan_axis_of(axis)
    y_rest = np.zeros(params.d - 1)

    def minimum_and_slope(u: float) -> tuple[float, float]:
        y_rest[0] = u
        x_star = axis_minimum(params, fact, axis, y_rest)
        full = integrand.embed(axis, y_rest, x_star)
        return integrand.eval(full), integrand.d1(scan_axis, full)

    u = 0.0
    for _ in range(100):
        m, slope = minimum_and_slope(u)
        gap = m - t
        if abs(gap) <= 1e-13 * max(1.0, abs(t)):
            break
        u -= min(max(gap / slope, -1.0), 1.0)
    else:
        raise RootRefinementError(f"level {t} not reached along the scan coordinate", (u, u))
    # land on the side where the section stays above the level, so the flat
    # branch of the profile is exactly constant and drops out of the fit
    direction = 1.0 if slope > 0 else -1.0
    nudge = np.spacing(abs(u) + 1.0)
    for _ in range(60):
        if minimum_and_slope(u)[0] >= t:
            return u
        u += direction * nudge
        nudge *= 2.0
    raise RootRefinementError(f"could not settle on the level-{t} boundary", (u, u))


def cmd_singularity(args: argparse.Namespace) -> None:
    rows: list[tuple] = []
    if args.target == "option":
        params = _market(args, default_d=2)
        fact = build_factorization(params, FactorKind(args.factorization))
        integrand = asian_integrand(params, fact)
        axis = args.axis if args.axis is not None else 2
        t_list = _parse_t_list(args.t_list) if args.t_list else (params.strike,)
        for t in t_list:
            spec = IndicatorSpec(base=integrand, threshold=t)

            def g(u: float, _spec=spec) -> float:
                rest = np.zeros(params.d - 1)
                rest[0] = u
                return preintegrate_convex(_spec, axis, rest, DEFAULT_CONFIG)

            try:
                location = _critical_scan_value(params, fact, integrand, axis, t)
            except (ConvexityError, RootRefinementError) as exc:
                rows.append((t, "", "", "", "", f"no turning point: {exc}"))
                continue
            rest = np.zeros(params.d - 1)
            rest[0] = location
            y_star = integrand.embed(axis, rest, axis_minimum(params, fact, axis, rest))
            status = _conditions_status(integrand, y_star, axis)
            report = estimate_exponent(g, location, Side.BOTH)
            rows.append((t, location, report.exponent, report.amplitude, report.residual, status))
    else:
        example = ExampleId(args.target)
        integrand = example_integrand(example)
        axis = args.axis if args.axis is not None else 1
        t_list = _parse_t_list(args.t_list) if args.t_list else (0.0,)
        for t in t_list:
            spec = IndicatorSpec(base=integrand, threshold=t)

            def g(u: float, _spec=spec) -> float:
                return preintegrate_jump(_spec, axis, np.array([u]))

            try:
                y_star = find_level_point(integrand, np.zeros(integrand.dim), axis, t)
            except (OutOfNeighborhoodError, RootRefinementError, ConvexityError):
                rows.append((t, "", "", "", "", _probe_status(g)))
                continue
            location = float(np.delete(np.asarray(y_star), axis - 1)[0])
            status = _conditions_status(integrand, y_star, axis)
            report = estimate_exponent(g, location, Side.BOTH)
            rows.append((t, location, report.exponent, report.amplitude, report.residual, status))

    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("t,location,exponent,amplitude,residual,status\n")
        for row in rows:
            _write_row(fh, row)
    for row in rows:
        if row[1] == "":
            print(f"t={row[0]:g}: {row[5]}")
        else:
            print(
                f"t={row[0]:g}: location={row[1]:.8f} exponent={row[2]:.4f} "
                f"amplitude={row[3]:.6g} residual={row[4]:.3g} [{row[5]}]"
            )


# ---------------------------------------------------------------------------
# converge / price


def _run_cell(
    params: MarketParams,
    fact: CovarianceFactorization,
    token: str,
    N: int,
    shifts: int,
    seed: int,
    vector: GeneratingVector,
) -> tuple[tuple, float]:
    method, axis = _method_of(token)
    dim = params.d - 1 if method is PriceMethod.PREINT_QMC else params.d
    cfg = EstimatorConfig(N=N, dim=dim, R=shifts, seed=seed)
    start = time.perf_counter()
    estimate = price_digital_asian(params, fact, method, cfg, axis=axis, vector=vector)
    wall = time.perf_counter() - start
    row = (token, N, shifts, estimate.value, estimate.stderr, estimate.evals, wall)
    return row, estimate.stderr


def cmd_converge(args: argparse.Namespace) -> None:
    default_d = _FULL_D if args.full_scale else _DESK_D
    default_n = _FULL_N if args.full_scale else _DESK_N
    params = _market(args, default_d=default_d)
    kind = FactorKind(args.factorization)
    fact = build_factorization(params, kind)
    methods = _parse_methods(args.methods)
    n_list = _parse_n_list(args.n_list) if args.n_list else default_n
    if any(m.startswith("preint") for m in methods) and kind is not FactorKind.PCA:
        raise ConfigError("preintegration methods require --factorization pca")
    vector = _vector(args)
    rates: list[tuple[str, float]] = []
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(_CSV_HEADER + "\n")
        try:
            for token in methods:
                records = []
                for N in n_list:
                    row, stderr = _run_cell(params, fact, token, N, args.shifts, args.seed, vector)
                    _write_row(fh, row)
                    records.append((N, stderr))
                try:
                    rates.append((token, convergence_rate(records)))
                except ConfigError:
                    rates.append((token, math.nan))
            for token, rate in rates:
                _write_row(fh, ["#rate", token, rate])
        except Exception as exc:
            _write_row(fh, ["#error", type(exc).__name__, str(exc).replace(",", ";")])
            raise
    for token, rate in rates:
        print(f"{token}: fitted rate {rate:.4f}")
    print(f"wrote {args.out}")


def cmd_price(args: argparse.Namespace) -> None:
    params = _market(args, default_d=_DESK_D)
    fact = build_factorization(params, FactorKind(args.factorization))
    methods = _parse_methods(args.methods)
    if len(methods) != 1:
        raise ConfigError("price expects exactly one method")
    n_list = _parse_n_list(args.n_list) if args.n_list else (_DESK_N[-1],)
    if len(n_list) != 1:
        raise ConfigError("price expects exactly one N")
    token = methods[0]
    if token.startswith("preint") and FactorKind(args.factorization) is not FactorKind.PCA:
        raise ConfigError("preintegration methods require --factorization pca")
    row, _ = _run_cell(params, fact, token, n_list[0], args.shifts, args.seed, _vector(args))
    print(f"method={row[0]} N={row[1]} R={row[2]} estimate={row[3]!r} stderr={row[4]!r} evals={row[5]}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(_CSV_HEADER + "\n")
            _write_row(fh, row)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="preintqmc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    market = argparse.ArgumentParser(add_help=False)
    market.add_argument("--d", type=int, default=None, help="timesteps = dimension")
    market.add_argument("--s0", type=float, default=100.0)
    market.add_argument("--strike", type=float, default=110.0)
    market.add_argument("--maturity", type=float, default=1.0)
    market.add_argument("--rate", type=float, default=0.1)
    market.add_argument("--sigma", type=float, default=0.1)
    market.add_argument("--factorization", choices=[k.value for k in FactorKind], default="pca")

    estimator = argparse.ArgumentParser(add_help=False)
    estimator.add_argument("--methods", default="mc,qmc,preint1,preint2")
    estimator.add_argument("--n-list", default=None, help="comma-separated powers of two")
    estimator.add_argument("--shifts", type=int, default=16)
    estimator.add_argument("--seed", type=int, default=0)
    estimator.add_argument("--vector", default="embedded", help="generating-vector file or 'embedded'")

    p_example = sub.add_parser("example", help="sample a preintegrated example profile")
    p_example.add_argument("--example", choices=[e.value for e in ExampleId], required=True)
    p_example.add_argument("--axis", type=int, default=1)
    p_example.add_argument("--t", type=float, default=0.0)
    p_example.add_argument("--coord-min", type=float, default=-1.0)
    p_example.add_argument("--coord-max", type=float, default=2.0)
    p_example.add_argument("--samples", type=int, default=7)
    p_example.add_argument("--out", required=True)
    p_example.set_defaults(func=cmd_example)

    p_sing = sub.add_parser("singularity", parents=[market], help="critical points and exponent fits")
    p_sing.add_argument("--target", choices=[e.value for e in ExampleId] + ["option"], required=True)
    p_sing.add_argument("--axis", type=int, default=None)
    p_sing.add_argument("--t-list", default=None, help="comma-separated levels")
    p_sing.add_argument("--out", required=True)
    p_sing.set_defaults(func=cmd_singularity)

    p_conv = sub.add_parser("converge", parents=[market, estimator], help="convergence experiment CSV")
    p_conv.add_argument("--full-scale", action="store_true", help="d=256, N up to 2^19 defaults")
    p_conv.add_argument("--out", required=True)
    p_conv.set_defaults(func=cmd_converge)

    p_price = sub.add_parser("price", parents=[market, estimator], help="single price estimate")
    p_price.add_argument("--out", default=None)
    p_price.set_defaults(func=cmd_price)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
