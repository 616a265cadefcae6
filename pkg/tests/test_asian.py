"""Digital Asian option: covariance factorizations, the exponential-sum
payoff surface, and the three pricing estimators."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from preintqmc.asian import (
    CovarianceFactorization,
    FactorKind,
    MarketParams,
    Monotonicity,
    PriceMethod,
    _axis_weights,
    _preintegral_rows,
    asian_integrand,
    axis_minimum,
    build_factorization,
    classify_monotonicity,
    covariance_matrix,
    phi_asian,
    phi_asian_d1,
    phi_asian_d2,
    price_digital_asian,
)
from preintqmc.errors import ConfigError, ConvexityError
from preintqmc.integrands import Flavor, IndicatorSpec
from preintqmc.preintegrate import RootFinderConfig, preintegrate_convex
from preintqmc.qmc import EstimatorConfig
from preintqmc.singularity import Side, estimate_exponent

PHI_AT_ZERO_D1 = 109.9658855126103  # 100 * exp(0.095)


def _market(d, strike=110.0, sigma=0.1):
    return MarketParams(s0=100.0, strike=strike, maturity=1.0, rate=0.1, sigma=sigma, d=d)


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(42)


class TestMarketParams:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(s0=0.0),
            dict(strike=-1.0),
            dict(maturity=0.0),
            dict(sigma=0.0),
            dict(d=0),
        ],
    )
    def test_validation(self, kwargs):
        base = dict(s0=100.0, strike=110.0, maturity=1.0, rate=0.1, sigma=0.1, d=4)
        with pytest.raises(ConfigError):
            MarketParams(**{**base, **kwargs})


class TestFactorizations:
    def test_covariance_entries(self):
        sigma = covariance_matrix(_market(2))
        assert np.array_equal(sigma, [[0.5, 0.5], [0.5, 1.0]])

    def test_standard_d2_closed_form(self):
        fact = build_factorization(_market(2), FactorKind.STANDARD)
        root_half = math.sqrt(0.5)
        assert np.array_equal(fact.A, [[root_half, 0.0], [root_half, root_half]])

    @pytest.mark.parametrize("d", [4, 16, 64])
    @pytest.mark.parametrize("kind", list(FactorKind))
    def test_factorization_residual(self, d, kind):
        params = _market(d)
        sigma = covariance_matrix(params)
        fact = build_factorization(params, kind)
        deviation = np.linalg.norm(fact.A @ fact.A.T - sigma)
        assert deviation <= 1e-10 * np.linalg.norm(sigma)

    @pytest.mark.parametrize("d", [3, 5, 16])
    @pytest.mark.parametrize("kind", [FactorKind.STANDARD, FactorKind.BROWNIAN_BRIDGE])
    def test_path_factorizations_nonnegative(self, d, kind):
        fact = build_factorization(_market(d), kind)
        assert np.all(fact.A >= 0.0)

    def test_pca_column_signs(self):
        fact = build_factorization(_market(16), FactorKind.PCA)
        assert np.all(fact.A[:, 0] > 0.0)
        for j in range(1, 16):
            column = fact.A[:, j]
            assert (column > 0.0).any() and (column < 0.0).any()

    def test_pca_column_norms_decrease(self):
        fact = build_factorization(_market(16), FactorKind.PCA)
        norms = np.linalg.norm(fact.A, axis=0) ** 2
        assert np.all(np.diff(norms) < 1e-12)

    def test_pca_matches_closed_form_eigenvalues(self):
        # eigenvalues of min(k,l)T/d are (T/d) / (4 sin^2((2j-1)pi / (2(2d+1))))
        d, maturity = 4, 1.0
        fact = build_factorization(_market(d), FactorKind.PCA)
        expected = [
            (maturity / d) / (4.0 * math.sin((2 * j - 1) * math.pi / (2 * (2 * d + 1))) ** 2)
            for j in range(1, d + 1)
        ]
        assert np.allclose(np.linalg.norm(fact.A, axis=0) ** 2, expected, rtol=1e-12)

    def test_rows_are_one_based(self):
        fact = build_factorization(_market(4), FactorKind.STANDARD)
        assert np.array_equal(fact.row(1), fact.A[0])
        assert np.array_equal(fact.row(4), fact.A[3])

    def test_matrix_is_read_only(self):
        fact = build_factorization(_market(4), FactorKind.PCA)
        with pytest.raises(ValueError):
            fact.A[0, 0] = 0.0


class TestPhi:
    def test_single_step_value(self):
        params = _market(1)
        fact = build_factorization(params, FactorKind.STANDARD)
        assert phi_asian(params, fact, np.zeros(1)) == pytest.approx(PHI_AT_ZERO_D1, abs=1e-10)

    def test_zero_point_closed_form(self):
        params = _market(4)
        fact = build_factorization(params, FactorKind.STANDARD)
        expected = sum(25.0 * math.exp((0.1 - 0.005) * k / 4.0) for k in range(1, 5))
        assert phi_asian(params, fact, np.zeros(4)) == pytest.approx(expected, abs=1e-10)

    def test_linear_in_spot(self, rng):
        fact = build_factorization(_market(4), FactorKind.STANDARD)
        y = rng.standard_normal(4)
        doubled = MarketParams(s0=200.0, strike=110.0, maturity=1.0, rate=0.1, sigma=0.1, d=4)
        assert phi_asian(doubled, fact, y) == pytest.approx(
            2.0 * phi_asian(_market(4), fact, y), rel=1e-12
        )

    @given(st.lists(st.floats(min_value=-4.0, max_value=4.0), min_size=4, max_size=4))
    @settings(max_examples=50, deadline=None)
    def test_positive_everywhere(self, coords):
        params = _market(4)
        fact = build_factorization(params, FactorKind.PCA)
        assert phi_asian(params, fact, np.asarray(coords)) > 0.0


class TestDerivatives:
    @pytest.mark.parametrize("kind", list(FactorKind))
    def test_against_central_differences(self, kind, rng):
        params = _market(16)
        fact = build_factorization(params, kind)
        for _ in range(5):
            y = rng.standard_normal(16)
            j = int(rng.integers(1, 17))
            step = np.zeros(16)

            step[j - 1] = 1e-5
            fd1 = (phi_asian(params, fact, y + step) - phi_asian(params, fact, y - step)) / 2e-5
            a1 = phi_asian_d1(params, fact, j, y)
            assert fd1 == pytest.approx(a1, rel=1e-6)

            step[j - 1] = 1e-4
            fd2 = (
                phi_asian(params, fact, y + step)
                - 2.0 * phi_asian(params, fact, y)
                + phi_asian(params, fact, y - step)
            ) / 1e-8
            a2 = phi_asian_d2(params, fact, j, y)
            assert fd2 == pytest.approx(a2, rel=1e-4, abs=1e-4)

    def test_standard_first_derivative_positive(self, rng):
        params = _market(16)
        fact = build_factorization(params, FactorKind.STANDARD)
        for _ in range(100):
            y = rng.standard_normal(16)
            assert phi_asian_d1(params, fact, int(rng.integers(1, 17)), y) > 0.0

    def test_second_derivative_positive_all_kinds(self, rng):
        params = _market(16)
        for kind in FactorKind:
            fact = build_factorization(params, kind)
            for _ in range(30):
                y = rng.standard_normal(16)
                assert phi_asian_d2(params, fact, int(rng.integers(1, 17)), y) > 0.0


class TestMonotonicity:
    def test_standard_and_bridge_all_monotone(self):
        params = _market(16)
        for kind in (FactorKind.STANDARD, FactorKind.BROWNIAN_BRIDGE):
            flags = classify_monotonicity(build_factorization(params, kind))
            assert flags == (Monotonicity.MONOTONE_INCREASING,) * 16

    def test_pca_monotone_only_on_first_axis(self):
        flags = classify_monotonicity(build_factorization(_market(16), FactorKind.PCA))
        assert flags[0] is Monotonicity.MONOTONE_INCREASING
        assert all(flag is Monotonicity.NOT_MONOTONE for flag in flags[1:])


class TestAxisMinimum:
    def test_first_order_conditions(self, rng):
        params = _market(16)
        fact = build_factorization(params, FactorKind.PCA)
        for _ in range(50):
            y_rest = rng.standard_normal(15)
            x_star = axis_minimum(params, fact, 2, y_rest)
            weights, coeff = _axis_weights(params, fact, 2, y_rest)
            section = weights * np.exp(coeff * x_star)
            assert abs(float(section @ coeff)) <= 1e-10
            assert float(section @ (coeff * coeff)) > 0.0

    def test_monotone_axis_rejected(self):
        params = _market(16)
        fact = build_factorization(params, FactorKind.STANDARD)
        with pytest.raises(ConvexityError):
            axis_minimum(params, fact, 3, np.zeros(15))


class TestBatchPreintegration:
    @pytest.mark.parametrize("axis", [1, 2, 7])
    def test_matches_scalar_route(self, axis, rng):
        params = _market(16)
        fact = build_factorization(params, FactorKind.PCA)
        integrand = asian_integrand(params, fact)
        rest = rng.standard_normal((40, 15))

        weights = np.vstack([_axis_weights(params, fact, axis, row)[0] for row in rest])
        coeff = params.sigma * fact.A[:, axis - 1]
        batch = _preintegral_rows(weights, coeff, params.strike)

        spec = IndicatorSpec(base=integrand, threshold=params.strike, flavor=Flavor.JUMP)
        config = RootFinderConfig()
        for i, row in enumerate(rest):
            scalar = preintegrate_convex(spec, axis, row, config)
            assert abs(batch[i] - scalar) <= 1e-12

        assert np.all((batch >= 0.0) & (batch <= 1.0))

    def test_axis_restrictions_match_embedding(self, rng):
        params = _market(16)
        fact = build_factorization(params, FactorKind.PCA)
        integrand = asian_integrand(params, fact)
        y_rest = rng.standard_normal(15)
        grid = np.linspace(-3.0, 3.0, 7)

        values = integrand.values_along(4, y_rest, grid)
        slopes = integrand.d1_along(4, y_rest, grid)
        for x, value, slope in zip(grid, values, slopes):
            full = integrand.embed(4, y_rest, x)
            assert integrand.eval(full) == pytest.approx(value, rel=1e-9)
            assert integrand.d1(4, full) == pytest.approx(slope, rel=1e-9)


class TestPricing:
    def test_vanishing_strike_recovers_discount_factor(self):
        params = MarketParams(s0=100.0, strike=1e-9, maturity=1.0, rate=0.1, sigma=0.1, d=4)
        fact = build_factorization(params, FactorKind.PCA)

        est = price_digital_asian(params, fact, PriceMethod.MC, EstimatorConfig(N=256, dim=4, R=4))
        assert est.value == pytest.approx(math.exp(-0.1), abs=1e-15)
        assert est.stderr == 0.0

        est = price_digital_asian(
            params, fact, PriceMethod.PREINT_QMC, EstimatorConfig(N=256, dim=3, R=4), axis=1
        )
        assert est.value == pytest.approx(math.exp(-0.1), abs=1e-15)
        assert est.stderr == 0.0

    def test_dimension_and_axis_guards(self):
        params = _market(4)
        fact = build_factorization(params, FactorKind.PCA)
        cfg_full = EstimatorConfig(N=256, dim=4, R=4)
        cfg_reduced = EstimatorConfig(N=256, dim=3, R=4)
        with pytest.raises(ConfigError):
            price_digital_asian(params, fact, PriceMethod.MC, cfg_reduced)
        with pytest.raises(ConfigError):
            price_digital_asian(params, fact, PriceMethod.PREINT_QMC, cfg_full, axis=1)
        with pytest.raises(ConfigError):
            price_digital_asian(params, fact, PriceMethod.PREINT_QMC, cfg_reduced, axis=5)
        with pytest.raises(ConfigError):
            price_digital_asian(params, fact, PriceMethod.PREINT_QMC, cfg_reduced)

    def test_factorization_shape_guard(self):
        params = _market(4)
        fact = build_factorization(_market(8), FactorKind.PCA)
        with pytest.raises(ConfigError):
            price_digital_asian(params, fact, PriceMethod.MC, EstimatorConfig(N=256, dim=4, R=4))

    def test_methods_agree_within_three_sigma(self):
        params = _market(4)
        fact = build_factorization(params, FactorKind.PCA)
        cfg_full = EstimatorConfig(N=2**12, dim=4, R=16, seed=5)
        cfg_reduced = EstimatorConfig(N=2**12, dim=3, R=16, seed=5)
        estimates = [
            price_digital_asian(params, fact, PriceMethod.MC, cfg_full),
            price_digital_asian(params, fact, PriceMethod.PLAIN_QMC, cfg_full),
            price_digital_asian(params, fact, PriceMethod.PREINT_QMC, cfg_reduced, axis=1),
            price_digital_asian(params, fact, PriceMethod.PREINT_QMC, cfg_reduced, axis=2),
        ]
        for i, a in enumerate(estimates):
            for b in estimates[i + 1 :]:
                assert abs(a.value - b.value) <= 3.0 * math.hypot(a.stderr, b.stderr)
        for est in estimates:
            assert 0.0 <= est.value <= math.exp(-0.1)

    def test_price_invariant_under_factorization(self):
        params = _market(4)
        cfg = EstimatorConfig(N=2**12, dim=4, R=16, seed=5)
        reference = price_digital_asian(
            params, build_factorization(params, FactorKind.PCA), PriceMethod.MC, cfg
        )
        for kind in (FactorKind.STANDARD, FactorKind.BROWNIAN_BRIDGE):
            other = price_digital_asian(params, build_factorization(params, kind), PriceMethod.MC, cfg)
            assert abs(other.value - reference.value) <= 3.0 * math.hypot(other.stderr, reference.stderr)

    def test_preintegration_shrinks_stderr(self):
        params = _market(16)
        fact = build_factorization(params, FactorKind.PCA)
        plain = price_digital_asian(
            params, fact, PriceMethod.PLAIN_QMC, EstimatorConfig(N=2**12, dim=16, R=16, seed=9)
        )
        cfg_reduced = EstimatorConfig(N=2**12, dim=15, R=16, seed=9)
        for axis in (1, 2):
            preint = price_digital_asian(params, fact, PriceMethod.PREINT_QMC, cfg_reduced, axis=axis)
            assert preint.stderr < plain.stderr


class TestSingularityTransfer:
    def test_turning_point_has_square_root_profile(self):
        # strike pinned to the axis-2 section minimum at a fixed scan point:
        # the preintegrated profile then has a one-sided sqrt there
        params = _market(2, sigma=1.0)
        fact = build_factorization(params, FactorKind.PCA)
        scan_at = 0.3

        x_star = axis_minimum(params, fact, 2, np.array([scan_at]))
        weights, coeff = _axis_weights(params, fact, 2, np.array([scan_at]))
        strike = float((weights * np.exp(coeff * x_star)).sum())

        rest_columns = np.delete(fact.A, 1, axis=1)
        drift = (params.rate - 0.5 * params.sigma**2) * np.arange(1, 3) * 0.5

        def profile(y1):
            w = 50.0 * np.exp(drift + params.sigma * (rest_columns @ np.array([y1])).ravel())
            return float(_preintegral_rows(w[None, :], coeff, strike)[0])

        report = estimate_exponent(profile, scan_at, Side.LEFT)
        assert report.exponent == pytest.approx(0.5, abs=0.05)
