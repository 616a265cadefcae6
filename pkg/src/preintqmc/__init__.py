"""Preintegration and lattice-rule toolkit for discontinuous Gaussian integrals.

The package integrates indicator-type functions ind(phi(y) - t) against the
standard normal density.  One coordinate is integrated out in closed form
over the decomposed positivity set (preintegration), which smooths the
integrand; the remaining coordinates go to a randomly shifted rank-1 lattice
rule or plain Monte Carlo.  Companion tooling fits the power-law singularity
that preintegration leaves behind and prices a digital Asian option as the
worked high-dimensional application.
"""

from .asian import (
    CovarianceFactorization,
    FactorKind,
    MarketParams,
    Monotonicity,
    PriceMethod,
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
from .errors import (
    ConfigError,
    ConvexityError,
    DomainError,
    EvaluationError,
    FactorizationError,
    NumericError,
    OrthogonalGradientError,
    OutOfNeighborhoodError,
    QuadratureError,
    RootRefinementError,
    UnsupportedCombinationError,
    VectorParseError,
)
from .integrands import (
    ExampleId,
    Flavor,
    IndicatorSpec,
    Integrand,
    example_integrand,
    oracle_kink_preintegral,
    oracle_preintegral,
)
from .normals import cdf, cdf_array, inv_cdf, inv_cdf_array, pdf
from .preintegrate import (
    DEFAULT_CONFIG,
    IntervalDecomposition,
    RootFinderConfig,
    decompose,
    preintegrate_convex,
    preintegrate_jump,
    preintegrate_kink,
)
from .qmc import (
    Estimate,
    EstimatorConfig,
    GeneratingVector,
    convergence_rate,
    embedded_vector,
    integrate_mc,
    integrate_qmc,
    lattice_point,
    load_generating_vector,
)
from .singularity import (
    CriticalPoint,
    Side,
    SingularityProbe,
    SingularityReport,
    check_sqrt_conditions,
    default_h_grid,
    directional_sqrt_prediction,
    estimate_exponent,
    find_level_point,
    probe_singularity,
    sqrt_prediction,
    zeta_second_derivative,
)

__version__ = "0.1.0"
