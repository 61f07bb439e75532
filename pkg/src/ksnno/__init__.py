"""Kantorovich-type stochastic neural network operators.

Constructive operators whose coefficients are cell averages of a kernel and
whose activations are stochastic neurons: Ito integrals of normalized
sigmoidal density weights against a Wiener path.  The package provides the
deterministic operator with its L2 error oracle, seeded path simulation,
the stochastic operator with Monte-Carlo mean-square-error estimation, and
scripted experiments that reproduce the worked example.
"""

from ._version import __version__
from .activation import (
    Activation,
    Density1D,
    Density2D,
    compact_partition_sum,
    density2d_eval,
    density_eval,
    density_l2_norm,
    discrete_moment,
    partition_sum,
    sigmoid_eval,
    verify_sigmoidal_conditions,
)
from .errors import (
    ConfigError,
    DegenerateWeightError,
    DomainError,
    FixtureFormatError,
    KsnnoError,
)
from .kantorovich import (
    RULE_DIAGONAL,
    RULE_TENSOR,
    Kernel2D,
    cell_average,
    constant_kernel,
    covariance_factorization_check,
    example_kernel,
    kantorovich_eval,
    kernel_by_name,
    l2_error_mean,
    l2_error_pointwise,
    modulus_of_continuity,
    polynomial_kernel,
)
from .operators import (
    IsometryReport,
    KSnnoConfig,
    MseEntry,
    MseReport,
    isometry_gap,
    ksnno_eval,
    ksnno_via_kantorovich,
    mse_estimate,
    pathwise_error_table,
)
from .quadrature import CELL_QUADRATURE, LINE_QUADRATURE, QuadratureSpec
from .stochastic import (
    IncrementFixture,
    WienerPath,
    generate_wiener_path,
    ito_integral,
    load_fixture,
    neuron_second_moment_check,
    path_from_increments,
    path_time_integral,
    sample_process,
    stochastic_neuron,
)
from .experiments import (
    CovarianceReport,
    RunManifest,
    Table1Report,
    TABLE1_ROWS,
    covariance_check,
    embedded_fixture,
    fit_loglog_slope,
    mse_sweep,
    reproduce_table1,
)

__all__ = [name for name in dir() if not name.startswith("_")]
