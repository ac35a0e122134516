"""Exact and Monte Carlo evaluation of Liouville three-point functions.

The closed-form side evaluates the three-point structure constant, the
reflection coefficient and the special functions they are built from; the
probabilistic side estimates the same quantities from simulated multiplicative
chaos so the two routes can be compared at matching parameters.
"""

from .errors import (
    BoundsError,
    ContinuationError,
    DivergenceError,
    FactorizationError,
    InsufficientTailError,
    LiouvilleError,
    PoleError,
    PrecisionError,
    RegimeError,
    SeibergBoundError,
    SingularCellError,
    VarianceBlowupError,
)
from .specfun import (
    CheckReport,
    HypParams,
    QuadResult,
    UpsilonConfig,
    bpz_basis,
    hyp2f1,
    l_func,
    log_gamma,
    upsilon,
    upsilon_prime_zero,
    upsilon_suite,
)
from .dozz import (
    IdentityReport,
    LiouvilleParams,
    WeightTriple,
    b_coefficient,
    bpz_coefficient,
    c_dozz,
    c_dozz_dual,
    conformal_weight,
    crossing_T,
    crossing_T_bar,
    crossing_T_tilde,
    four_point_rhs,
    identity_suite,
    l_coefficient,
    r_dozz,
    shift_coefficient_A,
)

__version__ = "0.1.0"

from .gmc import (  # noqa: E402
    ChaosMeasure,
    ConditionedPath,
    CylinderField,
    CylinderGrid,
    RngStream,
    build_chaos,
    grid_oracle_field,
    integrate_kernel,
    sample_conditioned_bm,
    sample_field,
    sample_max_drifted_bm,
    sample_z_process,
)
from .estimators import (  # noqa: E402
    MCConfig,
    MCEstimate,
    MomentScalingReport,
    PathConfig,
    TailFitReport,
    TwoPointLimitReport,
    estimate_four_point,
    estimate_reflection,
    estimate_reflection_bar,
    estimate_three_point,
    estimate_two_point_limit,
    fit_tail_one_insertion,
    four_point_grid,
    manifest_hash,
    moment_scaling_report,
)

__all__ = [
    "__version__",
    "LiouvilleError",
    "PoleError",
    "PrecisionError",
    "DivergenceError",
    "ContinuationError",
    "BoundsError",
    "SeibergBoundError",
    "VarianceBlowupError",
    "SingularCellError",
    "RegimeError",
    "QuadResult",
    "UpsilonConfig",
    "HypParams",
    "CheckReport",
    "log_gamma",
    "l_func",
    "upsilon",
    "upsilon_prime_zero",
    "upsilon_suite",
    "hyp2f1",
    "bpz_basis",
    "LiouvilleParams",
    "WeightTriple",
    "IdentityReport",
    "conformal_weight",
    "c_dozz",
    "c_dozz_dual",
    "r_dozz",
    "shift_coefficient_A",
    "b_coefficient",
    "crossing_T",
    "crossing_T_bar",
    "crossing_T_tilde",
    "l_coefficient",
    "bpz_coefficient",
    "four_point_rhs",
    "identity_suite",
    "FactorizationError",
    "InsufficientTailError",
    "CylinderGrid",
    "CylinderField",
    "RngStream",
    "ChaosMeasure",
    "ConditionedPath",
    "sample_field",
    "build_chaos",
    "integrate_kernel",
    "sample_conditioned_bm",
    "sample_max_drifted_bm",
    "sample_z_process",
    "grid_oracle_field",
    "MCConfig",
    "MCEstimate",
    "PathConfig",
    "TailFitReport",
    "TwoPointLimitReport",
    "MomentScalingReport",
    "estimate_three_point",
    "estimate_reflection_bar",
    "estimate_reflection",
    "estimate_two_point_limit",
    "fit_tail_one_insertion",
    "estimate_four_point",
    "four_point_grid",
    "moment_scaling_report",
    "manifest_hash",
]
