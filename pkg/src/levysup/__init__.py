"""Small-time extreme-value toolkit for Levy processes with regularly varying
jump tails: exact maximum-jump laws, exact path simulation above adaptive
thresholds, scaled running-supremum functionals, and Monte Carlo experiments
for their Frechet limits and exponential tail bounds."""

from ._backend import BACKEND, USE_NUMBA
from .errors import ConfigurationError, DomainError
from .families import (
    LevyMeasureSpec,
    NormingScale,
    SlowlyVarying,
    centering_c,
    first_moment_tail,
    gamma_shifts,
    norming_a,
    phi,
    ssv_diagnostic,
    ssv_verdict,
    tail_neg,
    tail_pos,
    trunc_second_moment,
)
from .exact_dist import (
    CdfCurve,
    frechet_cdf,
    mt_cdf_exact,
    mt_quantile,
    prop1_bound_eq1,
    prop1_bound_eq2,
    stable_mt_cdf,
)
from .sampler import (
    JumpSet,
    RngStream,
    ThresholdProfile,
    build_budget_profile,
    build_max_jump_profile,
    min_relevant_threshold,
    sample_jumps,
    sample_jumps_profile,
)
from .path_engine import (
    PathFunctionals,
    TimeGrid,
    build_path,
    max_jump_from_events,
    scaled_extremes,
)
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    ks_statistic,
    run_corollary3_diagnostic,
    run_de_experiment,
    run_inequality_validation,
    run_mt_experiment,
    run_yz_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "USE_NUMBA",
    "ConfigurationError",
    "DomainError",
    "LevyMeasureSpec",
    "NormingScale",
    "SlowlyVarying",
    "centering_c",
    "first_moment_tail",
    "gamma_shifts",
    "norming_a",
    "phi",
    "ssv_diagnostic",
    "ssv_verdict",
    "tail_neg",
    "tail_pos",
    "trunc_second_moment",
    "CdfCurve",
    "frechet_cdf",
    "mt_cdf_exact",
    "mt_quantile",
    "prop1_bound_eq1",
    "prop1_bound_eq2",
    "stable_mt_cdf",
    "JumpSet",
    "RngStream",
    "ThresholdProfile",
    "build_budget_profile",
    "build_max_jump_profile",
    "min_relevant_threshold",
    "sample_jumps",
    "sample_jumps_profile",
    "PathFunctionals",
    "TimeGrid",
    "build_path",
    "max_jump_from_events",
    "scaled_extremes",
    "ExperimentConfig",
    "ExperimentReport",
    "ks_statistic",
    "run_corollary3_diagnostic",
    "run_de_experiment",
    "run_inequality_validation",
    "run_mt_experiment",
    "run_yz_experiment",
    "__version__",
]
