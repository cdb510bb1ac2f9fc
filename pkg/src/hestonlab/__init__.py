"""hestonlab: simulation and closed-form drift inference for the Heston model.

A laboratory for the two-dimensional stochastic volatility diffusion

    dY = (a - b·Y) dt + σ₁ √Y dW,
    dX = (α - β·Y) dt + σ₂ √Y (ϱ dW + √(1-ϱ²) dB):

exact transition-law path simulation, closed-form maximum-likelihood
estimation of the drift (a, b, α, β), quadratic-variation recovery of
(σ₁, σ₂, ϱ), and Monte Carlo verification of the estimator's limit laws in
the subcritical (b > 0), critical (b = 0), and supercritical (b < 0)
regimes.
"""

from .model import (
    Criticality,
    DiffusionMatrix,
    ModelParams,
    PathGrid,
    RegimeError,
    cir_transition_sample,
    classify,
    mean_vector,
    simulate_critical_companion,
    simulate_heston_path,
    simulate_supercritical_companion,
    stationary_moment,
)
from .functionals import (
    DiffusionEstimate,
    SufficientStats,
    diffusion_matrix_estimate,
    load_path_csv,
    log_identity_value,
    recover_volatility,
    save_path_csv,
    sufficient_stats,
)
from .estimator import (
    DeterminantNonpositiveError,
    FellerWarning,
    InformationMatrix,
    MleEstimate,
    estimate_from_path,
    information_matrix,
    log_likelihood,
    mle,
    score_vector,
)
from .asymptotics import (
    LimitSample,
    boundary_hitting_time_sample,
    critical_limit_sample,
    random_scaling_transform,
    sqrt_spd_2x2,
    subcritical_covariance,
    supercritical_limit_sample,
)
from .experiments import (
    ConfigError,
    ExperimentConfig,
    ExperimentKind,
    ReplicateResult,
    TestReport,
    derive_key,
    empirical_covariance,
    ks_one_sample,
    ks_two_sample,
    replicate_stream,
    run_experiment,
    write_replicates_csv,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # model
    "Criticality",
    "DiffusionMatrix",
    "ModelParams",
    "PathGrid",
    "RegimeError",
    "cir_transition_sample",
    "classify",
    "mean_vector",
    "simulate_critical_companion",
    "simulate_heston_path",
    "simulate_supercritical_companion",
    "stationary_moment",
    # functionals
    "DiffusionEstimate",
    "SufficientStats",
    "diffusion_matrix_estimate",
    "load_path_csv",
    "log_identity_value",
    "recover_volatility",
    "save_path_csv",
    "sufficient_stats",
    # estimator
    "DeterminantNonpositiveError",
    "FellerWarning",
    "InformationMatrix",
    "MleEstimate",
    "estimate_from_path",
    "information_matrix",
    "log_likelihood",
    "mle",
    "score_vector",
    # asymptotics
    "LimitSample",
    "boundary_hitting_time_sample",
    "critical_limit_sample",
    "random_scaling_transform",
    "sqrt_spd_2x2",
    "subcritical_covariance",
    "supercritical_limit_sample",
    # experiments
    "ConfigError",
    "ExperimentConfig",
    "ExperimentKind",
    "ReplicateResult",
    "TestReport",
    "derive_key",
    "empirical_covariance",
    "ks_one_sample",
    "ks_two_sample",
    "replicate_stream",
    "run_experiment",
    "write_replicates_csv",
]
