"""Numerical laboratory for a singular SDE driven by fractional Brownian motion.

The target dynamics combine a time-singular, state-singular attracting drift
``a t^{2H-1} / X_t`` (H < 1/2), a linear restoring term ``-b X_t``, and additive
fractional noise ``sigma B^H_t``.  The library constructs the solution as the
monotone limit of regularized equations (the singular kernel and the reciprocal
are both smoothed by a vanishing parameter), and verifies the structural
properties of that limit pathwise: shared-noise ordering, a uniform upper
bound, decay of the nonpositive-time measure, nonnegativity, a nonnegative
correction process closing the integral identity, continuity in the
regularization parameter, a certified local fixed point, and excursion restart
identities.

Modules
-------
fbm
    Exact fractional Brownian motion sampling (circulant embedding, recursive
    conditioning, Cholesky), Hoelder-constant estimation, nested refinement.
sde
    The regularized integrator with exact per-step kernel integration, plus a
    generic comparison-pair integrator.
ladder
    Vanishing-regularization ladders: monotone families, limit extrapolation,
    and the pathwise verification operations.
picard
    Horizon certification and contraction iteration for the local problem.
excursions
    Decomposition of the positive set, endpoint diagnostics, and restart /
    initial-window integral residuals.
harness
    Reproducible campaign runner with a strict JSON config and report format.
"""

from .fbm import (
    GENERATOR_TAGS,
    FbmGenerationError,
    FbmPath,
    HolderEstimate,
    HurstParam,
    SeedRecord,
    TimeGrid,
    covariance_formula,
    estimate_holder,
    fbm_covariance,
    fgn_autocovariance,
    generate_fbm,
    path_stream,
    refine_fbm,
    zero_path,
)
from .sde import (
    ComparisonHypothesisError,
    RegularizedPath,
    SdeSpec,
    SolverError,
    drift_eps,
    kernel_column,
    kernel_integral,
    solve_comparison_pair,
    solve_regularized,
)
from .ladder import (
    BoundCertificate,
    CompensatorEstimate,
    EpsilonFamily,
    EpsilonLadder,
    EpsContinuityResult,
    MeasureDecayResult,
    NonnegativityResult,
    build_family,
    compensator_budget,
    compute_compensator,
    nonpositive_measure,
    singular_integral,
    verify_eps_continuity,
    verify_limit_nonnegativity,
    verify_measure_decay,
    verify_nested_zero_sets,
    verify_upper_bound,
)
from .picard import (
    DeltaCertificate,
    InfeasibleProblemError,
    LocalProblem,
    PicardBandError,
    PicardConvergenceError,
    PicardResult,
    contraction_modulus,
    envelope_lower,
    envelope_upper,
    fixed_point_residual,
    picard_solve,
    select_delta,
)
from .excursions import (
    EndpointCheck,
    ExcursionSet,
    InitialIdentityResult,
    IntervalTooShortError,
    RestartResidual,
    decompose_excursions,
    kernel_column_window,
    residual_window_threshold,
    restart_residual,
    verify_endpoint_limits,
    verify_initial_identity,
)
from .harness import (
    CHECK_ORDER,
    CHECK_STATEMENTS,
    DEFAULT_ALLOWANCES,
    DEFAULT_TOLERANCES,
    CheckRecord,
    ExperimentConfig,
    VerificationReport,
    config_digest,
    config_from_dict,
    load_config,
    render_report_table,
    run_campaign,
)
from .io import (
    read_csv_with_meta,
    write_csv,
    write_excursion_csv,
    write_family_csv,
    write_fbm_csv,
    write_iteration_log_csv,
    write_solution_csv,
)
from .cli import cli_dispatch

__version__ = "0.1.0"

__all__ = [
    "CHECK_ORDER",
    "CHECK_STATEMENTS",
    "DEFAULT_ALLOWANCES",
    "DEFAULT_TOLERANCES",
    "GENERATOR_TAGS",
    "BoundCertificate",
    "CheckRecord",
    "ComparisonHypothesisError",
    "CompensatorEstimate",
    "DeltaCertificate",
    "EndpointCheck",
    "EpsContinuityResult",
    "EpsilonFamily",
    "EpsilonLadder",
    "ExcursionSet",
    "ExperimentConfig",
    "FbmGenerationError",
    "FbmPath",
    "HolderEstimate",
    "HurstParam",
    "InfeasibleProblemError",
    "InitialIdentityResult",
    "IntervalTooShortError",
    "LocalProblem",
    "MeasureDecayResult",
    "NonnegativityResult",
    "PicardBandError",
    "PicardConvergenceError",
    "PicardResult",
    "RegularizedPath",
    "RestartResidual",
    "SdeSpec",
    "SeedRecord",
    "SolverError",
    "TimeGrid",
    "VerificationReport",
    "build_family",
    "cli_dispatch",
    "config_digest",
    "config_from_dict",
    "compensator_budget",
    "compute_compensator",
    "contraction_modulus",
    "covariance_formula",
    "decompose_excursions",
    "drift_eps",
    "envelope_lower",
    "envelope_upper",
    "estimate_holder",
    "fbm_covariance",
    "fgn_autocovariance",
    "fixed_point_residual",
    "generate_fbm",
    "kernel_column",
    "kernel_column_window",
    "kernel_integral",
    "load_config",
    "nonpositive_measure",
    "path_stream",
    "picard_solve",
    "read_csv_with_meta",
    "refine_fbm",
    "render_report_table",
    "residual_window_threshold",
    "restart_residual",
    "run_campaign",
    "select_delta",
    "singular_integral",
    "solve_comparison_pair",
    "solve_regularized",
    "verify_endpoint_limits",
    "verify_eps_continuity",
    "verify_initial_identity",
    "verify_limit_nonnegativity",
    "verify_measure_decay",
    "verify_nested_zero_sets",
    "verify_upper_bound",
    "write_csv",
    "write_excursion_csv",
    "write_family_csv",
    "write_fbm_csv",
    "write_iteration_log_csv",
    "write_solution_csv",
    "zero_path",
]
