"""Sparse variable selection for GLARMA Poisson count time-series models."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateProblem,
    IndefiniteHessian,
    MissingOracle,
    NoConvergence,
    NonFiniteCurvature,
    NumericError,
    OverflowGuard,
    SingularSystem,
    SparseGlarmaError,
    SubsampleTooSmall,
    UsageError,
)
from .bench import (
    ExperimentConfig,
    MetricRow,
    fourier_covariates,
    run_experiment,
    run_gamma_study,
    sparse_beta,
    tpr_fpr,
)
from .estimation import NewtonConfig, NewtonReport, fit_glm_init, newton_full, newton_gamma
from .likelihood import LikelihoodEval, beta_block, gradient, hessian, log_likelihood
from .model import GlarmaParams, SeriesData, StatePath, compute_state_path, simulate
from .pipeline import PipelineConfig, PipelineResult, run_pipeline
from .quad_lasso import (
    LassoFit,
    PseudoProblem,
    build_pseudo_problem,
    cross_validate,
    lambda_grid,
    lasso_cd,
)
from .selection import (
    SelectionConfig,
    SelectionResult,
    lasso_baselines,
    refit_support,
    select_fast,
    select_standard,
)

__all__ = [
    "__version__",
    "GlarmaParams",
    "SeriesData",
    "StatePath",
    "compute_state_path",
    "simulate",
    "LikelihoodEval",
    "log_likelihood",
    "gradient",
    "hessian",
    "beta_block",
    "NewtonConfig",
    "NewtonReport",
    "fit_glm_init",
    "newton_gamma",
    "newton_full",
    "PseudoProblem",
    "LassoFit",
    "build_pseudo_problem",
    "lasso_cd",
    "lambda_grid",
    "cross_validate",
    "SelectionConfig",
    "SelectionResult",
    "select_standard",
    "select_fast",
    "refit_support",
    "lasso_baselines",
    "PipelineConfig",
    "PipelineResult",
    "run_pipeline",
    "ExperimentConfig",
    "MetricRow",
    "fourier_covariates",
    "sparse_beta",
    "tpr_fpr",
    "run_experiment",
    "run_gamma_study",
    "SparseGlarmaError",
    "NumericError",
    "UsageError",
    "OverflowGuard",
    "NonFiniteCurvature",
    "IndefiniteHessian",
    "SingularSystem",
    "NoConvergence",
    "DegenerateProblem",
    "SubsampleTooSmall",
    "MissingOracle",
    "ConfigError",
]
