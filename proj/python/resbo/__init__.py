"""Robust entropy search Bayesian optimization (C++ core)."""

from ._resbo import (
    ConfigError,
    EpResult,
    GpPosterior,
    KernelParams,
    NumericalError,
    Problem,
    RobustReference,
    bivariate_normal_cdf,
    ep_box_condition,
    fit_hyperparameters,
    fit_posterior,
    make_problem,
    problem_names,
    quantile_type7,
    run_experiment,
    true_robust_reference,
    truncated_moments_1d,
    truncated_moments_2d,
)

__all__ = [
    "ConfigError",
    "EpResult",
    "GpPosterior",
    "KernelParams",
    "NumericalError",
    "Problem",
    "RobustReference",
    "bivariate_normal_cdf",
    "ep_box_condition",
    "fit_hyperparameters",
    "fit_posterior",
    "make_problem",
    "problem_names",
    "quantile_type7",
    "run_experiment",
    "true_robust_reference",
    "truncated_moments_1d",
    "truncated_moments_2d",
]
