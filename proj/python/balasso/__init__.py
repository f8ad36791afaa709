"""Bayesian adaptive lasso: Gibbs samplers, posterior selection and the simulation harness."""

from ._core import (
    Chain,
    ChecksumError,
    Fit,
    ManifestError,
    NonConvergenceError,
    NumericalError,
    ParameterDomainError,
    __version__,
    available_methods,
    fit,
    generate,
    run_experiment,
    sample_inverse_gaussian,
    solve_weighted_lasso,
)

__all__ = [
    "Chain",
    "ChecksumError",
    "Fit",
    "ManifestError",
    "NonConvergenceError",
    "NumericalError",
    "ParameterDomainError",
    "__version__",
    "available_methods",
    "fit",
    "generate",
    "run_experiment",
    "sample_inverse_gaussian",
    "solve_weighted_lasso",
]
