"""Stochastic theta methods for Ito SDEs with mean-square
contractivity analysis: integrators, closed-form decay bounds and
stepsize regions, sampling-based constant estimation, and coupled-path
ensemble experiments."""

__version__ = "0.1.0"

from .contractivity import (CompatibilityReport, ContractivityReport,
                            DomainError, LinearStability, StepsizeRegion,
                            amplification, analyze, beta_maruyama,
                            compatibility_check, eps_milstein, exponent,
                            expansion_coefficient, gamma_milstein,
                            linear_ms_stable, nu_maruyama, region)
from .ensemble import (EnsembleResult, ExperimentRow, ExperimentTable,
                       FitError, contractivity_experiment,
                       decay_bound_violations, fit_slope,
                       fit_window_indices, monotone_after_burnin,
                       run_ensemble)
from .estimation import (EstimationConfig, EstimationError, SampleBox,
                         estimate_constants, estimate_L, estimate_M,
                         estimate_M_tilde, estimate_mu, sample_box)
from .integrators import (MethodConfig, Scheme, SolverError, Trajectory,
                          implicit_solve, integrate_pair,
                          integrate_pairs_batch, integrate_path,
                          integrate_paths_batch, maruyama_step,
                          milstein_step)
from .problems import (BUILTIN_NAMES, ProblemConstants, SdeProblem,
                       UnknownProblemError, UnsupportedProblemError,
                       builtin_problem, commutativity_defect,
                       finite_difference_jacobian, levy_free_correction,
                       with_fd_derivatives)
from .wiener import NoiseGrid, increments, increments_matrix, milstein_products

__all__ = [
    "__version__",
    "BUILTIN_NAMES", "ProblemConstants", "SdeProblem",
    "UnknownProblemError", "UnsupportedProblemError", "builtin_problem",
    "commutativity_defect", "finite_difference_jacobian",
    "levy_free_correction", "with_fd_derivatives",
    "NoiseGrid", "increments", "increments_matrix", "milstein_products",
    "MethodConfig", "Scheme", "SolverError", "Trajectory",
    "implicit_solve", "integrate_pair", "integrate_pairs_batch",
    "integrate_path", "integrate_paths_batch", "maruyama_step",
    "milstein_step",
    "CompatibilityReport", "ContractivityReport", "DomainError",
    "LinearStability", "StepsizeRegion", "amplification", "analyze",
    "beta_maruyama", "compatibility_check", "eps_milstein", "exponent",
    "expansion_coefficient", "gamma_milstein", "linear_ms_stable",
    "nu_maruyama", "region",
    "EstimationConfig", "EstimationError", "SampleBox",
    "estimate_constants", "estimate_L", "estimate_M", "estimate_M_tilde",
    "estimate_mu", "sample_box",
    "EnsembleResult", "ExperimentRow", "ExperimentTable", "FitError",
    "contractivity_experiment", "decay_bound_violations", "fit_slope",
    "fit_window_indices", "monotone_after_burnin", "run_ensemble",
]
