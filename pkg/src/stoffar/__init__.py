"""Objective-function-free stochastic adaptive-regularization optimization.

A degree-1/2 regularization method that never evaluates the objective,
with history-driven subsampling schedules for finite sums, worst-case
bound diagnostics, and a reproducible benchmark harness.
"""

from .core import Counters, DerivativeEstimate, HessianOperator, dot, norm
from .models import (RegularizedModel, StepCheckReport, check_step, model_delta,
                     taylor_gradient)
from .objectives import (FiniteSumProblem, QuadraticProblem, RosenbrockProblem,
                         eda_perturb, sigmoid)
from .optimizer import (OptimizerError, RunRecord, StepHistory, StoffarConfig,
                        negative_index_sigma, run, update_sigma)
from .sampling import (BatchSchedule, EdaEstimator, ExactEstimator, SampledEstimator,
                       batch_size_gradient_theory, batch_size_hessian_theory,
                       batch_size_practical, batch_size_wngrad, sample_estimate)
from .subproblem import (SolverConfig, StepResult, SubproblemError, lagrange_step_bound,
                         solve_exact_secular, solve_matrix_free, solve_p1)
from .theory import (ConstantChain, TheoryParams, chi_constants, complexity_bound,
                     corollary_constant, kappa_chain, lambert_w, sigma_max,
                     solve_log_linear)

__version__ = "0.1.0"

__all__ = [
    "Counters", "DerivativeEstimate", "HessianOperator", "dot", "norm",
    "RegularizedModel", "StepCheckReport", "check_step", "model_delta", "taylor_gradient",
    "FiniteSumProblem", "QuadraticProblem", "RosenbrockProblem", "eda_perturb", "sigmoid",
    "OptimizerError", "RunRecord", "StepHistory", "StoffarConfig",
    "negative_index_sigma", "run", "update_sigma",
    "BatchSchedule", "EdaEstimator", "ExactEstimator", "SampledEstimator",
    "batch_size_gradient_theory", "batch_size_hessian_theory",
    "batch_size_practical", "batch_size_wngrad", "sample_estimate",
    "SolverConfig", "StepResult", "SubproblemError", "lagrange_step_bound",
    "solve_exact_secular", "solve_matrix_free", "solve_p1",
    "ConstantChain", "TheoryParams", "chi_constants", "complexity_bound",
    "corollary_constant", "kappa_chain", "lambert_w", "sigma_max", "solve_log_linear",
    "__version__",
]
