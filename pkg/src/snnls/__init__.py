"""Sparse non-negative least squares via rectified sparse Bayesian learning.

Solvers share one interface: ``solve_*(problem, cfg) -> Solution``.

>>> import numpy as np
>>> from snnls import Problem, solve_da
>>> rng = np.random.default_rng(0)
>>> phi = rng.standard_normal((20, 40)); phi /= np.linalg.norm(phi, axis=0)
>>> x = np.zeros(40); x[[3, 17]] = [1.0, 2.0]
>>> sol = solve_da(Problem(phi, phi @ x, 1e-6))
>>> np.flatnonzero(sol.x_mean > 1e-3).tolist()
[3, 17]
"""

__version__ = "0.1.0"

from .exceptions import DivergenceError, DomainError, IterationLimitError, SingularMatrixError
from .rgmath import (RGParams, g_func, h_ratio, rg_mean, rg_pdf, rg_second_moment, rg_variance,
                     rgsm_example_pdf)
from .posterior import (HyperParams, PosteriorStats, Problem, Solution, mode_estimate,
                        posterior_stats, prune_gamma)
from .da import DAConfig, solve_da
from .lmmse import LMMSEConfig, lmmse_step, solve_lmmse
from .gamp import GAMPConfig, channel_max_sum, channel_sum_product, solve_gamp
from .mcmc import MCMCConfig, regularize_sigma, sample_tmvn_gibbs, solve_mcmc
from .baselines import l1_projected_gradient, nn_omp, nnls_active_set
from .datagen import DictionaryEnsemble, SignalDistribution, TrialSpec, gen_instance
from .metrics import mse, support_error
from .experiments import run_benchmark, run_solver, sigma_diagnostic, summarize

__all__ = [
    "DivergenceError", "DomainError", "IterationLimitError", "SingularMatrixError",
    "RGParams", "g_func", "h_ratio", "rg_mean", "rg_pdf", "rg_second_moment", "rg_variance",
    "rgsm_example_pdf", "HyperParams", "PosteriorStats", "Problem", "Solution",
    "mode_estimate", "posterior_stats", "prune_gamma", "DAConfig", "solve_da",
    "LMMSEConfig", "lmmse_step", "solve_lmmse", "GAMPConfig", "channel_max_sum",
    "channel_sum_product", "solve_gamp", "MCMCConfig", "regularize_sigma",
    "sample_tmvn_gibbs", "solve_mcmc", "l1_projected_gradient", "nn_omp", "nnls_active_set",
    "DictionaryEnsemble", "SignalDistribution", "TrialSpec", "gen_instance", "mse",
    "support_error", "run_benchmark", "run_solver", "sigma_diagnostic", "summarize",
]
