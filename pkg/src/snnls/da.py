"""R-SBL with the diagonal approximation of the posterior scale matrix.

Replacing Sigma by diag(Sigma) makes the posterior a product of univariate
rectified Gaussians N^R(x_i; mu_i, Sigma_ii), whose moments are closed form.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from ._em import EMConfig, run_em
from .posterior import posterior_stats, woodbury_terms
from .rgmath import rg_mean, rg_second_moment


@dataclass
class DAConfig(EMConfig):
    track_evidence: bool = False


def _marginals(problem, hyper):
    stats = posterior_stats(problem, hyper, full=False)
    idx = hyper.indices
    mu = stats.mu[idx]
    # cancellation can leave Sigma_ii a hair below zero when sigma2 << gamma
    var = np.maximum(stats.sigma[idx], np.finfo(float).eps * hyper.gamma[idx])
    return idx, mu, var


def log_evidence(problem, hyper):
    """Gaussian-part log marginal likelihood ``-0.5 (log|C| + y^T C^-1 y)`` (up to a constant).

    Only a progress monitor: the rectified prior changes the true evidence.
    """
    idx = hyper.indices
    fac, _ = woodbury_terms(problem.dictionary[:, idx], hyper.gamma[idx], problem.noise_variance)
    y = problem.measurements
    logdet = 2.0 * np.sum(np.log(np.diag(fac[0])))
    return -0.5 * (logdet + y @ cho_solve(fac, y, check_finite=False))


def _e_step(problem, hyper):
    _, mu, var = _marginals(problem, hyper)
    return rg_second_moment(mu, var), None


def _finalize(problem, hyper):
    idx, mu, var = _marginals(problem, hyper)
    x = np.zeros(problem.m)
    x[idx] = rg_mean(mu, var)
    return x


def solve_da(problem, cfg=None):
    """Run diagonal-approximation R-SBL on ``problem``.

    Returns a :class:`~snnls.posterior.Solution` whose ``x_mean`` holds the
    approximate posterior means at the final gamma and ``x_mode`` the
    ridge-weighted NNLS mode.
    """
    cfg = DAConfig() if cfg is None else cfg

    def e_step(problem, hyper):
        second, _ = _e_step(problem, hyper)
        return second, (log_evidence(problem, hyper) if cfg.track_evidence else None)

    sol = run_em(problem, cfg, e_step, _finalize)
    if cfg.track_evidence:
        sol.info["log_evidence"] = sol.info.pop("history")
    return sol
