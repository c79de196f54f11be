"""R-SBL with an affine LMMSE approximation of the E-step.

Under the prior ``x_i ~ N^R(0, gamma_i)`` the coefficients have mean
``sqrt(2 gamma / pi)`` and variance ``gamma (1 - 2/pi)``; the E-step
replaces the posterior moments with the affine LMMSE estimate built from
those two moments, and the M-step sets ``gamma = xhat**2 + diag(R_e)``.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.linalg import cho_solve

from ._em import EMConfig, run_em
from .posterior import woodbury_terms


@dataclass
class LMMSEConfig(EMConfig):
    clamp_report: bool = True  # report max(xhat, 0) as x_mean


def prior_moments(gamma):
    """Mean and variance of independent N^R(0, gamma_i) coefficients."""
    gamma = np.asarray(gamma, dtype=float)
    return np.sqrt(2.0 * gamma / math.pi), gamma * (1.0 - 2.0 / math.pi)


def lmmse_step(phi, y, gamma, sigma2):
    """One affine LMMSE estimate and the diagonal of its error covariance.

    ``xhat = mu_x + R_x Phi^T (Phi R_x Phi^T + sigma2 I)^{-1} (y - Phi mu_x)``
    and ``R_e = R_x - R_x Phi^T (...)^{-1} Phi R_x``; only ``diag(R_e)`` is formed.
    """
    mu_x, r_x = prior_moments(gamma)
    fac, pr = woodbury_terms(phi, r_x, sigma2)
    w = cho_solve(fac, np.column_stack([y - phi @ mu_x, pr]), check_finite=False)
    xhat = mu_x + pr.T @ w[:, 0]
    re_diag = r_x - np.einsum("ij,ij->j", pr, w[:, 1:])
    return xhat, re_diag


def _e_step(problem, hyper):
    idx = hyper.indices
    xhat, re_diag = lmmse_step(problem.dictionary[:, idx], problem.measurements,
                               hyper.gamma[idx], problem.noise_variance)
    return xhat ** 2 + np.maximum(re_diag, 0.0), None


def solve_lmmse(problem, cfg=None):
    """Run LMMSE R-SBL. The M-step uses the unclamped estimate; only the
    reported ``x_mean`` is clamped at zero (see ``LMMSEConfig.clamp_report``)."""
    cfg = LMMSEConfig() if cfg is None else cfg

    def finalize(problem, hyper):
        idx = hyper.indices
        xhat, _ = lmmse_step(problem.dictionary[:, idx], problem.measurements,
                             hyper.gamma[idx], problem.noise_variance)
        x = np.zeros(problem.m)
        x[idx] = np.maximum(xhat, 0.0) if cfg.clamp_report else xhat
        return x

    return run_em(problem, cfg, _e_step, finalize)
