"""MCMC-EM: the E-step moments come from Gibbs samples of the multivariate
rectified Gaussian posterior ``N(mu, Sigma)`` restricted to ``x >= 0``.

The sampler whitens the target through the Cholesky factor of ``Sigma``
and runs coordinate Gibbs on the whitened variables, each of which has an
interval-truncated standard normal conditional. Several independent
chains are advanced together (vectorized over chains).
"""

from dataclasses import dataclass
import logging
import time

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import log_ndtr, ndtr, ndtri, ndtri_exp

from .exceptions import DomainError, SingularMatrixError
from .rgmath import rg_mean
from .posterior import HyperParams, Solution, mode_estimate, posterior_stats, prune_gamma, spd_cholesky

logger = logging.getLogger(__name__)

# Intervals starting this many standard deviations out use exponential rejection.
REJECTION_SWITCH = 35.0
GAMMA_FLOOR = 1e-290


@dataclass
class MCMCConfig:
    n_samples: int = 2000
    burn_in: int = 500
    thinning: int = 1
    n_chains: int = 20
    max_em_iters: int = 30
    em_tol: float = 1e-4
    offdiag_prune: float = 5e-2
    shrink_lambda: float = 0.5
    diag_scale: float = 1.7
    regularize: bool = True
    prune_threshold: float = 1e-5
    prune: bool = True
    gamma_init: float = 1.0
    seed: int = 0
    diagnostics: bool = False
    mode_lambda: float = None

    def __post_init__(self):
        if self.n_samples < 1 or self.n_chains < 1 or self.thinning < 1 or self.max_em_iters < 1:
            raise DomainError("n_samples, n_chains, thinning and max_em_iters must be >= 1")
        if not 0 <= self.burn_in < self.n_samples:
            raise DomainError("burn_in must satisfy 0 <= burn_in < n_samples")
        if not 0.0 <= self.shrink_lambda <= 1.0:
            raise DomainError("shrink_lambda must lie in [0, 1]")
        for name in ("em_tol", "offdiag_prune", "diag_scale", "prune_threshold", "gamma_init"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")


def truncnorm_standard(lo, hi, rng):
    """Draw ``z ~ N(0, 1)`` conditioned on ``lo <= z <= hi`` (elementwise).

    Log-space inverse CDF on whichever tail the interval sits in, and an
    exponential-proposal rejection sampler once the interval starts beyond
    ``REJECTION_SWITCH`` standard deviations. Bounds may be infinite.
    """
    lo, hi = np.broadcast_arrays(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
    if np.any(~(lo <= hi)):
        raise DomainError("empty truncation interval")
    # reflect lower-tail intervals onto the upper tail
    flip = hi < 0
    a = np.where(flip, -hi, lo)
    b = np.where(flip, -lo, hi)
    z = np.empty(a.shape)
    u = rng.random(a.shape)

    mid = a < 0  # interval straddles zero: the plain CDF is well conditioned
    if mid.any():
        pa, pb = ndtr(a[mid]), ndtr(b[mid])
        z[mid] = ndtri(pa + u[mid] * (pb - pa))

    tail = ~mid & (a <= REJECTION_SWITCH)
    if tail.any():
        la, lb = log_ndtr(-a[tail]), log_ndtr(-b[tail])
        # P(Z > z) = P(Z > a) - u (P(Z > a) - P(Z > b))
        z[tail] = -ndtri_exp(la + np.log1p(u[tail] * np.expm1(lb - la)))

    far = np.flatnonzero(a > REJECTION_SWITCH)
    if far.size:
        z.flat[far] = _far_tail(a.flat[far], b.flat[far], rng)

    z = np.clip(z, a, b)
    return np.where(flip, -z, z)


def _far_tail(a, b, rng):
    """Exponential rejection for ``[a, b]`` with ``a`` deep in the upper tail."""
    out = np.empty(a.size)
    pending = np.arange(a.size)
    while pending.size:
        ap, bp = a[pending], b[pending]
        lam = 0.5 * (ap + np.sqrt(ap * ap + 4.0))
        # shifted exponential, truncated to the interval width
        e = -np.log1p(rng.random(ap.size) * np.expm1(-lam * (bp - ap))) / lam
        ok = rng.random(ap.size) <= np.exp(-0.5 * (ap + e - lam) ** 2)
        out[pending[ok]] = ap[ok] + e[ok]
        pending = pending[~ok]
    return out


def _whiten(chol, x, mu):
    return solve_triangular(chol, (x - mu).T, lower=True, check_finite=False).T


def sample_tmvn_gibbs(mu, sigma, n, seed=None, burn_in=0, thinning=1, n_chains=1,
                      init=None, return_chains=False):
    """Gibbs sampler for ``N(mu, sigma)`` restricted to the positive orthant.

    The chain runs on whitened coordinates ``w`` with ``x = mu + L w`` and
    ``L`` the lower Cholesky factor of ``sigma``. Each conditional of
    ``w_i`` is a standard normal cut to the interval on which ``x >= 0``,
    so the sampler stays efficient when ``sigma`` is badly conditioned.

    Parameters
    ----------
    mu, sigma : array
        Location vector (M,) and SPD scale matrix (M, M).
    n : int
        Number of retained draws, shared evenly by ``n_chains`` chains.
    seed : int, sequence or Generator
        Seed material for ``numpy.random.default_rng``.
    burn_in : int
        Draws discarded before retention starts, also shared by the chains.
    thinning : int
        Keep one sweep in ``thinning``.
    init : array (n_chains, M) or (M,), optional
        Non-negative starting points; default ``max(mu, 0)``.
    return_chains : bool
        If true return an array ``(sweeps, n_chains, M)`` instead of ``(n, M)``.

    Returns
    -------
    ndarray
        Samples, all elementwise ``>= 0``.
    """
    mu = np.asarray(mu, dtype=float).ravel()
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    m = mu.size
    if sigma.shape != (m, m):
        raise DomainError(f"sigma has shape {sigma.shape}, expected {(m, m)}")
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    chol = np.tril(spd_cholesky(0.5 * (sigma + sigma.T))[0])
    if not np.all(np.diag(chol) > 0):
        raise SingularMatrixError("Cholesky factor has a zero pivot")

    if init is None:
        # marginal rectified means: strictly inside the orthant
        x = np.tile(rg_mean(mu, np.diag(sigma)), (n_chains, 1))
    else:
        x = np.array(np.broadcast_to(init, (n_chains, m)), dtype=float)
        if np.any(x < 0):
            raise DomainError("initial state must be non-negative")
    w = _whiten(chol, x, mu)

    sweeps = -(-n // n_chains)
    total = -(-burn_in // n_chains) + sweeps * thinning
    kept = np.empty((sweeps, n_chains, m))
    k = 0
    first_kept = total - sweeps * thinning
    for sweep in range(total):
        for i in range(m):
            col = chol[i:, i]
            rest = x[:, i:] - np.outer(w[:, i], col)
            with np.errstate(divide="ignore", invalid="ignore"):
                bound = -rest / col
            pos, neg = col > 0, col < 0
            lo = bound[:, pos].max(axis=1) if pos.any() else np.full(n_chains, -np.inf)
            hi = bound[:, neg].min(axis=1) if neg.any() else np.full(n_chains, np.inf)
            # a tight constraint can leave the state an ulp outside; stay put then
            stuck = ~(lo <= hi)
            new = truncnorm_standard(np.where(stuck, 0.0, lo), np.where(stuck, 0.0, hi), rng)
            new = np.where(stuck, w[:, i], new)
            x[:, i:] = np.maximum(rest + np.outer(new, col), 0.0)
            w[:, i] = new
        if sweep >= first_kept and (sweep - first_kept) % thinning == thinning - 1:
            kept[k] = x
            k += 1
        if sweep % 50 == 49:
            w = _whiten(chol, x, mu)  # refresh accumulated rounding
    if return_chains:
        return kept
    return kept.reshape(-1, m)[:n]


def regularize_sigma(sigma_hat, cfg):
    """Prune small off-diagonals, then shrink toward the diagonally scaled target.

    Off-diagonals with ``|value| < offdiag_prune`` become zero; the result
    is ``lam * S + (1 - lam) * S_beta`` where ``S_beta`` is ``S`` with its
    diagonal multiplied by ``diag_scale``.
    """
    s = np.array(sigma_hat, dtype=float)
    s = 0.5 * (s + s.T)
    diag = np.diag(s).copy()
    s[np.abs(s) < cfg.offdiag_prune] = 0.0
    s[np.diag_indices_from(s)] = diag
    target = s.copy()
    target[np.diag_indices_from(target)] *= cfg.diag_scale
    return cfg.shrink_lambda * s + (1.0 - cfg.shrink_lambda) * target


def offdiag_stats(sigma):
    """Mean absolute off-diagonal and Frobenius distance to the diagonal part."""
    sigma = np.asarray(sigma, dtype=float)
    m = sigma.shape[0]
    off = sigma - np.diag(np.diag(sigma))
    mean_abs = float(np.abs(off).sum() / (m * (m - 1))) if m > 1 else 0.0
    return mean_abs, float(np.linalg.norm(off))


def solve_mcmc(problem, cfg=None):
    """MCMC-EM R-SBL. ``gamma_i`` is updated to the sample mean of ``x_i**2``.

    ``x_mean`` is the sample mean from the final E-step. Chains are carried
    across EM iterations (restricted to the surviving indices); each
    E-step's RNG stream is derived from ``(cfg.seed, em_iteration)``.
    """
    cfg = MCMCConfig() if cfg is None else cfg
    start = time.perf_counter()
    m = problem.m
    hyper = HyperParams.full(m, cfg.gamma_init)
    chains = None
    first = np.zeros(m)
    diag_rows = []
    sample_se = np.zeros(m)
    converged = False
    it = 0
    for it in range(1, cfg.max_em_iters + 1):
        if hyper.empty:
            converged = True
            break
        idx = hyper.indices
        stats = posterior_stats(problem, hyper)
        sig = stats.sigma[np.ix_(idx, idx)]
        mu = stats.mu[idx]
        if cfg.diagnostics:
            full_mean, full_fro = offdiag_stats(stats.sigma)
            diag_rows.append({"iteration": it, "active": int(idx.size),
                              "mean_abs_offdiag": full_mean, "frobenius_offdiag": full_fro})
        target = regularize_sigma(sig, cfg) if cfg.regularize else sig
        init = None if chains is None else chains[:, idx]
        rng = np.random.default_rng([int(cfg.seed) & (2**64 - 1), it])
        kept = sample_tmvn_gibbs(mu, target, cfg.n_samples, seed=rng, burn_in=cfg.burn_in,
                                 thinning=cfg.thinning, n_chains=cfg.n_chains, init=init,
                                 return_chains=True)
        chains = np.zeros((cfg.n_chains, m))
        chains[:, idx] = kept[-1]
        flat = kept.reshape(-1, idx.size)
        first = np.zeros(m)
        first[idx] = flat.mean(axis=0)
        sample_se = np.zeros(m)
        sample_se[idx] = kept.mean(axis=0).std(axis=0, ddof=1) / np.sqrt(cfg.n_chains) if cfg.n_chains > 1 else 0.0
        second = (flat * flat).mean(axis=0)
        old = np.where(hyper.active, hyper.gamma, 0.0)
        gamma = hyper.gamma.copy()
        gamma[idx] = np.maximum(second, GAMMA_FLOOR)
        hyper = HyperParams(gamma, hyper.active)
        if cfg.prune:
            hyper = prune_gamma(hyper, cfg.prune_threshold)
        new = np.where(hyper.active, hyper.gamma, 0.0)
        change = np.linalg.norm(new - old) / max(np.linalg.norm(old), np.finfo(float).tiny)
        logger.debug("mcmc em %d: %d active, rel change %.3e", it, hyper.active.sum(), change)
        if change < cfg.em_tol:
            converged = True
            break
    x_mean = np.where(hyper.active, first, 0.0)
    x_mode = mode_estimate(problem, hyper, cfg.mode_lambda) if not hyper.empty else np.zeros(m)
    info = {"sample_se": np.where(hyper.active, sample_se, 0.0)}
    if cfg.diagnostics:
        info["sigma_diagnostics"] = diag_rows
    return Solution(x_mean=x_mean, x_mode=x_mode, gamma_final=hyper, iterations=it,
                    converged=converged, wall_time=time.perf_counter() - start, info=info)
