"""Shared Type-II machinery: problem/hyperparameter containers, the Gaussian
posterior location and scale, gamma pruning, and the mode point estimate."""

from dataclasses import dataclass, field
import logging

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .exceptions import DomainError, SingularMatrixError

logger = logging.getLogger(__name__)

DEFAULT_PRUNE_THRESHOLD = 1e-5

_JITTERS = (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8)


class Problem:
    """A linear measurement model ``y = Phi x + v`` with ``v ~ N(0, sigma2 I)``.

    The arrays are copied and frozen, so a Problem can be shared freely.
    """

    def __init__(self, dictionary, measurements, noise_variance, column_normalized=False):
        phi = np.array(dictionary, dtype=float, ndmin=2)
        y = np.array(measurements, dtype=float).ravel()
        if phi.ndim != 2:
            raise DomainError("dictionary must be a 2-D array")
        n, m = phi.shape
        if n < 1 or m < 1:
            raise DomainError("dictionary must be at least 1x1")
        if y.shape[0] != n:
            raise DomainError(f"measurements have length {y.shape[0]}, expected {n}")
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(y))):
            raise DomainError("dictionary and measurements must be finite")
        noise_variance = float(noise_variance)
        if not (noise_variance > 0 and np.isfinite(noise_variance)):
            raise DomainError(f"noise_variance must be positive, got {noise_variance}")
        if column_normalized:
            norms = np.linalg.norm(phi, axis=0)
            if np.max(np.abs(norms - 1.0)) > 1e-12:
                raise DomainError("column_normalized set but columns are not unit norm")
        phi.setflags(write=False)
        y.setflags(write=False)
        self.dictionary = phi
        self.measurements = y
        self.noise_variance = noise_variance
        self.column_normalized = bool(column_normalized)

    @property
    def n(self):
        return self.dictionary.shape[0]

    @property
    def m(self):
        return self.dictionary.shape[1]

    def __repr__(self):
        return f"Problem(n={self.n}, m={self.m}, noise_variance={self.noise_variance:g})"


@dataclass
class HyperParams:
    """Per-coefficient prior scales plus the mask of still-active indices."""

    gamma: np.ndarray
    active: np.ndarray = None

    def __post_init__(self):
        self.gamma = np.array(self.gamma, dtype=float)
        if self.active is None:
            self.active = np.ones(self.gamma.shape, dtype=bool)
        else:
            self.active = np.array(self.active, dtype=bool)
        if self.active.shape != self.gamma.shape:
            raise DomainError("gamma and active mask must have the same shape")
        if np.any(~(self.gamma[self.active] > 0)):
            raise DomainError("active gamma entries must be positive")

    @classmethod
    def full(cls, m, value=1.0):
        return cls(np.full(m, float(value)))

    @property
    def indices(self):
        return np.flatnonzero(self.active)

    @property
    def empty(self):
        return not self.active.any()

    def copy(self):
        return HyperParams(self.gamma.copy(), self.active.copy())


@dataclass
class PosteriorStats:
    """Location ``mu`` and scale matrix ``sigma`` of the multivariate RG posterior."""

    mu: np.ndarray
    sigma: np.ndarray


@dataclass
class Solution:
    x_mean: np.ndarray
    x_mode: np.ndarray
    gamma_final: HyperParams
    iterations: int
    converged: bool
    wall_time: float
    info: dict = field(default_factory=dict)

    def point_estimate(self, kind="mean"):
        if kind == "mean":
            return self.x_mean
        if kind == "mode":
            return self.x_mode
        raise DomainError(f"unknown point estimate {kind!r}")


def spd_cholesky(a):
    """Cholesky-factor an SPD matrix, escalating diagonal jitter if needed.

    Jitter is relative to the mean diagonal, tried at 0 then 1e-12 ... 1e-8.
    Returns a ``cho_factor`` tuple.
    """
    scale = max(float(np.mean(np.diag(a))), np.finfo(float).tiny)
    for jitter in _JITTERS:
        try:
            if jitter:
                a = a + (jitter * scale) * np.eye(a.shape[0])
            return cho_factor(a, lower=True, check_finite=False)
        except LinAlgError:
            continue
    try:
        cond = float(np.linalg.cond(a))
    except LinAlgError:
        cond = float("inf")
    raise SingularMatrixError(
        f"matrix not numerically SPD after jitter {_JITTERS[-1]:g} (cond ~ {cond:.3g})",
        condition=cond,
    )


def woodbury_terms(phi, gamma, sigma2):
    """Factor ``sigma2 I + Phi diag(gamma) Phi^T`` and return (factor, Phi Gamma).

    ``phi`` and ``gamma`` must already be restricted to the active set.
    """
    pg = phi * gamma
    c = pg @ phi.T
    c[np.diag_indices_from(c)] += sigma2
    return spd_cholesky(c), pg


def posterior_stats(problem, hyper, full=True):
    """Location and scale of the Gaussian part of the posterior.

    ``mu = Gamma Phi^T C^{-1} y`` and ``Sigma = Gamma - Gamma Phi^T C^{-1} Phi Gamma``
    with ``C = sigma2 I + Phi Gamma Phi^T`` (active columns only). Inactive
    coordinates get ``mu = 0`` and zero rows/columns in ``Sigma``.

    With ``full=False`` only the diagonal of ``Sigma`` is formed and
    ``sigma`` holds that vector (length M), which is all the diagonal
    approximation needs.
    """
    m = problem.m
    idx = hyper.indices
    mu = np.zeros(m)
    if idx.size == 0:
        return PosteriorStats(mu, np.zeros((m, m)) if full else np.zeros(m))
    phi = problem.dictionary[:, idx]
    g = hyper.gamma[idx]
    fac, pg = woodbury_terms(phi, g, problem.noise_variance)
    w = cho_solve(fac, np.column_stack([problem.measurements, pg]), check_finite=False)
    mu[idx] = pg.T @ w[:, 0]
    cpg = w[:, 1:]  # C^{-1} Phi Gamma
    if full:
        sig = -(pg.T @ cpg)
        sig[np.diag_indices_from(sig)] += g
        sig = 0.5 * (sig + sig.T)
        sigma = np.zeros((m, m))
        sigma[np.ix_(idx, idx)] = sig
    else:
        sigma = np.zeros(m)
        sigma[idx] = g - np.einsum("ij,ij->j", pg, cpg)
    return PosteriorStats(mu, sigma)


def prune_gamma(hyper, threshold=DEFAULT_PRUNE_THRESHOLD):
    """Deactivate every index whose gamma is at or below ``threshold``.

    Never reactivates an index, so the operation is idempotent. Check
    ``.empty`` on the result for the degenerate all-pruned case.
    """
    if not threshold > 0:
        raise DomainError(f"threshold must be positive, got {threshold}")
    active = hyper.active & (hyper.gamma > threshold)
    return HyperParams(hyper.gamma.copy(), active)


def mode_objective(problem, gamma, x, lam=None):
    """``||y - Phi x||^2 + lam * sum x_i^2 / gamma_i`` over the entries with gamma > 0."""
    lam = problem.noise_variance if lam is None else lam
    r = problem.measurements - problem.dictionary @ x
    pos = gamma > 0
    return float(r @ r + lam * np.sum(x[pos] ** 2 / gamma[pos]))


def mode_estimate(problem, hyper, lam=None):
    """Mode of the posterior: a ridge-weighted NNLS over the active set.

    Minimizes ``||y - Phi x||^2 + lam * sum x_i^2 / gamma_i`` for ``x >= 0``
    (``lam`` defaults to the noise variance) by appending the rows
    ``sqrt(lam / gamma_i) e_i`` to the dictionary and solving plain NNLS.
    """
    from .baselines import nnls_active_set

    lam = problem.noise_variance if lam is None else float(lam)
    x = np.zeros(problem.m)
    idx = hyper.indices
    if idx.size == 0:
        return x
    phi = problem.dictionary[:, idx]
    aug = np.vstack([phi, np.diag(np.sqrt(lam / hyper.gamma[idx]))])
    rhs = np.concatenate([problem.measurements, np.zeros(idx.size)])
    x[idx] = nnls_active_set(aug, rhs)
    return x
