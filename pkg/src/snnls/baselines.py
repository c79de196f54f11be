"""Reference S-NNLS solvers: Lawson-Hanson NNLS, non-negative OMP and
l1-penalised projected (proximal) gradient."""

import logging
import math

import numpy as np

from .exceptions import DomainError, IterationLimitError
from .posterior import Problem

logger = logging.getLogger(__name__)


def _unpack(p, b):
    if isinstance(p, Problem):
        return p.dictionary, p.measurements
    if b is None:
        raise TypeError("pass a Problem or both a matrix and a right-hand side")
    return np.asarray(p, dtype=float), np.asarray(b, dtype=float).ravel()


def nnls_active_set(p, b=None, max_iter=None, tol=None):
    """Lawson-Hanson active-set solution of ``min ||b - A x||_2`` s.t. ``x >= 0``.

    Parameters
    ----------
    p : Problem or ndarray
        Either a :class:`Problem` (its dictionary and measurements are used)
        or the matrix ``A``; then ``b`` is required.
    max_iter : int, optional
        Cap on outer (variable-adding) passes, default ``3 * M``.
    tol : float, optional
        Dual-feasibility tolerance; default scales with ``||A|| ||b||``.

    Raises
    ------
    IterationLimitError
        If the outer loop does not terminate within ``max_iter`` passes.
    """
    a, b = _unpack(p, b)
    n, m = a.shape
    max_iter = 3 * m if max_iter is None else max_iter
    if tol is None:
        tol = 10 * max(n, m) * np.finfo(float).eps * np.abs(a).sum(axis=0).max() * max(np.abs(b).max(), 1.0)

    x = np.zeros(m)
    passive = np.zeros(m, dtype=bool)
    rejected = np.zeros(m, dtype=bool)
    w = a.T @ b
    for _ in range(max_iter):
        cand = ~passive & ~rejected & (w > tol)
        if not cand.any():
            return x
        j = np.flatnonzero(cand)[np.argmax(w[cand])]
        passive[j] = True
        first = True
        # inner loop: keep the unconstrained LS on the passive set feasible
        while True:
            idx = np.flatnonzero(passive)
            z = np.zeros(m)
            z[idx] = np.linalg.lstsq(a[:, idx], b, rcond=None)[0]
            if first and z[j] <= 0:
                # w_j > tol only through rounding; skip j until x moves
                passive[j] = False
                rejected[j] = True
                break
            first = False
            neg = passive & (z <= 0)
            if not neg.any():
                x = z
                break
            negi = np.flatnonzero(neg)
            ratio = x[negi] / (x[negi] - z[negi])
            k = int(np.argmin(ratio))
            x = x + ratio[k] * (z - x)
            x[negi[k]] = 0.0
            passive &= x > 0
            x[~passive] = 0.0
        if first:
            continue
        rejected[:] = False
        w = a.T @ (b - a @ x)
    raise IterationLimitError(f"Lawson-Hanson did not terminate in {max_iter} passes")


def nn_omp(p, k_max=None, residual_tol=1e-10):
    """Non-negative orthogonal matching pursuit.

    At each step the column with the largest *positive* correlation with the
    residual joins the support, and the coefficients on the support are
    refit by NNLS. Stops after ``k_max`` atoms (default ``N``), once
    ``||r|| <= residual_tol``, or when no column correlates positively.
    Columns should be unit-norm.
    """
    phi, y = p.dictionary, p.measurements
    n, m = phi.shape
    k_max = n if k_max is None else int(k_max)
    x = np.zeros(m)
    support = []
    r = y.copy()
    while len(support) < min(k_max, m) and np.linalg.norm(r) > residual_tol:
        corr = phi.T @ r
        corr[support] = -np.inf
        j = int(np.argmax(corr))
        if not corr[j] > 0:
            break
        support.append(j)
        coef = nnls_active_set(phi[:, support], y)
        x[:] = 0.0
        x[support] = coef
        r = y - phi @ x
    return x


def l1_objective(p, x, lam):
    r = p.measurements - p.dictionary @ x
    return 0.5 * float(r @ r) + lam * float(x.sum())


def l1_projected_gradient(p, lam, max_iters=20000, tol=1e-10, return_info=False):
    """Minimize ``0.5 ||y - Phi x||^2 + lam * sum(x)`` over ``x >= 0``.

    Accelerated proximal gradient (FISTA) with the non-negative soft
    threshold ``max(v - step * lam, 0)`` and backtracking on the step.
    A monotone restart keeps the objective non-increasing. Stops when the
    relative objective change drops below ``tol``.
    """
    if not lam >= 0:
        raise DomainError(f"lam must be non-negative, got {lam}")
    phi, y = p.dictionary, p.measurements
    m = phi.shape[1]
    x = np.zeros(m)
    z = x.copy()
    t = 1.0
    # spectral-norm estimate for the initial step; backtracking corrects it
    lip = max(np.linalg.norm(phi, 2) ** 2, np.finfo(float).tiny)
    obj = l1_objective(p, x, lam)
    history = [obj]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        rz = phi @ z - y
        fz = 0.5 * float(rz @ rz)
        grad = phi.T @ rz
        while True:
            cand = np.maximum(z - (grad + lam) / lip, 0.0)
            d = cand - z
            rc = phi @ cand - y
            fc = 0.5 * float(rc @ rc)
            if fc <= fz + grad @ d + 0.5 * lip * (d @ d) + 1e-12 * abs(fz):
                break
            lip *= 2.0
        new_obj = fc + lam * float(cand.sum())
        if new_obj > obj:
            # restart momentum from the last accepted iterate
            z = x.copy()
            t = 1.0
            continue
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        z = cand + ((t - 1.0) / t_next) * (cand - x)
        x, t = cand, t_next
        change = abs(obj - new_obj) / max(abs(obj), np.finfo(float).tiny)
        obj = new_obj
        history.append(obj)
        if change < tol:
            converged = True
            break
    if not converged:
        logger.debug("l1_projected_gradient hit max_iters=%d", max_iters)
    if return_info:
        return x, {"iterations": it, "converged": converged, "objective": history}
    return x
