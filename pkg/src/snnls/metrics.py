"""Recovery metrics: mean square error and support error probability."""

import numpy as np

from .exceptions import DomainError

SUPPORT_REL_TOL = 1e-4
SUPPORT_ABS_FLOOR = 1e-8


def mse(x_hat, x_gen):
    """Mean of squared errors over the full signal length M."""
    x_hat = np.asarray(x_hat, dtype=float)
    x_gen = np.asarray(x_gen, dtype=float)
    if x_hat.shape != x_gen.shape:
        raise DomainError(f"length mismatch: {x_hat.shape} vs {x_gen.shape}")
    return float(np.mean((x_hat - x_gen) ** 2))


def default_support_tol(x_hat):
    return max(SUPPORT_REL_TOL * float(np.max(np.abs(x_hat), initial=0.0)), SUPPORT_ABS_FLOOR)


def support(x, tol):
    return np.flatnonzero(np.asarray(x) > tol)


def support_error(x_hat, x_gen, support_tol=None):
    """``(max(|S|, |S_hat|) - |S & S_hat|) / max(|S|, |S_hat|)``, 0 if both empty.

    ``S`` is the exact non-zero set of ``x_gen``; ``S_hat`` keeps entries of
    ``x_hat`` above ``support_tol`` (default: 1e-4 of ``max|x_hat|``,
    floored at 1e-8).
    """
    x_hat = np.asarray(x_hat, dtype=float)
    x_gen = np.asarray(x_gen, dtype=float)
    if support_tol is None:
        support_tol = default_support_tol(x_hat)
    if not support_tol > 0:
        raise DomainError("support_tol must be positive")
    s_true = set(np.flatnonzero(x_gen != 0).tolist())
    s_hat = set(support(x_hat, support_tol).tolist())
    denom = max(len(s_true), len(s_hat))
    if denom == 0:
        return 0.0
    return (denom - len(s_true & s_hat)) / denom
