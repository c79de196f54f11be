"""R-SBL with generalized approximate message passing (GAMP) as the E-step.

The output channel is AWGN; the input channel is the rectified Gaussian
prior ``N^R(0, gamma_i)``. Inner GAMP iterations follow the usual
schedule with damping on ``s``; the outer loop is EM on ``gamma``.
"""

from dataclasses import dataclass
import logging
import math
import time

import numpy as np

from .exceptions import DivergenceError, DomainError
from .posterior import HyperParams, Solution, mode_estimate, prune_gamma
from .rgmath import g_func, h_minus_a

logger = logging.getLogger(__name__)

SUM_PRODUCT = "sum-product"
MAX_SUM = "max-sum"

TAU_X_FLOOR = 1e-12
# consecutive inner iterations with ||dx|| > ||x|| / 2 treated as divergence,
# unless ||x|| is shrinking steadily (compared two steps back, so that a
# period-2 cycle still counts)
OSCILLATION_LIMIT = 25
# default for GAMPConfig.unsettled_tol: ||dx||^2 / ||x||^2 still above this
# after k_max passes means the loop is unstable
UNSETTLED = 1e-2
GAMMA_FLOOR = 1e-290


@dataclass
class GAMPConfig:
    mode: str = SUM_PRODUCT
    k_max: int = 200
    gamp_tol: float = 1e-10
    n_max: int = 500
    em_tol: float = 1e-8
    damping: float = 0.9
    prune_threshold: float = 1e-5
    tau_init: float = 1.0
    gamma_init: float = 1.0
    prune: bool = True
    mode_lambda: float = None
    unsettled_tol: float = UNSETTLED  # None turns the end-of-loop check off

    def __post_init__(self):
        if self.mode not in (SUM_PRODUCT, MAX_SUM):
            raise DomainError(f"unknown GAMP mode {self.mode!r}")
        if not 0.0 < self.damping <= 1.0:
            raise DomainError(f"damping must lie in (0, 1], got {self.damping}")
        for name in ("gamp_tol", "em_tol", "prune_threshold", "tau_init", "gamma_init"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.unsettled_tol is not None and not self.unsettled_tol > 0:
            raise DomainError("unsettled_tol must be positive or None")
        if self.k_max < 1 or self.n_max < 1:
            raise DomainError("k_max and n_max must be >= 1")


@dataclass
class GAMPState:
    """Iterates of one GAMP run. ``tau_p`` stores the *inverse* of ``S tau_x``
    and ``s`` carries the sign convention ``s = (p / tau_p - y) / (sigma2 + 1 / tau_p)``."""

    x_hat: np.ndarray
    tau_x: np.ndarray
    s: np.ndarray
    tau_s: np.ndarray
    r: np.ndarray
    tau_r: np.ndarray
    p: np.ndarray
    tau_p: np.ndarray
    S: np.ndarray
    iterations: int = 0

    @classmethod
    def initial(cls, phi, tau_init=1.0, x0=None, s0=None):
        n, m = phi.shape
        return cls(
            x_hat=np.zeros(m) if x0 is None else np.array(x0, dtype=float),
            tau_x=np.full(m, float(tau_init)) if np.ndim(tau_init) == 0 else np.array(tau_init, dtype=float),
            s=np.zeros(n) if s0 is None else np.array(s0, dtype=float),
            tau_s=np.ones(n),
            r=np.zeros(m),
            tau_r=np.ones(m),
            p=np.zeros(n),
            tau_p=np.ones(n),
            S=phi * phi,
        )


def _posterior_params(r, tau_r, gamma):
    eta = r * gamma / (tau_r + gamma)
    nu = tau_r * gamma / (tau_r + gamma)
    return eta, nu


def channel_sum_product(r, tau_r, gamma):
    """MMSE input channel: mean and variance of ``N^R(x; 0, gamma) N(x; r, tau_r)``.

    The product is a Gaussian ``N(eta, nu)`` truncated to ``x >= 0``, so with the
    standardized truncation point ``a = -eta / sqrt(nu)``:
    ``x_hat = sqrt(nu) (h(a) - a)`` and ``tau_x = nu g(a)``.
    """
    eta, nu = _posterior_params(np.asarray(r, float), np.asarray(tau_r, float), np.asarray(gamma, float))
    sd = np.sqrt(nu)
    a = -eta / sd
    x_hat = sd * np.asarray(h_minus_a(a))
    tau_x = nu * np.asarray(g_func(a))
    if np.ndim(x_hat) == 0:
        return float(x_hat), float(tau_x)
    return x_hat, tau_x


def channel_max_sum(r, tau_r, gamma):
    """MAP input channel: ``x_hat = max(eta, 0)`` and ``tau_x = nu`` on both branches.

    Keeping ``tau_x = nu`` when the estimate clamps to zero (rather than 0)
    avoids stalling in local minima.
    """
    eta, nu = _posterior_params(np.asarray(r, float), np.asarray(tau_r, float), np.asarray(gamma, float))
    x_hat = np.maximum(eta, 0.0)
    if np.ndim(x_hat) == 0:
        return float(x_hat), float(nu)
    return x_hat, nu


def _check(name, v, k):
    if not (np.all(np.isfinite(v)) and np.all(v > 0)):
        raise DivergenceError(f"GAMP variance {name} collapsed at inner iteration {k}",
                              iteration=k, diagnostics={"variable": name})


def gamp_inner(phi, y, sigma2, gamma, st, cfg):
    """Run the inner GAMP loop from state ``st`` (modified copy is returned).

    ``phi`` and ``gamma`` are restricted to the active columns. Stops when
    ``||x^{k+1} - x^k||^2 / ||x^{k+1}||^2 < gamp_tol`` or after ``k_max`` passes;
    reaching ``k_max`` with that ratio still above ``unsettled_tol`` raises
    :class:`DivergenceError` unless ``x`` is simply contracting toward zero.
    """
    channel = channel_max_sum if cfg.mode == MAX_SUM else channel_sum_product
    theta = cfg.damping
    S = st.S
    x, tau_x, s = st.x_hat, st.tau_x, st.s
    inv_sigma2 = 1.0 / sigma2
    k = 0
    wild = 0
    nx_hist = [float(x @ x)] * 2
    for k in range(1, cfg.k_max + 1):
        sx = S @ tau_x
        _check("S tau_x", sx, k)
        tau_p = 1.0 / sx
        p = s + tau_p * (phi @ x)
        tau_s = inv_sigma2 * tau_p / (inv_sigma2 + tau_p)
        s = (1.0 - theta) * s + theta * (p / tau_p - y) / (sigma2 + 1.0 / tau_p)
        st_tau = S.T @ tau_s
        _check("S^T tau_s", st_tau, k)
        tau_r = 1.0 / st_tau
        r = x - tau_r * (phi.T @ s)
        x_new, tau_x = channel(r, tau_r, gamma)
        tau_x = np.maximum(tau_x, TAU_X_FLOOR)
        if not np.all(np.isfinite(x_new)):
            raise DivergenceError(f"GAMP estimate non-finite at inner iteration {k}", iteration=k)
        nx = float(x_new @ x_new)
        dx = float((x_new - x) @ (x_new - x))
        x = x_new
        if dx < cfg.gamp_tol * nx or nx == 0.0:
            break
        # a plain contraction toward zero (drop in norm ~ size of the step) is not unstable
        shrinking = nx < nx_hist[1] and (math.sqrt(nx_hist[1]) - math.sqrt(nx)) ** 2 > 0.8 * dx
        if k == cfg.k_max and cfg.unsettled_tol is not None and dx > cfg.unsettled_tol * nx and not shrinking:
            raise DivergenceError(f"GAMP inner loop still unsettled after {k} iterations (try more damping)",
                                  iteration=k, diagnostics={"relative_change": dx / nx})
        wild = wild + 1 if 4.0 * dx > nx and 4.0 * nx > nx_hist[0] else 0
        nx_hist = [nx_hist[1], nx]
        if wild >= OSCILLATION_LIMIT:
            raise DivergenceError(f"GAMP oscillating at inner iteration {k} (try more damping)",
                                  iteration=k, diagnostics={"relative_change": dx / nx})
    return GAMPState(x, tau_x, s, tau_s, r, tau_r, p, tau_p, S, st.iterations + k)


def solve_gamp(problem, cfg=None):
    """R-SBL GAMP: outer EM with ``gamma <- x_dot**2 + tau_dot`` after each inner run.

    In max-sum mode the E-step moments are recomputed with the sum-product
    formulas at the final ``(r, tau_r)``. The estimate and ``s`` are carried
    across EM iterations. Raises :class:`DivergenceError` on variance collapse
    when the inner iterates keep jumping by more than their own norm, or when
    an inner run ends at ``k_max`` far from settled.
    """
    cfg = GAMPConfig() if cfg is None else cfg
    start = time.perf_counter()
    phi_full, y, sigma2 = problem.dictionary, problem.measurements, problem.noise_variance
    m = problem.m
    hyper = HyperParams.full(m, cfg.gamma_init)
    x_dot = np.zeros(m)
    tau_dot = np.full(m, cfg.tau_init)
    s = np.zeros(problem.n)
    converged = False
    inner_total = 0
    n = 0
    for n in range(1, cfg.n_max + 1):
        if hyper.empty:
            converged = True
            break
        idx = hyper.indices
        phi = phi_full[:, idx]
        st = GAMPState.initial(phi, tau_dot[idx], x0=x_dot[idx], s0=s)
        try:
            st = gamp_inner(phi, y, sigma2, hyper.gamma[idx], st, cfg)
        except DivergenceError as err:
            err.diagnostics.update({"em_iteration": n, "active": int(idx.size)})
            raise
        inner_total += st.iterations
        s = st.s
        if cfg.mode == MAX_SUM:
            xa, ta = channel_sum_product(st.r, st.tau_r, hyper.gamma[idx])
        else:
            xa, ta = st.x_hat, st.tau_x
        x_prev = x_dot.copy()
        x_dot = np.zeros(m)
        x_dot[idx] = xa
        tau_dot[idx] = ta
        gamma = hyper.gamma.copy()
        gamma[idx] = np.maximum(xa * xa + ta, GAMMA_FLOOR)
        hyper = HyperParams(gamma, hyper.active)
        if cfg.prune:
            hyper = prune_gamma(hyper, cfg.prune_threshold)
            x_dot[~hyper.active] = 0.0
        nx = float(x_dot @ x_dot)
        dx = float((x_dot - x_prev) @ (x_dot - x_prev))
        logger.debug("gamp em %d: %d active, inner %d, rel dx %.3e", n, hyper.active.sum(),
                     st.iterations, dx / nx if nx else 0.0)
        if nx == 0.0 or dx < cfg.em_tol * nx:
            converged = True
            break
    x_mean = np.where(hyper.active, x_dot, 0.0)
    x_mode = mode_estimate(problem, hyper, cfg.mode_lambda) if not hyper.empty else np.zeros(m)
    return Solution(
        x_mean=x_mean,
        x_mode=x_mode,
        gamma_final=hyper,
        iterations=n,
        converged=converged,
        wall_time=time.perf_counter() - start,
        info={"inner_iterations": inner_total},
    )
