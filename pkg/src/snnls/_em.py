"""EM driver shared by the closed-form R-SBL variants (DA and LMMSE)."""

from dataclasses import dataclass
import logging
import time

import numpy as np

from .exceptions import DomainError
from .posterior import HyperParams, Solution, mode_estimate, prune_gamma

logger = logging.getLogger(__name__)

# Active gammas never go below this, so unpruned runs stay strictly positive.
GAMMA_FLOOR = 1e-290


@dataclass
class EMConfig:
    max_em_iters: int = 1000
    em_tol: float = 1e-6
    prune_threshold: float = 1e-5
    gamma_init: float = 1.0
    prune: bool = True
    mode_lambda: float = None  # None -> noise variance

    def __post_init__(self):
        if self.max_em_iters < 1:
            raise DomainError("max_em_iters must be >= 1")
        for name in ("em_tol", "prune_threshold", "gamma_init"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")


def relative_change(new, old):
    denom = np.linalg.norm(old)
    if denom == 0:
        return 0.0 if not np.any(new) else np.inf
    return float(np.linalg.norm(new - old) / denom)


def run_em(problem, cfg, e_step, finalize):
    """Iterate ``gamma <- e_step(problem, hyper)`` with pruning and a stopping rule.

    ``e_step`` returns ``(second_moments_on_active, extra)``; ``finalize``
    maps the final ``hyper`` to the reported mean estimate.
    """
    start = time.perf_counter()
    m = problem.m
    hyper = HyperParams.full(m, cfg.gamma_init)
    converged = False
    history = []
    it = 0
    for it in range(1, cfg.max_em_iters + 1):
        if hyper.empty:
            converged = True
            break
        idx = hyper.indices
        old = np.where(hyper.active, hyper.gamma, 0.0)
        new_active, extra = e_step(problem, hyper)
        if extra is not None:
            history.append(extra)
        gamma = hyper.gamma.copy()
        gamma[idx] = np.maximum(new_active, GAMMA_FLOOR)
        hyper = HyperParams(gamma, hyper.active)
        if cfg.prune:
            hyper = prune_gamma(hyper, cfg.prune_threshold)
        change = relative_change(np.where(hyper.active, hyper.gamma, 0.0), old)
        logger.debug("em iter %d: %d active, rel change %.3e", it, hyper.active.sum(), change)
        if change < cfg.em_tol:
            converged = True
            break
    x_mean = np.zeros(m)
    x_mode = np.zeros(m)
    if not hyper.empty:
        x_mean = finalize(problem, hyper)
        x_mode = mode_estimate(problem, hyper, cfg.mode_lambda)
    return Solution(
        x_mean=x_mean,
        x_mode=x_mode,
        gamma_final=hyper,
        iterations=it,
        converged=converged,
        wall_time=time.perf_counter() - start,
        info={"history": history},
    )
