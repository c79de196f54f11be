"""
Pruning small hyperparameters
=============================

Coefficients whose gamma drops below 1e-5 are removed from all linear
algebra. The answer does not change, but each EM iteration works on a
smaller matrix, so the run gets faster.
"""

import time

import numpy as np

from snnls import TrialSpec, gen_instance, mse, run_solver

spec = TrialSpec(n=100, m=400, k=20, master_seed=4)
problem, x_true, _ = gen_instance(spec, 0)
for name in ("da", "lmmse", "gamp-sp"):
    res = {}
    for prune in (True, False):
        t0 = time.perf_counter()
        sol = run_solver(name, problem, prune=prune, noiseless=True)
        res[prune] = (sol, time.perf_counter() - t0)
    (a, ta), (b, tb) = res[True], res[False]
    print(f"{name:8s} pruned {1e3 * ta:7.1f} ms  unpruned {1e3 * tb:7.1f} ms  "
          f"|dMSE| {abs(mse(a.x_mean, x_true) - mse(b.x_mean, x_true)):.1e}  "
          f"active {a.gamma_final.active.sum()} vs {b.gamma_final.active.sum()}")
