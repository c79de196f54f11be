"""Benchmark harness: run solvers over generated trials, write CSV/JSON.

Every trial draws its instance from ``(master_seed, trial_index)`` alone and
results are keyed by trial index, so the output does not depend on the
number of workers.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import asdict, dataclass, replace
import hashlib
import io
import json
import logging
import math
import time

import numpy as np

from . import __version__
from .baselines import l1_projected_gradient, nn_omp, nnls_active_set
from .da import DAConfig, solve_da
from .datagen import DictionaryEnsemble, SignalDistribution, TrialSpec, gen_instance
from .exceptions import DivergenceError, DomainError
from .gamp import MAX_SUM, SUM_PRODUCT, GAMPConfig, solve_gamp
from .lmmse import LMMSEConfig, solve_lmmse
from .mcmc import MCMCConfig, offdiag_stats, solve_mcmc
from .metrics import mse, support_error
from .posterior import Solution

logger = logging.getLogger(__name__)

RSBL_SOLVERS = ("da", "lmmse", "gamp-sp", "gamp-ms", "mcmc")
BASELINE_SOLVERS = ("nnomp", "l1", "nnls")
SOLVERS = RSBL_SOLVERS + BASELINE_SOLVERS

CSV_FIELDS = ("run_id", "solver", "K", "rho", "snr_db", "trial", "mse", "pe", "wall_ms",
              "iterations", "converged", "seed", "prune", "error")

# GAMP damping tried in turn after a divergence; correlated dictionaries start lower
DAMPING_LADDER = (0.9, 0.5, 0.15, 0.05)
CORRELATED_DAMPING = 0.5


def l1_lambda(problem, noiseless):
    """Penalty for the l1 baseline: ``sigma sqrt(2 log M)`` with noise, a
    vanishing fraction of ``||Phi^T y||_inf`` without."""
    if noiseless:
        return 1e-6 * float(np.max(np.abs(problem.dictionary.T @ problem.measurements)))
    return math.sqrt(problem.noise_variance * 2.0 * math.log(problem.m))


def _wrap(x, start, iterations=1, converged=True, info=None):
    return Solution(x_mean=x, x_mode=x, gamma_final=None, iterations=iterations,
                    converged=converged, wall_time=time.perf_counter() - start, info=info or {})


def run_solver(name, problem, prune=True, noiseless=False, correlated=False, seed=0, **overrides):
    """Run solver ``name`` on ``problem`` and return a :class:`Solution`.

    Baseline outputs are wrapped with ``x_mean == x_mode``. ``overrides``
    are passed to the solver's config dataclass. Unless a damping is given,
    GAMP walks down ``DAMPING_LADDER`` after each divergence; the reported
    wall time includes the failed attempts.
    """
    start = time.perf_counter()
    if name == "da":
        return solve_da(problem, DAConfig(prune=prune, **overrides))
    if name == "lmmse":
        return solve_lmmse(problem, LMMSEConfig(prune=prune, **overrides))
    if name in ("gamp-sp", "gamp-ms"):
        mode = SUM_PRODUCT if name == "gamp-sp" else MAX_SUM
        if "damping" in overrides:
            return solve_gamp(problem, GAMPConfig(mode=mode, prune=prune, **overrides))
        first = CORRELATED_DAMPING if correlated else DAMPING_LADDER[0]
        ladder = [d for d in DAMPING_LADDER if d <= first]
        for i, damping in enumerate(ladder):
            try:
                sol = solve_gamp(problem, GAMPConfig(mode=mode, prune=prune, damping=damping, **overrides))
            except DivergenceError:
                if i == len(ladder) - 1:
                    raise
                logger.info("GAMP diverged with damping %g, retrying with %g", damping, ladder[i + 1])
                continue
            sol.info["damping"] = damping
            sol.wall_time = time.perf_counter() - start
            return sol
    if name == "mcmc":
        opts = {"seed": seed}
        opts.update(overrides)
        return solve_mcmc(problem, MCMCConfig(prune=prune, **opts))
    if name == "nnomp":
        tol = 1e-10 if noiseless else math.sqrt(problem.n * problem.noise_variance)
        return _wrap(nn_omp(problem, residual_tol=overrides.get("residual_tol", tol)), start)
    if name == "l1":
        lam = overrides.get("lam", l1_lambda(problem, noiseless))
        x, info = l1_projected_gradient(problem, lam, return_info=True,
                                        max_iters=overrides.get("max_iters", 20000))
        return _wrap(x, start, info["iterations"], info["converged"], {"lam": lam})
    if name == "nnls":
        return _wrap(nnls_active_set(problem), start)
    raise DomainError(f"unknown solver {name!r}; choose from {', '.join(SOLVERS)}")


@dataclass
class TrialRecord:
    run_id: str
    solver: str
    K: int
    rho: float
    snr_db: float
    trial: int
    mse: float
    pe: float
    wall_ms: float
    iterations: int
    converged: bool
    seed: int
    prune: str = ""
    error: str = ""

    @property
    def failed(self):
        return bool(self.error)


def spec_to_dict(spec):
    d = asdict(spec)
    d["signal"]["params"] = dict(spec.signal.params)
    d["solvers"] = list(spec.solvers)
    return d


def run_id(spec):
    """Short stable identifier of a spec (hash of its canonical JSON)."""
    blob = json.dumps(spec_to_dict(spec), sort_keys=True).encode()
    return hashlib.sha1(blob).hexdigest()[:12]


def _run_trial(args):
    spec, trial, prune_modes, point, overrides = args
    problem, x_gen, meta = gen_instance(spec, trial)
    rid = run_id(spec)
    rows = []
    for name in spec.solvers:
        modes = prune_modes if name in RSBL_SOLVERS else (None,)
        for prune in modes:
            rec = dict(run_id=rid, solver=name, K=spec.k, rho=spec.dictionary.rho,
                       snr_db=spec.snr_db, trial=trial, seed=meta["seed"],
                       prune="" if prune is None else ("on" if prune else "off"))
            try:
                sol = run_solver(name, problem, prune=True if prune is None else prune,
                                 noiseless=spec.noiseless, correlated=spec.dictionary.correlated,
                                 seed=meta["seed"], **overrides.get(name, {}))
                x = sol.point_estimate(point)
                rec.update(mse=mse(x, x_gen), pe=support_error(x, x_gen),
                           wall_ms=1e3 * sol.wall_time, iterations=int(sol.iterations),
                           converged=bool(sol.converged))
            except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as err:
                logger.warning("trial %d solver %s failed: %s", trial, name, err)
                rec.update(mse=math.nan, pe=math.nan, wall_ms=math.nan, iterations=0,
                           converged=False, error=f"{type(err).__name__}: {err}")
            rows.append(TrialRecord(**rec))
    return trial, rows


def run_benchmark(specs, workers=1, prune_modes=(True,), point="mean", overrides=None):
    """Run every solver of every spec on every trial.

    Parameters
    ----------
    specs : TrialSpec or list of TrialSpec
    workers : int
        Size of the process pool; 1 runs inline.
    prune_modes : tuple of bool
        ``(True, False)`` also records unpruned R-SBL runs for timing comparison.
    point : {"mean", "mode"}
        Which R-SBL point estimate is scored.
    overrides : dict, optional
        Per-solver config overrides, e.g. ``{"gamp-sp": {"damping": 0.3}}``.

    Returns
    -------
    list of TrialRecord
        Ordered by spec, trial, then solver list order. Failed solver runs
        carry NaN metrics and a non-empty ``error``.
    """
    specs = [specs] if isinstance(specs, TrialSpec) else list(specs)
    overrides = overrides or {}
    jobs = [(s, t, tuple(prune_modes), point, overrides) for s in specs for t in range(s.trials)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_trial, jobs, chunksize=1))
    else:
        results = [_run_trial(j) for j in jobs]
    records = []
    for _, rows in results:
        records.extend(rows)
    return records


def _mean_se(values):
    v = np.asarray([x for x in values if not math.isnan(x)], dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


def summarize(records):
    """Aggregate means and standard errors per (solver, K, rho, snr_db, prune)."""
    groups = {}
    for r in records:
        groups.setdefault((r.solver, r.K, r.rho, r.snr_db, r.prune), []).append(r)
    out = []
    for key, rows in groups.items():
        ok = [r for r in rows if not r.failed]
        entry = dict(zip(("solver", "K", "rho", "snr_db", "prune"), key))
        for name in ("mse", "pe", "wall_ms", "iterations"):
            entry[name], entry[name + "_se"] = _mean_se([float(getattr(r, name)) for r in ok])
        entry.update(trials=len(rows), failed=len(rows) - len(ok),
                     converged_rate=(sum(r.converged for r in ok) / len(ok)) if ok else math.nan)
        out.append(entry)
    return out


def write_csv(records, stream, timing=True):
    """Write per-trial rows. With ``timing=False`` the ``wall_ms`` column is
    left empty so that repeated runs give byte-identical files."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in records:
        row = []
        for f in CSV_FIELDS:
            v = getattr(r, f)
            if f == "wall_ms" and not timing:
                v = ""
            elif f == "snr_db" and v is None:
                v = "noiseless"
            elif isinstance(v, float):
                v = repr(v)
            elif isinstance(v, bool):
                v = int(v)
            row.append(v)
        w.writerow(row)


def read_csv(stream):
    recs = []
    for row in csv.DictReader(stream):
        snr = row["snr_db"]
        wall = float(row["wall_ms"]) if row["wall_ms"] else math.nan
        recs.append(TrialRecord(
            run_id=row["run_id"], solver=row["solver"], K=int(row["K"]), rho=float(row["rho"]),
            snr_db=None if snr == "noiseless" else float(snr), trial=int(row["trial"]),
            mse=float(row["mse"]), pe=float(row["pe"]), wall_ms=wall,
            iterations=int(row["iterations"]), converged=bool(int(row["converged"])),
            seed=int(row["seed"]), prune=row.get("prune", ""), error=row.get("error", "")))
    return recs


def summary_json(records, specs):
    specs = [specs] if isinstance(specs, TrialSpec) else list(specs)
    doc = {
        "software": {"name": "snnls", "version": __version__},
        "conventions": {
            "mse": "mean over all M coefficients",
            "pe_support": "x_i > max(1e-4 * max|x_hat|, 1e-8)",
            "noiseless": "y = Phi x exactly, solvers use sigma2 = 1e-6",
        },
        "specs": [spec_to_dict(s) for s in specs],
        "groups": summarize(records),
    }
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True)


def format_table(summary):
    buf = io.StringIO()
    buf.write(f"{'solver':<8} {'K':>4} {'rho':>5} {'snr':>9} {'prune':>5} "
              f"{'MSE':>11} {'PE':>7} {'ms':>9} {'fail':>4}\n")
    for e in summary:
        snr = "noiseless" if e["snr_db"] is None else f"{e['snr_db']:g}"
        buf.write(f"{e['solver']:<8} {e['K']:>4} {e['rho']:>5.2f} {snr:>9} {e['prune'] or '-':>5} "
                  f"{e['mse']:>11.4g} {e['pe']:>7.4f} {e['wall_ms']:>9.1f} {e['failed']:>4}\n")
    return buf.getvalue()


# -- recipes -----------------------------------------------------------------

def _parse_list(text, cast):
    return [cast(v) for v in text.replace(" ", "").split(",") if v]


def parse_recipe(text):
    """Expand a ``key = value`` recipe into a list of :class:`TrialSpec`.

    ``k`` and ``rho`` accept comma-separated lists (one spec per
    combination). ``snr`` is a number in dB or ``noiseless``. Lines
    starting with ``#`` are comments.
    """
    kv = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"recipe line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        kv[key] = value
    known = {"n", "m", "k", "dist", "dict", "rho", "snr", "solvers", "trials", "seed", "normalize"}
    unknown = set(kv) - known
    if unknown:
        raise DomainError(f"unknown recipe keys: {', '.join(sorted(unknown))}")
    snr = kv.get("snr", "noiseless")
    base = dict(
        n=int(kv.get("n", 100)), m=int(kv.get("m", 400)),
        signal=SignalDistribution(kv.get("dist", "rect-gaussian")),
        snr_db=None if snr == "noiseless" else float(snr),
        solvers=tuple(_parse_list(kv.get("solvers", "da,lmmse,gamp-sp,l1,nnomp"), str)),
        trials=int(kv.get("trials", 10)), master_seed=int(kv.get("seed", 0)),
    )
    for s in base["solvers"]:
        if s not in SOLVERS:
            raise DomainError(f"unknown solver {s!r} in recipe")
    normalize = kv.get("normalize", "true").lower() in ("1", "true", "yes", "on")
    specs = []
    for rho in _parse_list(kv.get("rho", "0"), float):
        for k in _parse_list(kv.get("k", "10"), int):
            specs.append(TrialSpec(k=k, dictionary=DictionaryEnsemble(kv.get("dict", "gaussian"), rho, normalize),
                                   **base))
    return specs


def with_trials(specs, trials=None, seed=None):
    """Copies of ``specs`` with the trial count and/or master seed replaced."""
    out = []
    for s in specs:
        if trials is not None:
            s = replace(s, trials=trials)
        if seed is not None:
            s = replace(s, master_seed=seed)
        out.append(s)
    return out


# -- covariance diagnostic ------------------------------------------------------

DIAGNOSTIC_SPEC = TrialSpec(n=50, m=200, k=10, solvers=("mcmc",), trials=1)


def sigma_diagnostic(spec=None, cfg=None, trials=None):
    """Per-EM-iteration off-diagonal statistics of the MCMC-EM scale matrix.

    Runs MCMC-EM with the regularization switched off (the statistic is
    about the unregularized posterior scale matrix) and returns rows
    ``{trial, iteration, active, mean_abs_offdiag, frobenius_offdiag}``.
    """
    spec = DIAGNOSTIC_SPEC if spec is None else spec
    if cfg is None:
        cfg = MCMCConfig(regularize=False, max_em_iters=10, em_tol=1e-12)
    cfg = replace(cfg, diagnostics=True)
    rows = []
    for t in range(spec.trials if trials is None else trials):
        problem, _, meta = gen_instance(spec, t)
        sol = solve_mcmc(problem, replace(cfg, seed=meta["seed"]))
        for r in sol.info["sigma_diagnostics"]:
            rows.append({"trial": t, **r})
    return rows


__all__ = [
    "SOLVERS", "RSBL_SOLVERS", "BASELINE_SOLVERS", "CSV_FIELDS", "TrialRecord", "run_solver",
    "run_benchmark", "summarize", "write_csv", "read_csv", "summary_json", "format_table",
    "parse_recipe", "with_trials", "sigma_diagnostic", "offdiag_stats", "l1_lambda", "run_id",
]
