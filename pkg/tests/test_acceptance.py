"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The benchmark criteria run at the stated trial counts, so this module
dominates the suite's runtime (tens of minutes on one core).
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate

from snnls import (DictionaryEnsemble, Problem, HyperParams, SignalDistribution, TrialSpec,
                   g_func, h_ratio, posterior_stats, rg_mean, rg_pdf, rg_second_moment,
                   run_benchmark, sample_tmvn_gibbs, sigma_diagnostic)
from snnls.gamp import channel_sum_product

pytestmark = pytest.mark.acceptance


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def means(records, point="mse"):
    out = {}
    for r in records:
        if not r.failed:
            out.setdefault((r.solver, r.prune), []).append(getattr(r, point))
    return {k[0] if k[1] in ("", "on") else k: float(np.mean(v)) for k, v in out.items()}


def failures(records):
    return sum(r.failed for r in records)


# -- 1: scalar math ------------------------------------------------------------

def _std_moments(m):
    """Quadrature moments of N(m, 1) restricted to t >= 0: (mass scale, E t, E t^2).

    The weight is rescaled by exp(m^2/2) for m < 0 so nothing underflows.
    """
    if m >= 0:
        w = lambda t: math.exp(-0.5 * (t - m) ** 2)
        lo, hi, pts = max(0.0, m - 40.0), m + 40.0, [m]
    else:
        w = lambda t: math.exp(-0.5 * t * t + m * t)
        lo, hi, pts = 0.0, 40.0, [min(1.0 / -m, 40.0)]
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=400, points=pts)
    i0 = integrate.quad(w, lo, hi, **opts)[0]
    i1 = integrate.quad(lambda t: t * w(t), lo, hi, **opts)[0] / i0
    i2 = integrate.quad(lambda t: t * t * w(t), lo, hi, **opts)[0] / i0
    return i1, i2


def _h_oracle(a):
    # h(a) = 1 / int_0^inf exp(-s^2/2 - a s) ds
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=400)
    return 1.0 / integrate.quad(lambda s: math.exp(-0.5 * s * s - a * s), 0, np.inf, **opts)[0]


def _g_oracle(a):
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=400)
    w = lambda s: math.exp(-0.5 * s * s - a * s)
    i0 = integrate.quad(w, 0, np.inf, **opts)[0]
    m1 = integrate.quad(lambda s: s * w(s), 0, np.inf, **opts)[0] / i0
    return integrate.quad(lambda s: (s - m1) ** 2 * w(s), 0, np.inf, **opts)[0] / i0


def test_criterion_01_scalar_math(report):
    t0 = time.perf_counter()
    worst = {"pdf_norm": 0.0, "mean": 0.0, "second": 0.0, "h": 0.0, "g": 0.0}
    ratios = np.linspace(-20, 20, 41)
    for gamma in (1e-4, 1e-2, 1.0, 1e2, 1e4):
        sd = math.sqrt(gamma)
        for c in ratios:
            mu = c * sd
            e1, e2 = _std_moments(c)
            worst["mean"] = max(worst["mean"], rel(float(rg_mean(mu, gamma)), sd * e1))
            worst["second"] = max(worst["second"], rel(float(rg_second_moment(mu, gamma)), gamma * e2))
            if c >= 0:
                lo, hi, pts = max(0.0, c - 40), c + 40, [c]
            else:
                lo, hi, pts = 0.0, 40.0 / -c + 10.0, [1.0 / -c]
            mass = integrate.quad(lambda t: float(rg_pdf(sd * t, mu, gamma)) * sd, lo, hi,
                                  points=pts, epsabs=0.0, epsrel=1e-12, limit=400)[0]
            worst["pdf_norm"] = max(worst["pdf_norm"], abs(mass - 1.0))
    for a in ratios:
        worst["h"] = max(worst["h"], rel(float(h_ratio(a)), _h_oracle(a)))
        worst["g"] = max(worst["g"], rel(float(g_func(a)), _g_oracle(a)))
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) < 1e-8 and elapsed < 60
    report(1, ok, "max rel err " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items())
           + f"; {elapsed:.1f}s")
    assert ok


# -- 2: posterior ----------------------------------------------------------------

def test_criterion_02_posterior_oracle(report):
    rng = np.random.default_rng(20160)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 21))
        m = int(rng.integers(1, 41))
        phi = rng.standard_normal((n, m))
        y = rng.standard_normal(n)
        sigma2 = 10 ** rng.uniform(-2, 0)
        gamma = 10 ** rng.uniform(-2, 1, m)
        st = posterior_stats(Problem(phi, y, sigma2), HyperParams(gamma))
        info = np.diag(1.0 / gamma) + phi.T @ phi / sigma2
        sigma = np.linalg.inv(info)
        mu = sigma @ phi.T @ y / sigma2
        worst = max(worst, np.linalg.norm(st.sigma - sigma) / np.linalg.norm(sigma),
                    np.linalg.norm(st.mu - mu) / max(np.linalg.norm(mu), 1e-300))
    ok = worst < 1e-10
    report(2, ok, f"max relative Frobenius error {worst:.2e} over 50 problems")
    assert ok


# -- 3: GAMP channel ---------------------------------------------------------------

def _channel_oracle(r, tau_r, gamma):
    # product density x >= 0: exp(-x^2/(2 gamma) - (x - r)^2/(2 tau_r)), i.e. N(eta, nu) truncated
    eta = r * gamma / (tau_r + gamma)
    nu = tau_r * gamma / (tau_r + gamma)
    sd = math.sqrt(nu)
    e1, e2 = _std_moments(eta / sd)
    return sd * e1, nu * (e2 - e1 * e1)


def test_criterion_03_gamp_channel(report):
    t0 = time.perf_counter()
    worst_x = worst_t = 0.0
    for r in np.linspace(-20, 20, 81):
        for tau_r in (0.01, 1.0, 100.0):
            for gamma in (0.01, 1.0, 100.0):
                x, t = channel_sum_product(r, tau_r, gamma)
                ox, ot = _channel_oracle(r, tau_r, gamma)
                worst_x = max(worst_x, rel(x, ox))
                worst_t = max(worst_t, rel(t, ot))
    elapsed = time.perf_counter() - t0
    ok = max(worst_x, worst_t) < 1e-6 and elapsed < 60
    report(3, ok, f"max rel err x_hat={worst_x:.1e}, tau_x={worst_t:.1e}; {elapsed:.1f}s")
    assert ok


# -- 4: Gibbs sampler ----------------------------------------------------------------

def _chain_check(kept, targets):
    """z-scores of per-quantity chain means against oracle values."""
    zs = []
    for f, target in targets:
        per_chain = f(kept).mean(axis=0)  # (chains,)
        se = per_chain.std(ddof=1) / math.sqrt(per_chain.size)
        zs.append(abs(per_chain.mean() - target) / se)
    return zs


def test_criterion_04_gibbs_oracle(report):
    t0 = time.perf_counter()
    zs = []
    # 1-D cases against the closed forms (checked against quadrature in criterion 1)
    for mu, var in ((0.0, 1.0), (-3.0, 0.5), (2.0, 4.0), (-50.0, 1.0)):
        kept = sample_tmvn_gibbs([mu], [[var]], 100_000, seed=41, n_chains=100, return_chains=True)
        zs += _chain_check(kept, [(lambda k: k[..., 0], float(rg_mean(mu, var))),
                                  (lambda k: k[..., 0] ** 2, float(rg_second_moment(mu, var)))])
    # 2-D correlated case against quadrature over the positive quadrant
    cov = np.array([[1.0, 0.5], [0.5, 1.0]])
    prec = np.linalg.inv(cov)
    dens = lambda b, a: math.exp(-0.5 * (prec[0, 0] * a * a + 2 * prec[0, 1] * a * b + prec[1, 1] * b * b))
    q = lambda f: integrate.dblquad(lambda b, a: f(a, b) * dens(b, a), 0, 12, 0, 12,
                                    epsabs=1e-13, epsrel=1e-11)[0]
    z0 = q(lambda a, b: 1.0)
    oracle = {"x1": q(lambda a, b: a) / z0, "x2": q(lambda a, b: b) / z0,
              "x1x1": q(lambda a, b: a * a) / z0, "x1x2": q(lambda a, b: a * b) / z0,
              "x2x2": q(lambda a, b: b * b) / z0}
    kept = sample_tmvn_gibbs([0.0, 0.0], cov, 100_000, seed=42, burn_in=2_000, n_chains=100,
                             return_chains=True)
    zs += _chain_check(kept, [
        (lambda k: k[..., 0], oracle["x1"]), (lambda k: k[..., 1], oracle["x2"]),
        (lambda k: k[..., 0] ** 2, oracle["x1x1"]), (lambda k: k[..., 0] * k[..., 1], oracle["x1x2"]),
        (lambda k: k[..., 1] ** 2, oracle["x2x2"])])
    elapsed = time.perf_counter() - t0
    ok = max(zs) < 3.0 and elapsed < 120
    report(4, ok, f"max |z| = {max(zs):.2f} over {len(zs)} moments (limit 3); {elapsed:.1f}s")
    assert ok


# -- 5: noiseless recovery versus cardinality -------------------------------------------

NOISELESS = dict(n=100, m=400, trials=100, master_seed=2016,
            solvers=("da", "gamp-sp", "lmmse", "l1", "nnomp"))


def test_criterion_05_noiseless_recovery(report):
    t0 = time.perf_counter()
    small = run_benchmark(TrialSpec(k=10, **NOISELESS))
    large = run_benchmark(TrialSpec(k=50, **NOISELESS))
    elapsed = time.perf_counter() - t0
    m10, p10 = means(small, "mse"), means(small, "pe")
    m50, p50 = means(large, "mse"), means(large, "pe")
    checks = {}
    for s in ("da", "gamp-sp", "lmmse"):
        checks[f"K10 {s} mse {m10[s]:.1e}<=1e-3"] = m10[s] <= 1e-3
        checks[f"K10 {s} pe {p10[s]:.3f}<=0.02"] = p10[s] <= 0.02
    checks[f"K50 da {m50['da']:.4f} <= gamp {m50['gamp-sp']:.4f}"] = m50["da"] <= m50["gamp-sp"]
    checks[f"gamp <= lmmse {m50['lmmse']:.4f}"] = m50["gamp-sp"] <= m50["lmmse"]
    checks[f"lmmse < l1 {m50['l1']:.4f}"] = m50["lmmse"] < m50["l1"]
    checks[f"l1 < nnomp {m50['nnomp']:.4f}"] = m50["l1"] < m50["nnomp"]
    checks[f"da within 2x of 0.0279"] = 0.0279 / 2 <= m50["da"] <= 0.0279 * 2
    checks[f"{elapsed / 60:.1f} min <= 30"] = elapsed <= 1800
    ok = all(checks.values()) and failures(small) + failures(large) == 0
    failed = [k for k, v in checks.items() if not v]
    report(5, ok, "; ".join(checks) + (f" || failing: {failed}" if failed else ""))
    assert ok


# -- 6: distribution sweep ---------------------------------------------------------------

def test_criterion_06_distribution_sweep(report):
    rows, checks = {}, {}
    for kind in ("nn-laplace", "nn-gamma", "chi-square-2", "bernoulli-two-point"):
        rec = run_benchmark(TrialSpec(k=50, signal=SignalDistribution(kind), **NOISELESS))
        rows[kind] = (means(rec, "mse"), means(rec, "pe"), failures(rec))
    for kind, (mm, pp, nfail) in rows.items():
        base_m = min(mm["l1"], mm["nnomp"])
        base_p = min(pp["l1"], pp["nnomp"])
        for s in ("da", "gamp-sp", "lmmse"):
            checks[f"{kind} {s} mse {mm[s]:.4f}<{base_m:.4f}"] = mm[s] < base_m
            checks[f"{kind} {s} pe {pp[s]:.3f}<{base_p:.3f}"] = pp[s] < base_p
        checks[f"{kind} no failed runs"] = nfail == 0
    cont_pe = np.mean([rows[k][1]["da"] for k in ("nn-laplace", "nn-gamma", "chi-square-2")])
    checks[f"bernoulli degraded: da pe {rows['bernoulli-two-point'][1]['da']:.3f} > {cont_pe:.3f}"] = (
        rows["bernoulli-two-point"][1]["da"] > cont_pe)
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    report(6, ok, f"{sum(checks.values())}/{len(checks)} checks" +
           (f" || failing: {failed}" if failed else ""))
    assert ok


# -- 7: noisy recovery ---------------------------------------------------------------------

def test_criterion_07_noisy(report):
    rec = run_benchmark(TrialSpec(k=30, snr_db=20.0, **NOISELESS))
    mm, pp = means(rec, "mse"), means(rec, "pe")
    checks = {}
    for s in ("da", "gamp-sp", "lmmse"):
        checks[f"{s} mse {mm[s]:.4f}<{min(mm['l1'], mm['nnomp']):.4f}"] = mm[s] < min(mm["l1"], mm["nnomp"])
        checks[f"{s} pe {pp[s]:.3f}<{min(pp['l1'], pp['nnomp']):.3f}"] = pp[s] < min(pp["l1"], pp["nnomp"])
    ok = all(checks.values()) and failures(rec) == 0
    report(7, ok, "; ".join(checks) + f"; l1 pe {pp['l1']:.3f}, nnomp pe {pp['nnomp']:.3f}")
    assert ok


# -- 8: coherence sweep -------------------------------------------------------------------------

def test_criterion_08_coherence(report):
    pes = {}
    checks = {}
    for rho in (0.6, 0.8, 0.9, 0.98):
        spec = TrialSpec(k=50, dictionary=DictionaryEnsemble("gaussian", rho),
                         **{**NOISELESS, "trials": 50, "solvers": ("da", "lmmse", "l1", "nnomp")})
        rec = run_benchmark(spec)
        pp = means(rec, "pe")
        pes[rho] = pp
        checks[f"rho {rho}: da {pp['da']:.3f} < l1 {pp['l1']:.3f} < nnomp {pp['nnomp']:.3f}"] = (
            pp["da"] < pp["l1"] < pp["nnomp"])
        checks[f"rho {rho} no failed runs"] = failures(rec) == 0
    for s in ("da", "lmmse"):
        change = abs(pes[0.98][s] - pes[0.6][s]) / pes[0.6][s]
        checks[f"{s} pe change {pes[0.6][s]:.3f}->{pes[0.98][s]:.3f} = {100 * change:.0f}% < 50%"] = change < 0.5
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    report(8, ok, "; ".join(k for k in checks if "failed" not in k) +
           (f" || failing: {failed}" if failed else ""))
    assert ok


# -- 9: pruning ----------------------------------------------------------------------------------

def test_criterion_09_pruning(report):
    worst = 0.0
    times = {}
    for k in (10, 20, 30):
        spec = TrialSpec(k=k, **{**NOISELESS, "trials": 10, "solvers": ("da", "gamp-sp", "lmmse")})
        rec = run_benchmark(spec, prune_modes=(True, False))
        by = {(r.solver, r.trial, r.prune): r for r in rec}
        for (s, t, pr), r in by.items():
            if pr == "on":
                worst = max(worst, abs(r.mse - by[(s, t, "off")].mse))
                times.setdefault((s, k), [0.0, 0.0])[0] += r.wall_ms
            else:
                times.setdefault((s, k), [0.0, 0.0])[1] += r.wall_ms
    slower = [f"{s} K={k}" for (s, k), (on, off) in times.items() if on > off]
    ok = worst < 1e-6 and not slower
    speed = ", ".join(f"{s} K={k} {off / on:.1f}x" for (s, k), (on, off) in sorted(times.items()))
    report(9, ok, f"max |mse(pruned) - mse(unpruned)| = {worst:.1e}; speed-up {speed}")
    assert ok


# -- 10: covariance diagnostic ----------------------------------------------------------------------

def test_criterion_10_sigma_diagnostic(report):
    rows = sigma_diagnostic(trials=3)
    curve = {}
    for r in rows:
        curve.setdefault(r["iteration"], []).append(r["mean_abs_offdiag"])
    first, tenth = np.mean(curve[1]), np.mean(curve[10])
    drop = first / tenth
    ok = drop >= 100.0
    report(10, ok, f"mean |offdiag| it1 {first:.2e} -> it10 {tenth:.2e} (drop {drop:.1f}x, need >= 100x)")
    assert ok
