import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from snnls import DomainError, RGParams
from snnls.rgmath import (ASYMPTOTIC_SWITCH, g_func, h_minus_a, h_ratio, rg_mean, rg_pdf,
                          rg_second_moment, rg_variance, rgsm_example_pdf)

mp.mp.dps = 80


def mp_h(a):
    a = mp.mpf(a)
    return mp.npdf(a) / (mp.erfc(a / mp.sqrt(2)) / 2)


def mp_g(a):
    h = mp_h(a)
    return 1 - h * (h - mp.mpf(a))


# -- examples ---------------------------------------------------------------------------

def test_pdf_examples():
    assert rg_pdf(0.0, 0.0, 1.0) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-14)
    assert rg_pdf(-1.0, 0.0, 1.0) == 0.0
    assert rg_pdf(1.0, 0.0, 1.0) == pytest.approx(0.483941449, rel=1e-8)
    assert rg_pdf(1.0, RGParams(0.0, 1.0)) == rg_pdf(1.0, 0.0, 1.0)


def test_mean_examples():
    assert rg_mean(0.0, 1.0) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-14)
    assert rg_mean(0.0, 4.0) == pytest.approx(math.sqrt(8 / math.pi), rel=1e-14)
    ref = integrate.quad(lambda x: x * math.exp(-0.5 * x * x - 10 * x), 0, 50, epsrel=1e-13)[0] / \
        integrate.quad(lambda x: math.exp(-0.5 * x * x - 10 * x), 0, 50, epsrel=1e-13)[0]
    assert rg_mean(-10.0, 1.0) == pytest.approx(ref, rel=1e-10)
    assert rg_mean(-10.0, 1.0) == pytest.approx(0.0981, abs=1e-4)


def test_second_moment_examples():
    assert rg_second_moment(0.0, 1.0) == pytest.approx(1.0, rel=1e-14)
    assert rg_second_moment(0.0, 2.0) == pytest.approx(2.0, rel=1e-14)
    num = integrate.quad(lambda x: x * x * math.exp(-0.5 * (x - 1) ** 2), 0, 50, epsrel=1e-13)[0]
    den = integrate.quad(lambda x: math.exp(-0.5 * (x - 1) ** 2), 0, 50, epsrel=1e-13)[0]
    assert rg_second_moment(1.0, 1.0) == pytest.approx(num / den, rel=1e-10)


def test_second_moment_identity():
    # E[x^2] = Sigma + mu E[x] for the zero-truncated normal
    mu = np.linspace(-5, 5, 21)
    for var in (0.3, 1.0, 7.0):
        np.testing.assert_allclose(rg_second_moment(mu, var), var + mu * rg_mean(mu, var), rtol=1e-12)


def test_h_examples():
    assert h_ratio(0.0) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-14)
    assert 0 < h_ratio(-30.0) < 1e-100
    assert h_ratio(30.0) == pytest.approx(30.0333, abs=1e-4)
    assert h_ratio(30.0) == pytest.approx(float(mp_h(30)), rel=1e-14)


def test_g_examples():
    assert g_func(0.0) == pytest.approx(1 - 2 / math.pi, rel=1e-14)
    assert g_func(-30.0) == pytest.approx(1.0, abs=1e-15)
    # variance of a standard normal truncated to z > 2
    w = lambda z: math.exp(-0.5 * z * z)
    z0 = integrate.quad(w, 2, np.inf, epsrel=1e-13)[0]
    m1 = integrate.quad(lambda z: z * w(z), 2, np.inf, epsrel=1e-13)[0] / z0
    var = integrate.quad(lambda z: (z - m1) ** 2 * w(z), 2, np.inf, epsrel=1e-13)[0] / z0
    assert g_func(2.0) == pytest.approx(var, rel=1e-10)


@pytest.mark.parametrize("a", [-37.0, -30.0, -8.0, -1.0, 0.5, 3.0, 12.0, 25.9, 26.1, 40.0, 1e3, 1e8])
def test_h_g_against_extended_precision(a):
    # erfcx at large negative arguments carries the rounding of exp(a^2 / 2)
    rel = 1e-13 if a > -8 else 5e-12
    assert h_ratio(a) == pytest.approx(float(mp_h(a)), rel=rel, abs=0)
    assert float(h_minus_a(a)) == pytest.approx(float(mp_h(a) - a), rel=1e-11, abs=0)
    assert g_func(a) == pytest.approx(float(mp_g(a)), rel=1e-10, abs=0)


def test_asymptotic_switch_is_continuous():
    below = np.nextafter(ASYMPTOTIC_SWITCH, 0)
    for f in (h_ratio, g_func):
        assert f(below) == pytest.approx(f(ASYMPTOTIC_SWITCH), rel=1e-10)


def test_vectorized_matches_scalar():
    a = np.array([-5.0, 0.0, 3.0, 30.0])
    np.testing.assert_array_equal(h_ratio(a), [h_ratio(v) for v in a])
    np.testing.assert_array_equal(g_func(a), [g_func(v) for v in a])


def test_domain_errors():
    with pytest.raises(DomainError):
        RGParams(0.0, -1.0)
    with pytest.raises(DomainError):
        rg_pdf(np.nan, 0.0, 1.0)
    with pytest.raises(DomainError):
        rg_mean(0.0, 0.0)
    with pytest.raises(DomainError):
        rgsm_example_pdf(1.0, "rect-laplacian", lam=-1.0)


# -- scale mixtures --------------------------------------------------------------------

def test_laplacian_examples():
    assert rgsm_example_pdf(0.0, "rect-laplacian", lam=1.0) == pytest.approx(1.0)
    assert rgsm_example_pdf(1.0, "rect-laplacian", lam=2.0) == pytest.approx(2 * math.exp(-2), rel=1e-14)
    assert rgsm_example_pdf(-1.0, "rect-laplacian", lam=2.0) == 0.0


@pytest.mark.parametrize("x", [0.1, 0.7, 2.5])
def test_laplacian_is_exponential_mixture(x):
    lam = 1.3
    # N^R(x; 0, gamma) mixed over gamma ~ Exponential with rate lam^2 / 2
    mix = integrate.quad(lambda g: float(rg_pdf(x, 0.0, g)) * 0.5 * lam ** 2 * math.exp(-0.5 * lam ** 2 * g),
                         0, np.inf, epsabs=0, epsrel=1e-12, limit=200)[0]
    assert rgsm_example_pdf(x, "rect-laplacian", lam=lam) == pytest.approx(mix, rel=1e-8)


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (2.5, 0.7)])
def test_student_t_is_precision_gamma_mixture(a, b):
    def mixed(x):
        # precision tau = 1 / gamma ~ Gamma(shape a, rate b)
        f = lambda tau: float(rg_pdf(x, 0.0, 1.0 / tau)) * math.exp(
            a * math.log(b) - math.lgamma(a) + (a - 1) * math.log(tau) - b * tau)
        return integrate.quad(f, 0, np.inf, epsabs=0, epsrel=1e-12, limit=200)[0]
    for x in (0.0, 0.5, 3.0):
        assert rgsm_example_pdf(x, "rect-student-t", a=a, b=b) == pytest.approx(mixed(x), rel=1e-8)
    mass = integrate.quad(lambda x: rgsm_example_pdf(x, "rect-student-t", a=a, b=b), 0, np.inf,
                          epsrel=1e-11)[0]
    assert mass == pytest.approx(1.0, rel=1e-8)


# -- properties ----------------------------------------------------------------------------

ratios = st.floats(-20, 20, allow_nan=False)
scales = st.floats(1e-4, 1e4, allow_nan=False)


@given(ratios, scales)
@settings(max_examples=100, deadline=None)
def test_pdf_normalizes(c, gamma):
    sd = math.sqrt(gamma)
    mu = c * sd
    hi = c + 40 if c > 0 else 40.0
    pts = [c] if c > 0 else [min(1.0 / max(-c, 1e-3), 20.0)]
    mass = integrate.quad(lambda t: float(rg_pdf(sd * t, mu, gamma)) * sd, max(0.0, c - 40), hi,
                          points=pts, epsabs=0, epsrel=1e-12, limit=400)[0]
    assert mass == pytest.approx(1.0, rel=1e-8)


@given(ratios, scales)
@settings(max_examples=200, deadline=None)
def test_moment_consistency(c, gamma):
    mu = c * math.sqrt(gamma)
    m1, m2, var = rg_mean(mu, gamma), rg_second_moment(mu, gamma), rg_variance(mu, gamma)
    assert m1 > 0 and m2 > 0 and 0 < var <= gamma * (1 + 1e-12)
    assert m2 >= m1 * m1 * (1 - 1e-12)
    assert var == pytest.approx(m2 - m1 * m1, rel=1e-6, abs=1e-12 * m2)


@given(st.floats(-40, 1e6, allow_nan=False))
@settings(max_examples=200, deadline=None)
def test_h_g_bounds(a):
    h, g = h_ratio(a), g_func(a)
    assert h >= max(a, 0.0)  # h underflows to 0 below about -37.5
    # g rounds to exactly 1 far in the left tail
    assert 0.0 < g <= 1.0
    if a > -5:
        assert g < 1.0


def test_h_monotone_and_tends_to_a():
    a = np.linspace(-37, 200, 20001)  # h underflows below about -37.5
    h = h_ratio(a)
    assert np.all(np.diff(h) > 0)
    assert np.all(np.diff(h_minus_a(a[a > 0])) < 0)
    assert h_minus_a(1e6) < 1.1e-6
