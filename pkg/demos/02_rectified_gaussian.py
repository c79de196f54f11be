"""
The rectified Gaussian and its moments
======================================

A rectified Gaussian N^R(x; mu, gamma) is a normal density cut at zero and
renormalised. Its moments go through h(a) = phi(a) / (1 - Phi(a)), which
must be evaluated with a scaled erfc to survive the tails.
"""

import numpy as np
from scipy import integrate

from snnls import channel_sum_product, g_func, h_ratio, rg_mean, rg_pdf, rg_second_moment, rgsm_example_pdf

# naive evaluation of h breaks down long before the stable one does
a = np.array([0.0, 5.0, 30.0, 40.0])
with np.errstate(all="ignore"):
    from scipy.stats import norm
    naive = norm.pdf(a) / norm.sf(a)
print("a        stable h(a)      naive h(a)")
for ai, hs, hn in zip(a, h_ratio(a), naive):
    print(f"{ai:5.1f}  {hs:14.8f}  {hn:14.8f}")
print("g(a) = 1 - h(h - a), the variance factor:", g_func(a))

# moments against quadrature of the density
mu, gamma = -1.5, 2.0
m1 = integrate.quad(lambda x: x * rg_pdf(x, mu, gamma), 0, np.inf)[0]
m2 = integrate.quad(lambda x: x * x * rg_pdf(x, mu, gamma), 0, np.inf)[0]
print(f"mean   closed form {rg_mean(mu, gamma):.12f}  quadrature {m1:.12f}")
print(f"E[x^2] closed form {rg_second_moment(mu, gamma):.12f}  quadrature {m2:.12f}")

# scale mixtures: an exponential mixing law gives the rectified Laplacian
for x in (0.2, 1.0, 3.0):
    print(f"rect-laplacian({x}) = {rgsm_example_pdf(x, 'rect-laplacian', lam=1.0):.6f}")

# the GAMP input channel is a rectified Gaussian in disguise
for r in (-3.0, 0.0, 3.0):
    xh, tx = channel_sum_product(r, 0.5, 1.0)
    print(f"channel r={r:+.1f}: mean {xh:.5f} var {tx:.5f}")
