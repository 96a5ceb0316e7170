"""Monte Carlo check of the Airy function through Brownian areas.

u(h) = E[exp(-area under |B| until B hits 0)], started at h.  A few tens of
thousands of paths already pin u to three digits.
"""
from tsrm import airy, marginals
from tsrm.stochastic import brownian

for h in (0.25, 0.5, 1.0):
    mu, se = brownian.mc_estimate("u", 20_000, 1e-4, seed=1, h=h)
    print(f"u({h}) = {airy.u(h):.5f}   MC {mu:.5f} +- {se:.5f}")

mu, se = brownian.mc_estimate("w", 20_000, 1e-4, seed=2, x=1.0)
print(f"w(1)   = {marginals.w_of_x(1.0):.5f}   MC {mu:.5f} +- {se:.5f}")
