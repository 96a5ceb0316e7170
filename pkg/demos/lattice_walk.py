"""A true self-avoiding walk against the limit laws.

Each walk prefers the less-crossed of its two adjacent bonds.  After scaling
by n^(2/3) (position) and n^(1/3) (local time at the current site) and fitting
one scale constant, the samples are compared with nu1 and nu2.
"""
import numpy as np

from tsrm import marginals
from tsrm.stochastic import gof, tsaw

ens = tsaw.tsaw_ensemble(20_000, 20_000, seed=3)
x, h = tsaw.rescale(ens)
for samples, kind in ((x, "nu1"), (h, "nu2")):
    r = gof.calibrate_and_test(samples, kind)
    print(f"{kind}: KS distance {r.ks_statistic:.4f}, fitted alpha {r.alpha_hat:.3f}")
    z = r.calibrated_scale * samples
    edges = np.linspace(-3, 3, 13) if kind == "nu1" else np.linspace(0, 2.4, 13)
    counts, _ = np.histogram(z, edges)
    mids = 0.5 * (edges[1:] + edges[:-1])
    dens = counts / (z.size * np.diff(edges))
    for m, d, e in zip(mids, dens, marginals.density(kind, mids)):
        print(f"  {m:+5.2f}  {'#' * int(60 * d)}  {d:.3f} (limit {e:.3f})")
