"""Self-checks behind ``tsrm selftest``.

``quick`` covers the kernels and closed-form identities (well under a
minute); ``full`` adds the PDE, a reduced Brownian Monte Carlo and a reduced
lattice-walk ensemble.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from . import airy, marginals, pde, special, transforms

_Q = {"epsabs": 1e-13, "epsrel": 1e-12, "limit": 400}


def _check(name, value, target, tol, relative=False):
    err = abs(value - target) / (abs(target) if relative else 1.0)
    return {"name": name, "value": float(value), "target": float(target),
            "error": float(err), "tolerance": tol, "passed": bool(err <= tol)}


def quick_checks():
    out = []
    for n in (2, 3, 4):
        t = airy.trace_sum(n, 50_000)
        out.append(_check(f"trace_sum({n})", t.value, airy.trace_target(n), 1e-8, relative=True))
    data = airy.spectrum(airy.DEFAULT_K_MAX)
    out.append(_check("sum p_k + tail", data.p.sum() + data.tail_estimate, 1.0, 1e-6))
    for z in (-3.0, 0.0, 2.0):
        out.append(_check(f"airy wronskian({z})", airy.airy_pair(z).wronskian, 1.0 / math.pi, 1e-12))
    out.append(_check("u''(1) = 2 u(1)", airy.u_second(1.0), 2.0 * airy.u(1.0), 1e-12))

    norms = {
        "nu1": 2.0 * integrate.quad(marginals.nu1, 0.0, 12.0, points=[0.5, 2.0, 5.0], **_Q)[0],
        "nu2": integrate.quad(marginals.nu2, 0.0, 6.0, points=[1.0, 2.0], **_Q)[0],
        "nu1_hat": 2.0 * integrate.quad(marginals.nu1_hat, 0.0, 60.0, points=[0.5, 2.0, 5.0], **_Q)[0],
        "nu2_hat": integrate.quad(marginals.nu2_hat, 0.0, 9.0, points=[1.0, 2.0], **_Q)[0],
    }
    out += [_check(f"normalization {k}", v, 1.0, 1e-6) for k, v in norms.items()]
    for n in range(1, 7):
        q = integrate.quad(lambda h: h ** n * marginals.nu2(h), 0.0, 6.0, points=[1.0, 2.0], **_Q)[0]
        out.append(_check(f"E H^{n}", q, marginals.moment_H(n), 1e-5, relative=True))
    for n in (1, 2):
        q = 2.0 * integrate.quad(lambda x: x ** n * marginals.nu1(x), 0.0, 14.0, points=[0.5, 2.0, 5.0], **_Q)[0]
        out.append(_check(f"E|X|^{n}", q, marginals.moment_absX(n), 1e-5, relative=True))
    for h in (0.5, 1.0, 2.0):
        out.append(_check(f"exp-time transform nu2 at {h}",
                          transforms.exp_time_transform(marginals.nu2, 1.0 / 3.0, h), marginals.nu2_hat(h), 1e-6))
        out.append(_check(f"convolution route nu2 at {h}", transforms.nu2_from_convolution(h),
                          marginals.nu2(h), 1e-6, relative=True))
    for x in (0.5, 1.0):
        out.append(_check(f"exp-time transform nu1 at {x}",
                          transforms.exp_time_transform(marginals.nu1, 2.0 / 3.0, x), marginals.nu1_hat(x), 1e-6))
    for lam in (0.5, 1.0, 2.0):
        out.append(_check(f"phi_tilde({lam}, 0) = w_tilde", transforms.phi_tilde(lam, 0.0),
                          marginals.w_tilde(lam), 1e-6))
    out.append(_check("kummer U(1/2,4/3;1)", special.kummer_residual(0.5, 4.0 / 3.0, 1.0), 0.0, 1e-10))
    for kind in ("height", "position"):
        r = marginals.tail_report(kind)
        out.append(_check(f"tail constant {kind}", r.fitted_slope, r.constant, 0.03, relative=True))
    x = np.arange(0.0, 0.0105, 1e-3)
    v = marginals.nu1(x)
    # even density with a strict minimum at 0: increasing just right of 0
    out.append({"name": "nu1 local minimum at 0", "value": float(np.min(np.diff(v))), "target": 0.0,
                "error": 0.0, "tolerance": 0.0, "passed": bool(np.all(np.diff(v) > 0))})
    return out


def full_checks(seed: int):
    from .stochastic import brownian, gof, tsaw

    f = pde.solve_phi()
    H = pde.pde_height_marginal(f)
    hs = np.array([0.0, 0.5, 1.0, 2.0])
    j = np.rint(hs / f.dh).astype(int)
    out = [_check("pde height marginal", float(np.max(np.abs(H[j] - marginals.nu2_hat(hs)))), 0.0, 1e-3)]
    ens = brownian.simulate_paths(0.5, [0.0, 0.5, 1.0], 20_000, 1e-4, seed)
    mu, se = ens.estimate("u")
    out.append(_check("MC u(0.5) within 3 s.e.", (mu - airy.u(0.5)) / se, 0.0, 3.0))
    walks = tsaw.tsaw_ensemble(10_000, 20_000, seed=seed)
    x, h = tsaw.rescale(walks)
    out.append(_check("TSAW positions KS vs nu1", gof.calibrate_and_test(x, "nu1").ks_statistic, 0.0, 0.05))
    out.append(_check("TSAW heights KS vs nu2", gof.calibrate_and_test(h, "nu2").ks_statistic, 0.0, 0.05))
    return out


def run(level: str = "quick", seed: int = 0):
    checks = quick_checks()
    if level == "full":
        checks += full_checks(seed)
    return checks
