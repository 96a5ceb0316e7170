r"""Laplace-side objects and integral transforms.

* ``phi_tilde``: Laplace transform in x of phi, built from u and the
  companion solution ``v_lambda`` (Green's function of the resolvent).
* ``kearney_f`` and its self-convolution, the inverse-Laplace route from
  ``u(h**(1/3))`` to the height density at time one.
* ``exp_time_transform``: the map from a fixed-time density to the density
  at an independent exponential time.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import integrate

from . import airy
from .errors import DomainError, RangeError
from .special import tricomi_u

_QUAD = {"epsabs": 0.0, "epsrel": 1e-12, "limit": 400}


# u(chi) u(lam + chi) < 1e-30 well before this point
_CHI_MAX = 9.0


def phi_tilde(lam: float, h: float, chi_max: float | None = None) -> float:
    r""":math:`\tilde\varphi(\lambda, h) = \int_0^\infty e^{-\lambda x}\varphi(x, h)\,dx`.

    Uses the Green's function of :math:`\tfrac12\partial_h^2 - h - \lambda`
    with Neumann condition at 0::

        -1/(u(l) u'(l)) * ( u(l+h) [I0 + int_0^h v(l+c) u(c) dc]
                            + v(l+h) int_h^inf u(l+c) u(c) dc )

    where ``I0 = int_0^inf u(l+c) u(c) dc`` and ``v`` is the companion
    solution.  Integrals are truncated at ``chi_max``, beyond which the
    integrand is below 1e-30.
    """
    lam = float(lam)
    h = float(h)
    if not lam > 0:
        raise DomainError("phi_tilde requires lambda > 0")
    if not (math.isfinite(h) and h >= 0):
        raise DomainError("phi_tilde requires h >= 0")
    cmax = _CHI_MAX if chi_max is None else float(chi_max)
    if cmax <= h:
        cmax = h + _CHI_MAX
    sol = airy.companion(lam)

    def uu(c):
        return float(airy.u(lam + c) * airy.u(c))

    def vu(c):
        return float(sol(lam + c) * airy.u(c))

    i0 = integrate.quad(uu, 0.0, cmax, **_QUAD)[0]
    inner = integrate.quad(vu, 0.0, h, **_QUAD)[0] if h > 0 else 0.0
    outer = integrate.quad(uu, h, cmax, **_QUAD)[0]
    ul, upl = float(airy.u(lam)), float(airy.u_prime(lam))
    return -(float(airy.u(lam + h)) * (i0 + inner) + float(sol(lam + h)) * outer) / (ul * upl)


# ---------------------------------------------------------------------------
# Inverse-Laplace route for the height density
# ---------------------------------------------------------------------------

_KF_A = 2.0 / 9.0


def _kearney_shape(s):
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.where(s > 0, s ** (-4.0 / 3.0) * np.exp(-_KF_A / np.where(s > 0, s, 1.0)), 0.0)
    return out


@lru_cache(maxsize=1)
def kearney_constant() -> float:
    r"""C such that :math:`\int_0^\infty e^{-s} f(s)\,ds = u(1)`."""
    # s = exp(t) tames both ends
    def integrand(t):
        s = math.exp(t)
        return math.exp(-s - _KF_A / s - t / 3.0)

    val = integrate.quad(integrand, -8.0, 5.0, epsabs=0.0, epsrel=1e-13, limit=400)[0]
    return float(airy.u(1.0)) / val


def kearney_f(s):
    r""":math:`f(s) = C s^{-4/3} e^{-2/(9s)}`, the inverse Laplace transform of
    :math:`z \mapsto u(z^{1/3})`."""
    s = np.asarray(s, dtype=float)
    if np.any(~np.isfinite(s)) or np.any(s <= 0):
        raise DomainError("kearney_f requires s > 0")
    out = kearney_constant() * _kearney_shape(s)
    return float(out) if out.ndim == 0 else out


def kearney_laplace(z: float) -> float:
    """Numerical Laplace transform of ``kearney_f`` at ``z > 0``."""
    if not z > 0:
        raise DomainError("Laplace argument must be positive")

    def integrand(t):
        s = math.exp(t)
        return math.exp(-z * s - _KF_A / s - t / 3.0)

    hi = math.log(60.0 / z) + 1.0
    return kearney_constant() * integrate.quad(integrand, -8.0, hi, epsabs=0.0, epsrel=1e-13, limit=400)[0]


def f_convolution_direct(s: float) -> float:
    r""":math:`(f*f)(s) = 2\int_0^{s/2} f(t) f(s-t)\,dt` by adaptive quadrature."""
    s = float(s)
    if not s > 0:
        raise DomainError("f_convolution requires s > 0")
    c = kearney_constant()

    def integrand(t):
        return float(_kearney_shape(t) * _kearney_shape(s - t))

    # the integrand vanishes faster than any power at t = 0
    val = integrate.quad(integrand, 0.0, 0.5 * s, epsabs=0.0, epsrel=1e-12, limit=400,
                         points=[min(0.1, 0.25 * s)])[0]
    return 2.0 * c * c * val


_CONV_PREFACTOR = 2.0 * 4.0 ** (1.0 / 3.0) * math.sqrt(math.pi) * (9.0 / 8.0) ** (1.0 / 3.0)


def f_convolution(s: float) -> float:
    r"""Closed form :math:`C^2 K s^{-4/3} e^{-8/(9s)} U(1/6, 2/3; 8/(9s))`."""
    s = float(s)
    if not s > 0:
        raise DomainError("f_convolution requires s > 0")
    z = 8.0 / (9.0 * s)
    if z > 745.0:
        return 0.0
    c = kearney_constant()
    return c * c * _CONV_PREFACTOR * s ** (-4.0 / 3.0) * math.exp(-z) * tricomi_u(1.0 / 6.0, 2.0 / 3.0, z)


def nu2_from_convolution(h: float, direct: bool = True) -> float:
    """Height density at time one as 3 h^-4 (f*f)(h^-3)."""
    h = float(h)
    if not h > 0:
        raise DomainError("convolution route needs h > 0")
    conv = f_convolution_direct if direct else f_convolution
    return 3.0 * h ** -4.0 * conv(h ** -3.0)


# ---------------------------------------------------------------------------
# Exponential-time transforms
# ---------------------------------------------------------------------------

_T_MAX = 60.0


def exp_time_transform(density, exponent: float, a: float) -> float:
    r""":math:`\int_0^\infty e^{-t} t^{-\beta} g(t^{-\beta} a)\,dt`.

    The substitution :math:`t = \tau^{1/(1-\beta)}` removes the
    :math:`t^{-\beta}` singularity; the integral is cut at t = 60 where the
    weight is below 1e-26.

    Parameters
    ----------
    density : callable
        Density ``g`` at time one, evaluated at scalars.
    exponent : float
        ``1/3`` for the height, ``2/3`` for the position.
    a : float
        Argument of the transformed density.
    """
    beta = float(exponent)
    if not 0.0 < beta < 1.0:
        raise DomainError("exponent must lie in (0, 1)")
    a = float(a)
    p = 1.0 / (1.0 - beta)

    def integrand(tau):
        if tau == 0.0:
            return 0.0
        t = tau ** p
        try:
            val = math.exp(-t) * float(density(t ** (-beta) * a)) * p
        except OverflowError:
            val = math.inf
        if not math.isfinite(val):
            raise RangeError("transform integrand is not finite")
        return val

    tau_max = _T_MAX ** (1.0 - beta)
    tail = integrand(tau_max)
    if not math.isfinite(tail) or abs(tail) > 1e-12:
        raise RangeError("integrand does not decay within the quadrature horizon")
    if a == 0.0:
        # g is evaluated at 0 throughout: the t-integral is Gamma(1 - beta) g(0)
        return math.gamma(1.0 - beta) * float(density(0.0))
    pts = [tau for tau in (0.5, 1.0, 2.0) if tau < tau_max]
    return integrate.quad(integrand, 0.0, tau_max, epsabs=1e-14, epsrel=1e-11, limit=400, points=pts)[0]


def numerical_laplace(grid, values, lam: float, decay: float | None = None) -> float:
    r"""Trapezoidal :math:`\int e^{-\lambda x} g(x)\,dx` of a tabulated function.

    If ``decay`` is given, the table is continued beyond its last point as
    ``g(x_end) exp(-decay (x - x_end))``; otherwise the table must already
    have decayed.
    """
    x = np.asarray(grid, dtype=float)
    g = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.shape != g.shape[:1] or x.size < 3:
        raise DomainError("grid and values must be matching 1-d tables")
    if not lam > 0:
        raise DomainError("lambda must be positive")
    w = np.exp(-lam * x)
    body = np.trapezoid(w[:, None] * g.reshape(x.size, -1), x, axis=0)
    end = w[-1] * g.reshape(x.size, -1)[-1]
    if decay is None:
        if np.any(np.abs(end) > 1e-10 * np.abs(body).max()):
            raise RangeError("table has not decayed; pass the decay rate of its tail")
        tail = 0.0
    else:
        tail = end / (lam + decay)
    out = body + tail
    return float(out[0]) if g.ndim == 1 else out
