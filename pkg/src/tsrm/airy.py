r"""Normalized Airy function and the spectrum of its derivative.

The normalized Airy function is the decaying solution of

.. math:: u''(h) = 2 h u(h), \qquad u(0) = 1,

i.e. :math:`u(h) = 3^{2/3}\Gamma(2/3)\,\mathrm{Ai}(2^{1/3}h)`.  The positive
numbers :math:`\delta'_k` are the consecutive zeros of :math:`h \mapsto u'(-h)`
and :math:`p_k = u'(0)^2 (\delta'_k)^{-4} / 2` are the mixture weights of the
position marginals.

Sums over the spectrum are truncated at ``k_max`` and completed by an
integral-comparison tail built on the leading zero asymptotics
:math:`\delta'_k \sim \tfrac12 (3\pi k)^{2/3}`, anchored at the last computed
zero.  The counting density of zeros is :math:`dk/d\delta = \sqrt{2\delta}/\pi`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy import special

from .errors import DomainError, SpectrumError

KAPPA = 2.0 ** (1.0 / 3.0)
U_NORM = 3.0 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0)
U_PRIME_0 = -(6.0 ** (1.0 / 3.0)) * math.gamma(2.0 / 3.0) / math.gamma(1.0 / 3.0)

# Above this argument Ai/Bi are returned exponentially scaled.
SCALE_THRESHOLD = 100.0

DEFAULT_K_MAX = 500

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)
_GL_Y = 0.5 * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS


def _check_finite(x):
    a = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(a)):
        raise DomainError("argument must be finite")
    return a


def _out(a):
    return float(a) if np.ndim(a) == 0 else a


@dataclass(frozen=True)
class AiryValues:
    """Ai, Ai', Bi, Bi' at ``z``.

    When ``scaled`` is set, ``ai``/``ai_prime`` carry a factor
    ``exp(+zeta)`` and ``bi``/``bi_prime`` a factor ``exp(-zeta)`` with
    ``zeta = 2 z**1.5 / 3``; the Wronskian is unaffected.
    """

    z: float
    ai: float
    ai_prime: float
    bi: float
    bi_prime: float
    scaled: bool = False

    @property
    def wronskian(self) -> float:
        return self.ai * self.bi_prime - self.ai_prime * self.bi


def airy_pair(z: float) -> AiryValues:
    """Airy functions of the first and second kind at a real point."""
    z = float(_check_finite(z))
    if z > SCALE_THRESHOLD:
        ai, aip, bi, bip = special.airye(z)
        return AiryValues(z, float(ai), float(aip), float(bi), float(bip), True)
    ai, aip, bi, bip = special.airy(z)
    return AiryValues(z, float(ai), float(aip), float(bi), float(bip), False)


def u(h):
    """Normalized Airy function; accepts scalars or arrays."""
    h = _check_finite(h)
    return _out(U_NORM * special.airy(KAPPA * h)[0])


def u_prime(h):
    h = _check_finite(h)
    return _out(U_NORM * KAPPA * special.airy(KAPPA * h)[1])


def u_second(h):
    """u'' from the differential equation, ``2 h u(h)``."""
    h = _check_finite(h)
    return _out(2.0 * h * U_NORM * special.airy(KAPPA * h)[0])


def log_u(h):
    """log u(h) for h >= 0, valid far beyond the underflow of u."""
    h = _check_finite(h)
    if np.any(h < 0):
        raise DomainError("log_u requires h >= 0")
    z = KAPPA * h
    zeta = 2.0 / 3.0 * z ** 1.5
    return _out(math.log(U_NORM) + np.log(special.airye(z)[0]) - zeta)


# ---------------------------------------------------------------------------
# Spectrum
# ---------------------------------------------------------------------------

def asymptotic_zero(k):
    r"""Leading asymptotic :math:`\tfrac12 (3\pi k)^{2/3}` of the k-th zero."""
    return 0.5 * (3.0 * math.pi * np.asarray(k, dtype=float)) ** (2.0 / 3.0)


def _g(h):
    # h -> u'(-h), whose zeros are the delta'_k
    return U_NORM * KAPPA * special.airy(-KAPPA * h)[1]


def _dg(h):
    return 2.0 * h * U_NORM * special.airy(-KAPPA * h)[0]


def _refine_zeros(lo, hi, maxiter=200):
    """Vectorized safeguarded Newton on g over brackets [lo, hi].

    Each bracket must hold a sign change of g; steps leaving the bracket are
    replaced by bisection.
    """
    glo = _g(lo)
    ghi = _g(hi)
    bad = np.sign(glo) == np.sign(ghi)
    if np.any(bad):
        k = int(np.argmax(bad)) + 1
        raise SpectrumError(f"no sign change of u'(-h) in bracket of zero {k}")
    lo = lo.copy()
    hi = hi.copy()
    neg_at_lo = glo < 0
    x = hi.copy()
    gx = ghi.copy()
    active = np.ones_like(x, dtype=bool)
    for _ in range(maxiter):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        xa, ga = x[idx], gx[idx]
        da = _dg(xa)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = ga / da
        xn = xa - step
        outside = ~np.isfinite(xn) | (xn <= lo[idx]) | (xn >= hi[idx])
        mid = 0.5 * (lo[idx] + hi[idx])
        xn = np.where(outside, mid, xn)
        gn = _g(xn)
        # keep the bracket around the sign change
        below = (gn < 0) == neg_at_lo[idx]
        lo[idx] = np.where(below, xn, lo[idx])
        hi[idx] = np.where(below, hi[idx], xn)
        done = (np.abs(xn - xa) <= 4e-16 * xn) | (gn == 0) | (hi[idx] - lo[idx] <= 4e-16 * xn)
        x[idx] = xn
        gx[idx] = gn
        active[idx[done]] = False
    if active.any():
        raise SpectrumError(f"{int(active.sum())} zeros did not converge")
    return x


class TailSum(NamedTuple):
    """Truncated sum completed by its integral-comparison tail."""

    value: float
    bound: float


@dataclass(frozen=True, eq=False)
class SpectralData:
    r"""Zeros :math:`\delta'_k`, weights :math:`p_k` and the p-tail.

    ``tail_estimate`` approximates :math:`\sum_{k>k_{max}} p_k`; ``tail_bound``
    is the width of the integral-comparison enclosure of that remainder.
    """

    k_max: int
    delta_prime: np.ndarray
    p: np.ndarray
    tail_estimate: float
    tail_bound: float

    def tail_start(self, offset: float = 0.5) -> float:
        """Continuous interpolation of the zero counting at ``k_max + offset``."""
        d = float(self.delta_prime[-1])
        return 0.5 * ((2.0 * d) ** 1.5 + 3.0 * math.pi * offset) ** (2.0 / 3.0)

    def power_tail(self, n: float) -> TailSum:
        r"""Tail of :math:`\sum_k (\delta'_k)^{-n}` beyond ``k_max``."""
        if n <= 1.5:
            raise DomainError("tail of sum delta^-n diverges for n <= 3/2")

        def integral(a):
            return math.sqrt(2.0) / math.pi * a ** (1.5 - n) / (n - 1.5)

        mid = integral(self.tail_start(0.5))
        width = integral(self.tail_start(0.0)) - integral(self.tail_start(1.0))
        return TailSum(mid, width)

    def weighted_tail(self, n: float, g: Callable, x) -> np.ndarray:
        r"""Approximate :math:`\sum_{k>k_{max}} (\delta'_k)^{-n} g(\delta'_k x)`.

        The sum is replaced by the integral against the zero counting density,
        mapped to [0, 1] so that the result is a weighted mean of ``g``.
        """
        if n <= 1.5:
            raise DomainError("tail of sum delta^-n diverges for n <= 3/2")
        a = self.tail_start(0.5)
        x = np.abs(np.asarray(x, dtype=float))
        scale = math.sqrt(2.0) / math.pi * a ** (1.5 - n) / (n - 1.5)
        delta = a * _GL_Y ** (-1.0 / (n - 1.5))
        vals = g(np.multiply.outer(x, delta))
        return scale * (vals @ _GL_W)


@lru_cache(maxsize=16)
def spectrum(k_max: int = DEFAULT_K_MAX) -> SpectralData:
    r"""First ``k_max`` zeros of :math:`h \mapsto u'(-h)` and their weights.

    Zero ``k`` is sought in the bracket
    :math:`[\tfrac12(3\pi(k-1))^{2/3}, \tfrac12(3\pi k)^{2/3}]`, one asymptotic
    gap wide, with Newton seeded at the upper end.  Every bracket is checked
    for a sign change before refinement, so no zero can be skipped.
    """
    k_max = int(k_max)
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    k = np.arange(1, k_max + 1, dtype=float)
    delta = _refine_zeros(asymptotic_zero(k - 1.0), asymptotic_zero(k))
    if np.any(np.diff(delta) <= 0):
        raise SpectrumError("zeros are not strictly increasing")
    delta.setflags(write=False)
    p = 0.5 * U_PRIME_0 ** 2 * delta ** -4.0
    p.setflags(write=False)
    data = SpectralData(k_max, delta, p, 0.0, 0.0)
    tail = data.power_tail(4.0)
    c = 0.5 * U_PRIME_0 ** 2
    return SpectralData(k_max, delta, p, c * tail.value, c * tail.bound)


def trace_sum(n: float, k_max: int = DEFAULT_K_MAX) -> TailSum:
    r""":math:`\sum_k (\delta'_k)^{-n}` with the integral-comparison tail.

    Returns the completed sum and the width of the tail enclosure.  Closed
    values: ``-2/u'(0)`` for n=2, ``2`` for n=3, ``2/u'(0)**2`` for n=4.
    """
    if n < 2:
        raise DomainError("trace sums require n >= 2")
    data = spectrum(k_max)
    head = math.fsum(data.delta_prime[::-1] ** (-float(n)))
    tail = data.power_tail(float(n))
    return TailSum(head + tail.value, tail.bound)


def trace_target(n: int) -> float:
    """Closed form of the first three trace sums."""
    targets = {2: -2.0 / U_PRIME_0, 3: 2.0, 4: 2.0 / U_PRIME_0 ** 2}
    if n not in targets:
        raise DomainError("closed trace values are known for n in {2, 3, 4}")
    return targets[n]


class KeyIdentityResidual(NamedTuple):
    residual: float
    tail_bound: float
    corrected: float


def key_identity_residual(z: float, k_max: int = DEFAULT_K_MAX) -> KeyIdentityResidual:
    r"""Residual of :math:`u''/u' = -\sum_k \delta_k'^{-1} z/(\delta'_k + z)`.

    ``residual`` uses the sum truncated at ``k_max``; ``tail_bound`` bounds
    the omitted terms, and ``corrected`` is the residual after adding their
    integral-comparison estimate (available for z >= 0, otherwise equal to
    ``residual``).
    """
    z = float(_check_finite(z))
    data = spectrum(k_max)
    d = data.delta_prime
    if np.any(np.isclose(d + z, 0.0, rtol=0.0, atol=1e-12)):
        raise DomainError("z is a pole of the key identity")
    lhs = u_second(z) / u_prime(z)
    rhs = -math.fsum(z / (d * (d + z)))
    if z > -d[0]:
        # omitted terms are bounded by |z| * sum_{k>K} delta^-2 / (1 - |z|/delta_K)
        t2 = data.power_tail(2.0)
        tail = abs(z) * (t2.value + t2.bound)
        if z < 0:
            tail /= 1.0 + z / float(d[-1])
    else:
        tail = math.inf
    corrected = abs(lhs - rhs)
    if z > 0:
        est = z * float(data.weighted_tail(2.0, lambda y: y / (1.0 + y), 1.0 / z))
        corrected = abs(lhs - rhs + est)
    return KeyIdentityResidual(abs(lhs - rhs), tail, corrected)


# ---------------------------------------------------------------------------
# Companion solution v_lambda
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompanionSolution:
    r"""Solution of the Airy equation with :math:`v(\lambda)=u(\lambda)`,
    :math:`v'(\lambda)=-u'(\lambda)`, stored as
    ``c1 * Ai(2**(1/3) t) + c2 * Bi(2**(1/3) t)``.
    """

    lam: float
    c1: float
    c2: float

    def __call__(self, t):
        return v_lambda_eval(self, t)

    def derivative(self, t):
        t = _check_finite(t)
        _, aip, _, bip = special.airy(KAPPA * t)
        return _out(KAPPA * (self.c1 * aip + self.c2 * bip))


def companion(lam: float) -> CompanionSolution:
    lam = float(_check_finite(lam))
    if lam <= 0:
        raise DomainError("companion solution requires lambda > 0")
    ai, aip, bi, bip = special.airy(KAPPA * lam)
    a, ap = ai, KAPPA * aip
    b, bp = bi, KAPPA * bip
    w = KAPPA / math.pi  # Wronskian of Ai(kt), Bi(kt)
    v, vp = u(lam), -u_prime(lam)
    c1 = (v * bp - vp * b) / w
    c2 = (a * vp - ap * v) / w
    return CompanionSolution(lam, float(c1), float(c2))


def v_lambda_eval(sol: CompanionSolution, t):
    t = _check_finite(t)
    ai, _, bi, _ = special.airy(KAPPA * t)
    return _out(sol.c1 * ai + sol.c2 * bi)
