r"""Closed-form marginal densities of the position and the local-time height.

At time one (no hat) and at an independent exponential time of rate one
(hat):

* height at exponential time: :math:`\hat\nu_2(h) = -2u(h)u'(h)`;
* height at time one: :math:`\nu_2(h) = C_2 e^{-8h^3/9}U(1/6, 2/3; 8h^3/9)`;
* position at exponential time: :math:`\hat\nu_1(x) = \sum_k p_k \tfrac{\delta'_k}{2} e^{-\delta'_k|x|}`;
* position at time one: :math:`\nu_1(x) = \sum_k p_k \tfrac{\delta'_k}{2} f_{2/3}(\delta'_k|x|)`.

The spectral sums run over the zeros of :mod:`tsrm.airy` up to ``k_max``
plus the integral-comparison tail of :meth:`SpectralData.weighted_tail`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize, special

from . import airy
from .airy import DEFAULT_K_MAX, U_PRIME_0
from .errors import DomainError, RangeError
from .special import ML23_SWITCH, log_ml23_density, ml23_density, tricomi_u

NU2_CONST = 2.0 * 6.0 ** (1.0 / 3.0) * math.sqrt(math.pi) / math.gamma(1.0 / 3.0) ** 2

HEIGHT_TAIL = 8.0 / 9.0

# sum_k p_k delta_k / 2 * g(...) = _HALF_UP2 * sum_k delta_k^-3 * g(...)
_HALF_UP2 = 0.25 * U_PRIME_0 ** 2

# Default cubic-fit windows for the tail constants.
HEIGHT_FIT_RANGE = (2.5, 4.0)
POSITION_FIT_RANGE = (6.0, 10.0)


class MarginalKind(str, enum.Enum):
    POSITION_FIXED = "nu1"
    HEIGHT_FIXED = "nu2"
    POSITION_EXP = "nu1_hat"
    HEIGHT_EXP = "nu2_hat"

    @property
    def is_position(self) -> bool:
        return self in (MarginalKind.POSITION_FIXED, MarginalKind.POSITION_EXP)

    @property
    def is_exponential_time(self) -> bool:
        return self in (MarginalKind.POSITION_EXP, MarginalKind.HEIGHT_EXP)


def _out(a):
    return float(a) if np.ndim(a) == 0 else a


def _nonneg(h, name="h"):
    h = np.asarray(h, dtype=float)
    if not np.all(np.isfinite(h)):
        raise DomainError(f"{name} must be finite")
    if np.any(h < 0):
        raise DomainError(f"{name} must be >= 0")
    return h


def _finite(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("argument must be finite")
    return x


# ---------------------------------------------------------------------------
# Height marginals
# ---------------------------------------------------------------------------

def nu2_hat(h):
    """Density of the height at an independent rate-one exponential time."""
    h = _nonneg(h)
    return _out(-2.0 * airy.u(h) * airy.u_prime(h))


def nu2(h):
    """Density of the height at time one."""
    h = _nonneg(h)
    z = 8.0 * h ** 3 / 9.0
    out = np.zeros_like(z)
    live = z < 745.0
    zl = z[live]
    out[live] = NU2_CONST * np.exp(-zl) * tricomi_u(1.0 / 6.0, 2.0 / 3.0, zl)
    return _out(out)


def log_nu2(h):
    h = _nonneg(h)
    z = 8.0 * h ** 3 / 9.0
    return _out(math.log(NU2_CONST) - z + np.log(tricomi_u(1.0 / 6.0, 2.0 / 3.0, z)))


def nu2_hat_ode_residual(h, step: float = 1e-3):
    r"""Finite-difference residual of :math:`(u^2 (u^{-2}\hat\nu_2)')' + 4u^2`.

    The flux :math:`u^2 q'` with :math:`q = \hat\nu_2/u^2` is differenced at
    the half points; the residual is O(step**2).
    """
    h = _nonneg(h)
    hh = np.maximum(h, step)

    def q(t):
        return nu2_hat(t) / airy.u(t) ** 2

    def flux(t):
        return airy.u(t) ** 2 * (q(t + 0.5 * step) - q(t - 0.5 * step)) / step

    lhs = (flux(hh + 0.5 * step) - flux(hh - 0.5 * step)) / step
    return _out(np.abs(lhs + 4.0 * airy.u(hh) ** 2))


# ---------------------------------------------------------------------------
# Position marginals
# ---------------------------------------------------------------------------

def _spectral_sum(n: float, g, x, k_max: int, chunk: int = 256):
    """sum_k delta_k^-n g(delta_k |x|) including the spectral tail."""
    data = airy.spectrum(k_max)
    d = data.delta_prime
    w = d ** (-float(n))
    x = np.abs(np.asarray(x, dtype=float))
    flat = x.ravel()
    out = np.empty_like(flat)
    for lo in range(0, flat.size, chunk):
        xs = flat[lo:lo + chunk]
        out[lo:lo + chunk] = g(np.multiply.outer(xs, d)) @ w + data.weighted_tail(n, g, xs)
    return out.reshape(x.shape)


def _exp_neg(z):
    return np.exp(-z)


def nu1_hat(x, k_max: int = DEFAULT_K_MAX):
    """Density of the position at an independent rate-one exponential time."""
    x = _finite(x)
    return _out(_HALF_UP2 * _spectral_sum(3.0, _exp_neg, x, k_max))


def nu1(x, k_max: int = DEFAULT_K_MAX):
    """Density of the position at time one (even, wedge-shaped minimum at 0)."""
    x = _finite(x)
    return _out(_HALF_UP2 * _spectral_sum(3.0, ml23_density, x, k_max))


def spectral_tail_bound(k_max: int = DEFAULT_K_MAX) -> float:
    """Bound on the tail part of the pointwise position densities.

    The tail terms are at most ``sup g = 1`` times the tail of the weights,
    so the width of that enclosure plus the estimate itself bounds the error.
    """
    t = airy.spectrum(k_max).power_tail(3.0)
    return _HALF_UP2 * (t.value + t.bound)


def w_of_x(x, k_max: int = DEFAULT_K_MAX):
    r""":math:`w(x) = \varphi(x, 0) = \tfrac{|u'(0)|}{2}\sum_k \delta_k'^{-2} e^{-\delta'_k x}`."""
    x = _nonneg(x, "x")
    return _out(0.5 * abs(U_PRIME_0) * _spectral_sum(2.0, _exp_neg, x, k_max))


def w_tilde(lam):
    r"""Laplace transform of ``w``, ``(u'(l) - u'(0) u(l)) / (l u'(l))``.

    At ``lam == 0`` the removable singularity is replaced by its limit
    ``-u'(0)``.
    """
    lam = _nonneg(lam, "lambda")
    out = np.empty_like(lam)
    zero = lam == 0
    out[zero] = -U_PRIME_0
    lp = lam[~zero]
    upl = airy.u_prime(lp)
    out[~zero] = (upl - U_PRIME_0 * airy.u(lp)) / (lp * upl)
    return _out(out)


def w_tilde_series(lam, k_max: int = DEFAULT_K_MAX):
    r"""Spectral form :math:`\tfrac{|u'(0)|}{2}\sum_k \delta_k'^{-2}/(\delta'_k+\lambda)`."""
    lam = _nonneg(lam, "lambda")

    # delta^-2 / (delta + lam) = delta^-3 * g(delta / lam) with g(y) = y / (1 + y)
    def g(y):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(np.isinf(y), 1.0, y / (1.0 + y))

    with np.errstate(divide="ignore"):
        inv = np.where(lam == 0, np.inf, 1.0 / np.where(lam == 0, 1.0, lam))
    data = airy.spectrum(k_max)
    d = data.delta_prime
    flat = inv.ravel()
    out = np.array([
        (g(d * t) * d ** -3.0).sum() + data.weighted_tail(3.0, g, t)[()] if np.isfinite(t)
        else (d ** -3.0).sum() + data.power_tail(3.0).value
        for t in flat
    ])
    return _out(0.5 * abs(U_PRIME_0) * out.reshape(inv.shape))


# ---------------------------------------------------------------------------
# Moments
# ---------------------------------------------------------------------------

def moment_H(n: int) -> float:
    """E[H(1)^n] in closed form."""
    if n < 0:
        raise DomainError("moment order must be >= 0")
    return math.gamma(5.0 / 6.0) * (2.0 * 3.0 ** (1.0 / 3.0)) ** (-n) * math.factorial(n) / (
        math.gamma(n / 3.0 + 1.0) * math.gamma(n / 3.0 + 5.0 / 6.0)
    )


def moment_absX(n: int, k_max: int = DEFAULT_K_MAX) -> float:
    """E[|X(1)|^n] from the spectral series (tail included)."""
    if n < 0:
        raise DomainError("moment order must be >= 0")
    data = airy.spectrum(k_max)
    power = n + 4.0
    s = math.fsum(data.delta_prime[::-1] ** -power) + data.power_tail(power).value
    return 0.5 * U_PRIME_0 ** 2 * s * math.factorial(n) / math.gamma(2.0 * n / 3.0 + 1.0)


def moment_absX_hat(n: int, k_max: int = DEFAULT_K_MAX) -> float:
    """E[|X_hat|^n] at exponential time: sum_k p_k n! / delta_k^n."""
    data = airy.spectrum(k_max)
    power = n + 4.0
    s = math.fsum(data.delta_prime[::-1] ** -power) + data.power_tail(power).value
    return 0.5 * U_PRIME_0 ** 2 * s * math.factorial(n)


# ---------------------------------------------------------------------------
# Rescaling to arbitrary time / rate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScaledDensityQuery:
    kind: MarginalKind
    t_or_s: float
    argument: float


def density(kind, x, k_max: int = DEFAULT_K_MAX):
    kind = MarginalKind(kind)
    if kind is MarginalKind.POSITION_FIXED:
        return nu1(x, k_max)
    if kind is MarginalKind.POSITION_EXP:
        return nu1_hat(x, k_max)
    if kind is MarginalKind.HEIGHT_FIXED:
        return nu2(x)
    return nu2_hat(x)


def density_at_time(q: ScaledDensityQuery, k_max: int = DEFAULT_K_MAX) -> float:
    """Marginal density at time t (fixed-time kinds) or rate s (hat kinds)."""
    kind = MarginalKind(q.kind)
    if not q.t_or_s > 0:
        raise DomainError("time / rate must be positive")
    c = q.t_or_s
    if kind is MarginalKind.POSITION_FIXED:
        f = c ** (-2.0 / 3.0)
    elif kind is MarginalKind.HEIGHT_FIXED:
        f = c ** (-1.0 / 3.0)
    elif kind is MarginalKind.POSITION_EXP:
        f = c ** (2.0 / 3.0)
    else:
        f = c ** (1.0 / 3.0)
    return f * density(kind, f * q.argument, k_max)


# ---------------------------------------------------------------------------
# Distribution functions
# ---------------------------------------------------------------------------

def _quad(fn, a, b, **kw):
    kw.setdefault("epsabs", 1e-14)
    kw.setdefault("epsrel", 1e-12)
    kw.setdefault("limit", 400)
    return integrate.quad(lambda t: float(fn(t)), a, b, **kw)[0]


def _position_half_mass(a: float, k_max: int, kind: MarginalKind) -> float:
    """P(0 < X < a) for a >= 0."""
    if kind is MarginalKind.POSITION_EXP:
        def g(z):
            return -np.expm1(-z)
        # p_k / 2 (1 - e^{-delta a}) = (u'(0)^2/4) delta^-4 g
        return float(_HALF_UP2 * _spectral_sum(4.0, g, a, k_max))
    pts = [p for p in (0.5, 2.0, 5.0) if p < a]
    return _quad(lambda t: nu1(t, k_max), 0.0, a, points=pts or None)


def cdf(kind, a: float, k_max: int = DEFAULT_K_MAX) -> float:
    """Distribution function of a marginal."""
    kind = MarginalKind(kind)
    a = float(_finite(a))
    if kind.is_position:
        half = _position_half_mass(abs(a), k_max, kind)
        return 0.5 + math.copysign(half, a) if a != 0 else 0.5
    if a <= 0:
        return 0.0
    if kind is MarginalKind.HEIGHT_EXP:
        return 1.0 - airy.u(a) ** 2
    if a > 1.5:
        return 1.0 - math.exp(log_survival(kind, a, k_max))
    return _quad(nu2, 0.0, a)


def quantile(kind, p: float, k_max: int = DEFAULT_K_MAX) -> float:
    """Inverse of :func:`cdf` by bracketed root finding."""
    kind = MarginalKind(kind)
    if not 0.0 < p < 1.0:
        raise DomainError("p must lie in (0, 1)")
    lo, hi = (-1.0, 1.0) if kind.is_position else (0.0, 1.0)
    while cdf(kind, hi, k_max) < p:
        hi *= 2.0
    while kind.is_position and cdf(kind, lo, k_max) > p:
        lo *= 2.0
    return optimize.brentq(lambda t: cdf(kind, t, k_max) - p, lo, hi, xtol=1e-13, rtol=1e-14)


def log_survival(kind, a: float, k_max: int = DEFAULT_K_MAX) -> float:
    """log P(Y > a) for a > 0, stable deep into the tail."""
    kind = MarginalKind(kind)
    if not a > 0:
        raise DomainError("log_survival needs a > 0")
    if kind is MarginalKind.HEIGHT_FIXED:
        return _log_tail_integral(log_nu2, a, slope=8.0 / 3.0 * a * a)
    if kind is MarginalKind.HEIGHT_EXP:
        return 2.0 * airy.log_u(a)
    if kind is MarginalKind.POSITION_EXP:
        d = airy.spectrum(k_max).delta_prime
        p = airy.spectrum(k_max).p
        return float(special.logsumexp(np.log(0.5 * p) - d * a))
    data = airy.spectrum(k_max)
    terms = []
    for dk, pk in zip(data.delta_prime, data.p):
        y = dk * a
        if y < ML23_SWITCH:
            # bulk of f_{2/3}: direct survival mass
            s = 1.0 - _quad(ml23_density, 0.0, y)
            terms.append(math.log(0.5 * pk) + math.log(s))
        else:
            t = _log_tail_integral(log_ml23_density, y, slope=4.0 / 9.0 * y * y)
            terms.append(math.log(0.5 * pk) + t)
        if terms[-1] < terms[0] - 60.0:
            break
    return float(special.logsumexp(terms))


def _log_tail_integral(log_f, a: float, slope: float) -> float:
    """log of int_a^inf exp(log_f), integrating the integrand scaled by f(a)."""
    la = float(log_f(a))
    length = 60.0 / max(slope, 1e-3)

    def scaled(t):
        return math.exp(float(log_f(t)) - la)

    val = integrate.quad(scaled, a, a + length, epsabs=0.0, epsrel=1e-11, limit=400)[0]
    return la + math.log(val)


@dataclass(frozen=True)
class TailReport:
    kind: str
    constant: float
    fitted_slope: float
    fit_range: tuple
    constants: dict = field(default_factory=dict)

    @property
    def relative_error(self) -> float:
        return abs(self.fitted_slope - self.constant) / self.constant


def tail_constants(k_max: int = DEFAULT_K_MAX) -> dict:
    d1 = float(airy.spectrum(k_max).delta_prime[0])
    return {
        "height": HEIGHT_TAIL,
        "position": 4.0 / 27.0 * d1 ** 3,
        "position_stationary": 8.0 / 27.0 * d1 ** 3,
    }


def tail_report(kind, fit_range=None, n_points: int = 16, k_max: int = DEFAULT_K_MAX) -> TailReport:
    """Least-squares fit of -log P(Y > a) against a**3 over ``fit_range``.

    ``kind`` is ``"height"`` (H(1)) or ``"position"`` (X(1)); the fitted
    cubic coefficient is returned next to the closed-form constant.
    """
    if isinstance(kind, MarginalKind):
        kind = "position" if kind.is_position else "height"
    if kind not in ("height", "position"):
        raise DomainError("tail kind must be 'height' or 'position'")
    if fit_range is None:
        fit_range = HEIGHT_FIT_RANGE if kind == "height" else POSITION_FIT_RANGE
    lo, hi = map(float, fit_range)
    if not (lo >= 1.0 and hi - lo >= 0.5) or n_points < 4:
        raise RangeError("fit range too small for a cubic-slope estimate")
    consts = tail_constants(k_max)
    mk = MarginalKind.HEIGHT_FIXED if kind == "height" else MarginalKind.POSITION_FIXED
    a = np.linspace(lo, hi, n_points)
    y = np.array([-log_survival(mk, t, k_max) for t in a])
    slope = float(np.polyfit(a ** 3, y, 1)[0])
    return TailReport(kind, consts[kind], slope, (lo, hi), consts)


# ---------------------------------------------------------------------------
# Tabulated distribution functions (KS tests, inverse-cdf sampling)
# ---------------------------------------------------------------------------

_TABLE_EXTENT = {
    MarginalKind.POSITION_FIXED: 8.0,
    MarginalKind.HEIGHT_FIXED: 5.0,
    MarginalKind.POSITION_EXP: 40.0,
    MarginalKind.HEIGHT_EXP: 6.0,
}


@lru_cache(maxsize=16)
def cdf_table(kind, n_points: int = 4001, k_max: int = DEFAULT_K_MAX):
    """Distribution function on a grid of |a| (``a >= 0``), read-only arrays.

    For the even position laws the table holds P(Y <= a) for a >= 0.
    """
    kind = MarginalKind(kind)
    a = np.linspace(0.0, _TABLE_EXTENT[kind], n_points)
    if kind is MarginalKind.HEIGHT_EXP:
        F = 1.0 - airy.u(a) ** 2
    elif kind is MarginalKind.POSITION_EXP:
        F = 0.5 + _HALF_UP2 * _spectral_sum(4.0, lambda z: -np.expm1(-z), a, k_max)
    else:
        dens = nu1(a, k_max) if kind.is_position else nu2(a)
        F = integrate.cumulative_simpson(dens, x=a, initial=0.0)
        F = F + (0.5 if kind.is_position else 0.0)
    F = np.minimum(F, 1.0)
    a.setflags(write=False)
    F.setflags(write=False)
    return a, F


def cdf_interp(kind, k_max: int = DEFAULT_K_MAX):
    """Vectorized distribution function interpolated from :func:`cdf_table`."""
    kind = MarginalKind(kind)
    grid, F = cdf_table(kind, k_max=k_max)

    def fn(x):
        x = np.asarray(x, dtype=float)
        if kind.is_position:
            v = np.interp(np.abs(x), grid, F, right=1.0)
            return np.where(x >= 0, v, 1.0 - v)
        return np.interp(x, grid, F, left=0.0, right=1.0)

    return fn


def sample(kind, size: int, rng: np.random.Generator, k_max: int = DEFAULT_K_MAX) -> np.ndarray:
    """Inverse-cdf samples from a marginal, using the tabulated cdf."""
    kind = MarginalKind(kind)
    grid, F = cdf_table(kind, k_max=k_max)
    q = rng.random(size)
    if not kind.is_position:
        return np.interp(q, F, grid)
    mag = np.interp(np.abs(2.0 * q - 1.0), 2.0 * F - 1.0, grid)
    return np.where(q >= 0.5, mag, -mag)


def first_absolute_moment(kind, k_max: int = DEFAULT_K_MAX) -> float:
    """E|Y| for each marginal."""
    kind = MarginalKind(kind)
    if kind is MarginalKind.POSITION_FIXED:
        return moment_absX(1, k_max)
    if kind is MarginalKind.POSITION_EXP:
        return moment_absX_hat(1, k_max)
    if kind is MarginalKind.HEIGHT_FIXED:
        return moment_H(1)
    # E H_hat = int P(H_hat > h) dh = int u^2
    return _quad(lambda t: airy.u(t) ** 2, 0.0, 12.0)
