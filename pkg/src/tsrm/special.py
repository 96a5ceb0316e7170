r"""Gamma, Tricomi U, Mittag-Leffler function and density.

The Tricomi function is evaluated from its real integral representation

.. math:: U(a,b;z) = \frac{1}{\Gamma(a)}\int_0^\infty e^{-zs} s^{a-1}(1+s)^{b-a-1}\,ds,

and the Mittag-Leffler density of index alpha from its power series.  For
alpha = 2/3 the series is replaced beyond ``ML23_SWITCH`` by the Tricomi form
:math:`f_{2/3}(x) = 2^{1/3}(3\pi)^{-1/2} x e^{-4x^3/27} U(1/6, 4/3; 4x^3/27)`.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import DomainError, RangeError

ML23_SWITCH = 3.0

# Gauss-Laguerre is used for z >= this value, adaptive quadrature below.
_LAGUERRE_MIN_Z = 1.0
_LAGUERRE_NODES = 80

# a term larger than this multiple of the result signals lost digits
_CANCELLATION_LIMIT = 1e8

_ML23_PREFACTOR = 2.0 ** (1.0 / 3.0) / math.sqrt(3.0 * math.pi)


def _out(a):
    return float(a) if np.ndim(a) == 0 else a


def gamma_fn(x):
    """Gamma function; raises at the poles 0, -1, -2, ..."""
    x = np.asarray(x, dtype=float)
    if np.any((x <= 0) & (x == np.round(x))):
        raise DomainError("Gamma has poles at non-positive integers")
    if not np.all(np.isfinite(x)):
        raise DomainError("argument must be finite")
    return _out(special.gamma(x))


# ---------------------------------------------------------------------------
# Tricomi U
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _laguerre_rule(a: float):
    t, w = special.roots_genlaguerre(_LAGUERRE_NODES, a - 1.0)
    return t, w


def _tricomi_quad(a: float, b: float, z: float) -> float:
    c = b - a - 1.0

    # s in [0, 1] with s = t**(1/a) removes the s**(a-1) singularity
    def inner(t):
        s = t ** (1.0 / a)
        return math.exp(-z * s) * (1.0 + s) ** c / a

    # s in [1, inf) with s = exp(tau)
    def outer(tau):
        return math.exp(-z * math.exp(tau) + a * tau + c * (tau + math.log1p(math.exp(-tau))))

    tmax = 45.0 / (1.0 - b) if b < 1.0 else math.inf
    if z > 0:
        tmax = min(tmax, math.log(60.0 / z) + 3.0)
    i1 = integrate.quad(inner, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)[0]
    i2 = integrate.quad(outer, 0.0, tmax, epsabs=0.0, epsrel=1e-13, limit=400)[0]
    return (i1 + i2) / math.gamma(a)


def tricomi_u(a: float, b: float, z):
    """Confluent hypergeometric function of the second kind for real z >= 0.

    Parameters
    ----------
    a : float
        Must be positive (integral representation).
    b : float
        Any real; ``b >= 1`` requires ``z > 0``.
    z : float or array_like
        Non-negative argument(s).
    """
    a = float(a)
    b = float(b)
    if not a > 0:
        raise DomainError("tricomi_u requires a > 0")
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)) or np.any(z < 0):
        raise DomainError("tricomi_u requires finite z >= 0")
    if b >= 1.0 and np.any(z == 0):
        raise DomainError(f"U({a}, {b}; 0) diverges for b >= 1")
    flat = z.ravel()
    out = np.empty_like(flat)
    big = flat >= _LAGUERRE_MIN_Z
    if big.any():
        t, w = _laguerre_rule(a)
        idx = np.nonzero(big)[0]
        for lo in range(0, idx.size, 4096):
            sel = idx[lo:lo + 4096]
            zb = flat[sel]
            vals = (1.0 + t[None, :] / zb[:, None]) ** (b - a - 1.0) @ w
            out[sel] = zb ** (-a) * vals / math.gamma(a)
    for i in np.nonzero(~big)[0]:
        out[i] = _tricomi_quad(a, b, float(flat[i]))
    return _out(out.reshape(z.shape))


def kummer_residual(a: float, b: float, z: float) -> float:
    """Relative residual of U(a,b;z) = z**(1-b) U(1+a-b, 2-b; z)."""
    if not b < a + 1:
        raise DomainError("Kummer's identity needs b < a + 1")
    lhs = tricomi_u(a, b, z)
    rhs = z ** (1.0 - b) * tricomi_u(1.0 + a - b, 2.0 - b, z)
    return abs(lhs - rhs) / abs(lhs)


# ---------------------------------------------------------------------------
# Mittag-Leffler
# ---------------------------------------------------------------------------

def _check_alpha(alpha, upper_inclusive):
    alpha = float(alpha)
    ok = 0.0 <= alpha <= 1.0 if upper_inclusive else 0.0 <= alpha < 1.0
    if not ok:
        raise DomainError(f"alpha={alpha} outside the supported index range")
    return alpha


@lru_cache(maxsize=64)
def _density_coefficients(alpha: float, kmax: int) -> np.ndarray:
    """Power-series coefficients of f_alpha in x (signs included)."""
    k = np.arange(kmax)
    s = np.sin((k + 1) * alpha * np.pi)
    s[np.abs(s) < 1e-12] = 0.0
    log_mag = special.gammaln((k + 1) * alpha) - special.gammaln(k + 1.0)
    c = s * np.exp(log_mag) * np.where(k % 2 == 0, 1.0, -1.0) / np.pi
    c.setflags(write=False)
    return c


@lru_cache(maxsize=64)
def _function_coefficients(alpha: float, kmax: int) -> np.ndarray:
    k = np.arange(kmax)
    c = np.exp(-special.gammaln(alpha * k + 1.0))
    c.setflags(write=False)
    return c


def _horner(coeffs, x):
    total = np.zeros_like(x)
    for c in coeffs[::-1]:
        total = total * x + c
    return total


_MAX_TERMS = 4000


def _n_terms(log_envelope, xmax: float, what: str) -> int:
    """Terms needed until the envelope |c_k| x**k drops 40 e-folds below its peak."""
    k = np.arange(_MAX_TERMS, dtype=float)
    t = log_envelope(k) + k * math.log(max(xmax, 1e-300))
    top = int(np.argmax(t))
    small = np.nonzero(t[top:] < t[top] - 40.0)[0]
    if small.size == 0:
        raise RangeError(f"{what} series needs more than {_MAX_TERMS} terms at |x|={xmax}")
    return max(top + int(small[0]) + 1, 8)


def _series(coeffs, x, what):
    with np.errstate(over="ignore", invalid="ignore"):
        total = _horner(coeffs, x)
        peak = _horner(np.abs(coeffs), np.abs(x))
        lost = ~np.isfinite(peak) | ~(peak <= _CANCELLATION_LIMIT * np.abs(total))
    if np.any(lost):
        raise RangeError(f"{what} series loses too many digits at |x|={float(np.max(np.abs(x)))}")
    return total


def ml_function(alpha: float, y):
    r"""Mittag-Leffler function :math:`E_\alpha(y)` for real ``y <= 0``.

    Uses the defining power series, except for the closed forms at alpha = 0
    (``1/(1-y)``) and alpha = 1 (``exp(y)``).  Raises :class:`RangeError`
    when cancellation would cost more than eight digits.
    """
    alpha = _check_alpha(alpha, True)
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)) or np.any(y > 0):
        raise DomainError("ml_function is implemented for finite y <= 0")
    if alpha == 0.0:
        return _out(1.0 / (1.0 - y))
    if alpha == 1.0:
        return _out(np.exp(y))
    ymax = float(np.max(np.abs(y), initial=0.0))
    n = _n_terms(lambda k: -special.gammaln(alpha * k + 1.0), ymax, f"E_{alpha}")
    coeffs = _function_coefficients(alpha, n)
    return _out(_series(coeffs, y, f"E_{alpha}"))


def _ml_series_density(alpha: float, x: np.ndarray) -> np.ndarray:
    xmax = float(np.max(x, initial=0.0))
    n = _n_terms(lambda k: special.gammaln((k + 1) * alpha) - special.gammaln(k + 1.0), xmax, f"f_{alpha}")
    coeffs = _density_coefficients(alpha, n)
    return _series(coeffs, x, f"f_{alpha}")


def ml_density(alpha: float, x):
    r"""Mittag-Leffler probability density :math:`f_\alpha(x)`, ``x >= 0``.

    Closed forms are used at alpha = 0 (``exp(-x)``) and alpha = 1/2
    (``exp(-x**2/4)/sqrt(pi)``, whose Laplace transform is
    ``E_{1/2}(-y) = exp(y**2) erfc(y)``).  For alpha = 2/3 points beyond
    ``ML23_SWITCH`` are evaluated through :func:`ml23_density_tricomi`.
    """
    alpha = _check_alpha(alpha, False)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise DomainError("ml_density requires finite x >= 0")
    if alpha == 0.0:
        return _out(np.exp(-x))
    if alpha == 0.5:
        return _out(np.exp(-0.25 * x * x) / math.sqrt(math.pi))
    if alpha == 2.0 / 3.0:
        return _out(ml23_density(x))
    return _out(_ml_series_density(alpha, x))


def ml23_density_tricomi(x):
    r""":math:`f_{2/3}` through :math:`U(1/6, 4/3; 4x^3/27)`."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise DomainError("ml23_density_tricomi requires finite x >= 0")
    out = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    z = 4.0 * xp ** 3 / 27.0
    out[pos] = _ML23_PREFACTOR * xp * np.exp(-z) * tricomi_u(1.0 / 6.0, 4.0 / 3.0, z)
    # x * U(1/6, 4/3; z) -> x * z**(-1/3) Gamma(1/3)/Gamma(1/6) as x -> 0
    out[~pos] = _ML23_PREFACTOR * 3.0 / 4.0 ** (1.0 / 3.0) * math.gamma(1.0 / 3.0) / math.gamma(1.0 / 6.0)
    return _out(out)


# f_{2/3} underflows (below 1e-300) beyond this point
_ML23_ZERO = 14.0


def ml23_density(x) -> np.ndarray:
    """Vectorized f_{2/3} combining the series and Tricomi branches."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    lo = x < ML23_SWITCH
    if lo.any():
        out[lo] = _ml_series_density(2.0 / 3.0, x[lo])
    mid = ~lo & (x < _ML23_ZERO)
    if mid.any():
        out[mid] = ml23_density_tricomi(x[mid])
    return out


def log_ml23_density(x):
    """log f_{2/3}(x) for x > 0, finite far beyond the underflow of f."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("log_ml23_density requires x > 0")
    out = np.empty_like(x)
    lo = x < ML23_SWITCH
    if lo.any():
        out[lo] = np.log(_ml_series_density(2.0 / 3.0, x[lo]))
    hi = ~lo
    if hi.any():
        xh = x[hi]
        z = 4.0 * xh ** 3 / 27.0
        out[hi] = (
            math.log(_ML23_PREFACTOR) + np.log(xh) - z
            + np.log(tricomi_u(1.0 / 6.0, 4.0 / 3.0, z))
        )
    return _out(out)


def ml_moment(alpha: float, m: int) -> float:
    """m-th moment m!/Gamma(alpha m + 1) of the Mittag-Leffler law."""
    return math.factorial(m) / math.gamma(alpha * m + 1.0)
