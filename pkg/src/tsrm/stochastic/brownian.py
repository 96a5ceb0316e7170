r"""Monte Carlo for the Brownian area functionals behind u, phi and nu_hat.

A two-sided Brownian motion B starts from level ``h0``.  The backward leg
runs to its first zero and contributes the area ``S``; the forward leg
contributes ``T1(x) = int_0^x |B|`` and, for every grid point x, the
closing area ``T2(x)`` from x to the first zero after x.  Then

* ``u(h0)        = E exp(-S)``
* ``phi(x, h0)   = E exp(-T1(x) - T2(x))``
* ``nu_hat(x,h0) = E exp(-S - T1(x) - T2(x))``.

The path is resolved to steps of ``dt`` wherever it may touch zero, and zero
hits within a step are detected with the Brownian-bridge crossing
probability ``exp(-2 a b / dt)``.  Away from zero the path is advanced in
exact dyadic chunks (endpoint and bridge area drawn from their joint law),
which leaves the law of the dt-resolved functional unchanged.  Once an accumulated area exceeds
``AREA_CAP`` its exponential weight is below 1e-13 and the leg is stopped;
the area is then recorded as ``inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from ..errors import DomainError, SamplingError

AREA_CAP = 30.0
MAX_UNITS = 10 ** 12
TARGETS = ("u", "phi", "w", "nu_hat")


@dataclass(frozen=True)
class PathFunctionalSample:
    """Area decomposition of one path; ``inf`` marks an area beyond the cap."""

    h0: float
    S: float
    x_grid: np.ndarray
    T1: np.ndarray
    T2: np.ndarray
    rng_seed: int

    @property
    def T(self) -> np.ndarray:
        return self.S + self.T1 + self.T2


# a chunk of length D starting at distance a from zero is taken in one
# piece only if a >= 5 sqrt(D); its bridge crossing probability is then
# refined away below this threshold
_CROSS_EPS = 1e-12
_STACK = 96


@numba.njit(cache=True)
def _leg(h0, grid, dt, cap, max_units, t1, t2):
    """Advance one Brownian leg from ``h0``, filling T1 / T2 at ``grid``.

    Time is counted in units of ``dt``.  Chunks of ``2**k`` units are drawn
    exactly; a chunk whose bridge might touch zero is split at its midpoint
    (Levy construction) down to single units, where the Euler step with the
    bridge crossing probability decides the hit.  Returns 1 if
    ``max_units`` is exceeded, else 0.
    """
    m = grid.size
    sp_a = np.empty(_STACK)
    sp_c = np.empty(_STACK)
    sp_n = np.empty(_STACK, dtype=np.int64)
    b = h0
    now = 0
    area = 0.0
    nxt = 0
    first_open = 0
    while nxt < m and grid[nxt] == 0:
        t1[nxt] = 0.0
        nxt += 1
    if h0 == 0.0:
        for i in range(first_open, nxt):
            t2[i] = 0.0
        first_open = nxt
    while True:
        if first_open == m:
            return 0
        if now > max_units:
            return 1
        limit = grid[nxt] - now if nxt < m else max_units
        units = 1
        while 2 * units <= limit and 50.0 * units * dt <= b * b and units < (1 << 40):
            units *= 2
        c = b + math.sqrt(units * dt) * np.random.standard_normal()
        sp = 0
        sp_a[0] = b
        sp_c[0] = c
        sp_n[0] = units
        sp = 1
        while sp > 0:
            sp -= 1
            p = sp_a[sp]
            q = sp_c[sp]
            n = sp_n[sp]
            d = n * dt
            ap = abs(p)
            aq = abs(q)
            crossed = False
            if n == 1:
                if p * q < 0.0:
                    crossed = True
                    inc = 0.5 * d * (ap * ap + aq * aq) / (ap + aq)
                else:
                    inc = 0.5 * (ap + aq) * d
                    crossed = np.random.random() < math.exp(-2.0 * ap * aq / d)
            else:
                if p * q < 0.0 or math.exp(-2.0 * ap * aq / d) > _CROSS_EPS:
                    mid = 0.5 * (p + q) + 0.5 * math.sqrt(d) * np.random.standard_normal()
                    half = n // 2
                    sp_a[sp] = mid
                    sp_c[sp] = q
                    sp_n[sp] = half
                    sp_a[sp + 1] = p
                    sp_c[sp + 1] = mid
                    sp_n[sp + 1] = half
                    sp += 2
                    continue
                # integral of a Brownian bridge: Gaussian, variance d^3 / 12
                inc = 0.5 * (ap + aq) * d + math.sqrt(d * d * d / 12.0) * np.random.standard_normal()
            area += inc
            now += n
            if crossed:
                for i in range(first_open, nxt):
                    t2[i] = area - t1[i]
                first_open = nxt
            while nxt < m and now == grid[nxt]:
                t1[nxt] = area
                nxt += 1
            if first_open < nxt and area - t1[first_open] > cap:
                for i in range(first_open, nxt):
                    if area - t1[i] > cap:
                        t2[i] = math.inf
                        first_open = i + 1
            if first_open == m:
                return 0
        b = c


@numba.njit(cache=True)
def _simulate(h0, grid_steps, dt, seeds, cap, max_units):
    n = seeds.size
    m = grid_steps.size
    s_out = np.empty(n)
    t1_out = np.empty((n, m))
    t2_out = np.empty((n, m))
    zero = np.zeros(1, dtype=np.int64)
    s1 = np.empty(1)
    s2 = np.empty(1)
    fails = 0
    for k in range(n):
        np.random.seed(seeds[k])
        # the backward area is the closing area of an independent leg at x = 0
        fails += _leg(h0, zero, dt, cap, max_units, s1, s2)
        s_out[k] = s2[0]
        fails += _leg(h0, grid_steps, dt, cap, max_units, t1_out[k], t2_out[k])
    return s_out, t1_out, t2_out, fails


def _grid_steps(x_grid, dt):
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x.size == 0 or np.any(x < 0) or np.any(np.diff(x) < 0):
        raise DomainError("x_grid must be a non-empty nondecreasing array of x >= 0")
    steps = np.rint(x / dt).astype(np.int64)
    if np.any(np.abs(steps * dt - x) > 1e-9 * np.maximum(x, 1.0)):
        raise DomainError("grid points must be integer multiples of dt")
    return steps


def _check(h0, dt):
    if not (math.isfinite(h0) and h0 >= 0):
        raise DomainError("h0 must be >= 0")
    if not (math.isfinite(dt) and dt > 0):
        raise DomainError("dt must be positive")


def path_seeds(seed: int, n: int) -> np.ndarray:
    """Per-path 32-bit seeds derived from the master seed (order-independent)."""
    return np.random.SeedSequence(seed).generate_state(n, dtype=np.uint32).astype(np.int64)


def sample_path_functional(h0: float, x_max: float, dt: float, seed: int,
                           n_grid: int = 8) -> PathFunctionalSample:
    """Simulate one path; the x-grid has ``n_grid + 1`` points on [0, x_max]."""
    _check(h0, dt)
    if not x_max > 0:
        raise DomainError("x_max must be positive")
    x = np.linspace(0.0, x_max, n_grid + 1)
    x = np.rint(x / dt) * dt
    steps = _grid_steps(x, dt)
    seeds = path_seeds(seed, 1)
    s, t1, t2, fails = _simulate(float(h0), steps, float(dt), seeds, AREA_CAP, MAX_UNITS)
    if fails:
        raise SamplingError("path did not return to zero within the step cap; resample")
    return PathFunctionalSample(float(h0), float(s[0]), x, t1[0], t2[0], int(seeds[0]))


@dataclass(frozen=True)
class PathEnsemble:
    """Areas of ``n_paths`` independent paths from the same level."""

    h0: float
    dt: float
    x_grid: np.ndarray
    S: np.ndarray
    T1: np.ndarray
    T2: np.ndarray
    seed: int

    def weights(self, target: str) -> np.ndarray:
        if target == "u":
            return np.exp(-self.S)
        if target in ("phi", "w"):
            return np.exp(-self.T1 - self.T2)
        if target == "nu_hat":
            return np.exp(-self.S[:, None] - self.T1 - self.T2)
        raise DomainError(f"unknown target {target!r}; expected one of {TARGETS}")

    def estimate(self, target: str):
        """Sample means and standard errors (per grid point for phi / nu_hat)."""
        w = self.weights(target)
        n = w.shape[0]
        return w.mean(axis=0), w.std(axis=0, ddof=1) / math.sqrt(n)


def simulate_paths(h0: float, x_grid, n_paths: int, dt: float, seed: int) -> PathEnsemble:
    """Run ``n_paths`` paths from level ``h0`` and record all areas."""
    _check(h0, dt)
    if n_paths < 2:
        raise DomainError("need at least two paths")
    x = np.asarray(x_grid, dtype=float)
    steps = _grid_steps(x, dt)
    seeds = path_seeds(seed, n_paths)
    s, t1, t2, fails = _simulate(float(h0), steps, float(dt), seeds, AREA_CAP, MAX_UNITS)
    if fails:
        raise SamplingError(f"{fails} legs exceeded the step cap")
    return PathEnsemble(float(h0), float(dt), x, s, t1, t2, int(seed))


def mc_estimate(target: str, n_paths: int, dt: float, seed: int, h: float = 0.0, x: float = 0.0,
                product: bool = False):
    """Monte Carlo estimate and standard error of u(h), phi(x,h), w(x) or nu_hat(x,h).

    For ``nu_hat`` the default uses the single-path weight exp(-S-T1-T2);
    ``product=True`` multiplies the independent estimates of u(h) and
    phi(x,h) instead (delta-method standard error).
    """
    if target not in TARGETS:
        raise DomainError(f"unknown target {target!r}; expected one of {TARGETS}")
    if n_paths < 1000:
        raise DomainError("n_paths must be at least 1000")
    if target == "w":
        h = 0.0
    ens = simulate_paths(h, [x], n_paths, dt, seed)
    if target == "nu_hat" and product:
        mu, su = ens.estimate("u")
        mp, sp = ens.estimate("phi")
        mp, sp = float(mp[0]), float(sp[0])
        return float(mu) * mp, math.hypot(float(mu) * sp, mp * float(su))
    m, s = ens.estimate(target)
    return float(np.ravel(m)[0]), float(np.ravel(s)[0])
