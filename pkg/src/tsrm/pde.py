r"""Crank-Nicolson solver for :math:`\partial_x\varphi = \tfrac12\varphi_{hh} - h\varphi`.

The problem is posed for ``x >= 0`` with ``phi(0, h) = u(h)``, a reflecting
(Neumann) wall at ``h = 0`` and a zero Dirichlet condition at ``h_max``.
The initial slope ``u'(0) < 0`` is incompatible with the Neumann wall, so
the solution has a square-root layer in x at the corner.  The first few
x-intervals are therefore refined, starting with backward Euler on a
graded sub-grid (a Rannacher-type start); plain Crank-Nicolson would leave
an undamped oscillation and a first-order error there.

The joint density at exponential time is ``nu_hat(x, h) = u(h) phi(x, h)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import airy
from .errors import ConfigurationError, RangeError

DEFAULT_GRID = {"x_max": 4.0, "h_max": 9.0, "dx": 0.005, "dh": 0.01}

_RANNACHER_STEPS = 4
_STARTUP_SUBSTEPS = 64


@dataclass(frozen=True, eq=False)
class PdeField:
    """Solution of the phi problem on a rectangular (x, h) grid."""

    x_grid: np.ndarray
    h_grid: np.ndarray
    values: np.ndarray
    scheme: dict

    @property
    def dx(self) -> float:
        return float(self.x_grid[1] - self.x_grid[0])

    @property
    def dh(self) -> float:
        return float(self.h_grid[1] - self.h_grid[0])

    def nu_hat(self) -> np.ndarray:
        """Joint density u(h) phi(x, h) on the grid."""
        return self.values * airy.u(self.h_grid)[None, :]

    def to_csv(self, path, header: str = "") -> None:
        """Write the field as a matrix: first row h_grid, first column x_grid."""
        n_x, n_h = self.values.shape
        table = np.empty((n_x + 1, n_h + 1))
        table[0, 0] = np.nan
        table[0, 1:] = self.h_grid
        table[1:, 0] = self.x_grid
        table[1:, 1:] = self.values
        with open(path, "w") as fh:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
            np.savetxt(fh, table, delimiter=",", fmt="%.17g")


def _check_grid(x_max, h_max, dx, dh):
    for name, v in (("x_max", x_max), ("h_max", h_max), ("dx", dx), ("dh", dh)):
        if not (math.isfinite(v) and v > 0):
            raise ConfigurationError(f"{name} must be positive and finite")
    if dx > x_max or dh > h_max / 4:
        raise ConfigurationError("grid steps too coarse for the domain")
    if airy.u(h_max) > 1e-10:
        raise ConfigurationError("h_max too small: u(h_max) must be below 1e-10")
    n_x = round(x_max / dx)
    n_h = round(h_max / dh)
    if abs(n_x * dx - x_max) > 1e-9 * x_max or abs(n_h * dh - h_max) > 1e-9 * h_max:
        raise ConfigurationError("x_max and h_max must be integer multiples of dx and dh")
    # CN is unconditionally stable, but very large dx / dh^2 ratios let
    # the stiff modes ring; bound it loosely.
    if dx / dh ** 2 > 1e4:
        raise ConfigurationError("dx / dh^2 too large for a non-oscillatory CN solve")
    return n_x, n_h


def _operator_bands(h, dh):
    """Tridiagonal bands of A = 1/2 D2 - h on the unknowns h_0 .. h_{N-1}."""
    n = h.size
    main = -1.0 / dh ** 2 - h
    upper = np.full(n - 1, 0.5 / dh ** 2)
    lower = np.full(n - 1, 0.5 / dh ** 2)
    # ghost node phi_{-1} = phi_1 doubles the coupling at h = 0
    upper[0] = 1.0 / dh ** 2
    return lower, main, upper


def _apply(lower, main, upper, v):
    out = main * v
    out[:-1] += upper * v[1:]
    out[1:] += lower * v[:-1]
    return out


def _banded(lower, main, upper, theta, step):
    ab = np.zeros((3, main.size))
    ab[0, 1:] = -theta * step * upper
    ab[1] = 1.0 - theta * step * main
    ab[2, :-1] = -theta * step * lower
    return ab


def solve_phi(x_max: float = DEFAULT_GRID["x_max"], h_max: float = DEFAULT_GRID["h_max"],
              dx: float = DEFAULT_GRID["dx"], dh: float = DEFAULT_GRID["dh"]) -> PdeField:
    """Solve the phi problem by Crank-Nicolson with a refined start-up.

    Raises
    ------
    ConfigurationError
        For non-positive or inconsistent grid parameters.
    """
    n_x, n_h = _check_grid(float(x_max), float(h_max), float(dx), float(dh))
    x = np.linspace(0.0, x_max, n_x + 1)
    h = np.linspace(0.0, h_max, n_h + 1)
    lo, mid, up = _operator_bands(h[:-1], dh)

    values = np.empty((n_x + 1, n_h + 1))
    values[0] = airy.u(h)
    values[0, -1] = 0.0
    v = values[0, :-1].copy()

    # Start-up: the first interval is marched on a cubically graded sub-grid
    # (two backward Euler sub-steps, then CN); intervals up to the end of the
    # start-up window use uniform CN sub-steps.
    cn_lhs = _banded(lo, mid, up, 0.5, dx)
    cache = {}

    def substep(v, step, theta):
        key = (round(step, 15), theta)
        if key not in cache:
            cache[key] = _banded(lo, mid, up, theta, step)
        rhs = v if theta == 1.0 else v + (1.0 - theta) * step * _apply(lo, mid, up, v)
        return linalg.solve_banded((1, 1), cache[key], rhs)

    graded = dx * (np.arange(_STARTUP_SUBSTEPS + 1) / _STARTUP_SUBSTEPS) ** 3
    for i in range(1, n_x + 1):
        if i == 1:
            for k, step in enumerate(np.diff(graded)):
                v = linalg.solve_banded((1, 1), _banded(lo, mid, up, 1.0 if k < 2 else 0.5, step),
                                        v if k < 2 else v + 0.5 * step * _apply(lo, mid, up, v))
        elif i <= _RANNACHER_STEPS:
            for _ in range(_STARTUP_SUBSTEPS // 4):
                v = substep(v, 4.0 * dx / _STARTUP_SUBSTEPS, 0.5)
        else:
            rhs = v + 0.5 * dx * _apply(lo, mid, up, v)
            v = linalg.solve_banded((1, 1), cn_lhs, rhs)
        values[i, :-1] = v
        values[i, -1] = 0.0
    values.setflags(write=False)
    scheme = {
        "method": "crank-nicolson",
        "startup": {"intervals": _RANNACHER_STEPS, "substeps": _STARTUP_SUBSTEPS, "first": "graded, backward Euler x2"},
        "x_max": float(x_max), "h_max": float(h_max), "dx": float(dx), "dh": float(dh),
        "boundary": {"h=0": "neumann (ghost node)", "h=h_max": "dirichlet 0"},
    }
    return PdeField(x, h, values, scheme)


def _locate(grid, t, name):
    if not (grid[0] - 1e-12 <= t <= grid[-1] + 1e-12):
        raise RangeError(f"{name}={t} outside the PDE grid [{grid[0]}, {grid[-1]}]")
    step = grid[1] - grid[0]
    i = min(int((t - grid[0]) / step), grid.size - 2)
    i = max(i, 0)
    return i, (t - grid[i]) / step


def interpolate(field: PdeField, x: float, h: float) -> float:
    """Bilinear interpolation of phi; queries outside the grid raise."""
    i, fx = _locate(field.x_grid, float(x), "x")
    j, fh = _locate(field.h_grid, float(h), "h")
    f = field.values
    return float(
        (1 - fx) * (1 - fh) * f[i, j] + fx * (1 - fh) * f[i + 1, j]
        + (1 - fx) * fh * f[i, j + 1] + fx * fh * f[i + 1, j + 1]
    )


def joint_nu_hat(field: PdeField, x: float, h: float) -> float:
    """Joint density of (position, height) at rate-one exponential time, x >= 0."""
    return float(airy.u(h)) * interpolate(field, abs(x), h)


def x_tail_rate() -> float:
    """Decay rate of phi in x: the slowest mode decays like exp(-delta'_1 x)."""
    return float(airy.spectrum(1).delta_prime[0])


def pde_height_marginal(field: PdeField) -> np.ndarray:
    r""":math:`2\int_0^\infty \hat\nu(x,h)\,dx` on ``field.h_grid``.

    The part beyond ``x_max`` is added as ``phi(x_max, h) / delta'_1``,
    exact for the leading mode that dominates there.
    """
    phi = field.values
    inner = np.trapezoid(phi, field.x_grid, axis=0) + phi[-1] / x_tail_rate()
    return 2.0 * airy.u(field.h_grid) * inner


def pde_position_marginal(field: PdeField) -> np.ndarray:
    r""":math:`\int_0^\infty \hat\nu(x,h)\,dh` on ``field.x_grid``."""
    return np.trapezoid(field.nu_hat(), field.h_grid, axis=1)


def pde_total_mass(field: PdeField) -> float:
    return float(np.trapezoid(pde_height_marginal(field), field.h_grid))


def nu_hat_pde_residual(field: PdeField, x: float, h: float) -> float:
    r"""Discrete residual of :math:`\partial_x\hat\nu = \tfrac12\partial_h(u^2\partial_h(u^{-2}\hat\nu))`.

    Evaluated at the grid node nearest to (x, h), which must be interior.
    The x-derivative is centred between the node and its successor, matching
    the Crank-Nicolson time level.
    """
    i = int(round(float(x) / field.dx))
    j = int(round(float(h) / field.dh))
    if not (0 < i < field.x_grid.size - 1 and 0 < j < field.h_grid.size - 1):
        raise RangeError("residual needs an interior grid node")
    hh = field.h_grid[j - 1:j + 2]
    uu = airy.u(hh)
    nu = field.values[i:i + 2, j - 1:j + 2] * uu[None, :]
    q = nu / uu[None, :] ** 2
    u_half = airy.u(np.array([hh[0] + 0.5 * field.dh, hh[1] + 0.5 * field.dh]))
    flux = u_half[None, :] ** 2 * np.diff(q, axis=1) / field.dh
    rhs = 0.5 * np.diff(flux, axis=1)[:, 0] / field.dh
    lhs = (nu[1, 1] - nu[0, 1]) / field.dx
    return float(abs(lhs - rhs.mean()))


def neumann_residual(field: PdeField) -> np.ndarray:
    """Second-order one-sided h-derivative at h = 0 for every x > 0."""
    f = field.values[1:]
    return np.abs(-3.0 * f[:, 0] + 4.0 * f[:, 1] - f[:, 2]) / (2.0 * field.dh)

