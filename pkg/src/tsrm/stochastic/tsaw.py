r"""True self-avoiding walk on Z with bond repulsion.

From site j the walk steps right with probability

.. math:: \frac{w(\delta)}{w(\delta) + w(-\delta)}, \qquad
          \delta = \ell(j - \tfrac12) - \ell(j + \tfrac12),

with :math:`w(z) = e^{\beta z}`, i.e. toward the less visited bond.  Bond
occupations ``ell`` count crossings; the local time at a site is the mean
of its two bond occupations.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from ..errors import DomainError

MODES = ("fixed", "geometric")


@dataclass(frozen=True)
class WalkRecord:
    n_steps: int
    position: int
    local_time: float
    mode: str
    beta: float


@dataclass
class TsawState:
    """Mutable walk state for step-by-step use; bonds keyed by left endpoint."""

    position: int = 0
    n: int = 0
    bonds: dict = field(default_factory=dict)

    def occupation(self, left_site: int) -> int:
        return self.bonds.get(left_site, 0)

    def delta(self) -> int:
        return self.occupation(self.position - 1) - self.occupation(self.position)

    def local_time(self) -> float:
        return 0.5 * (self.occupation(self.position - 1) + self.occupation(self.position))


def p_right(delta: float, beta: float) -> float:
    """Probability of a right step given delta = ell(left) - ell(right)."""
    return 1.0 / (1.0 + math.exp(-2.0 * beta * delta))


def tsaw_step(state: TsawState, beta: float, rng: np.random.Generator) -> TsawState:
    """Advance ``state`` by one step in place and return it."""
    if not beta > 0:
        raise DomainError("beta must be positive")
    j = state.position
    if rng.random() < p_right(state.delta(), beta):
        state.bonds[j] = state.bonds.get(j, 0) + 1
        state.position = j + 1
    else:
        state.bonds[j - 1] = state.bonds.get(j - 1, 0) + 1
        state.position = j - 1
    state.n += 1
    return state


def _prob_table(beta):
    # beyond |delta| = dmax the step is deterministic to double precision
    dmax = int(math.ceil(20.0 / beta)) + 1
    d = np.arange(-dmax, dmax + 1)
    return 1.0 / (1.0 + np.exp(-2.0 * beta * d)), dmax


@numba.njit(cache=True, nogil=True)
def _run_walks(n_steps, seeds, table, dmax):
    n_walks = n_steps.size
    size = 2 * int(n_steps.max()) + 4
    off = size // 2
    bonds = np.zeros(size, dtype=np.int64)
    pos_out = np.empty(n_walks, dtype=np.int64)
    lt_out = np.empty(n_walks)
    for k in range(n_walks):
        np.random.seed(seeds[k])
        j = off
        lo = off
        hi = off
        for _ in range(n_steps[k]):
            d = bonds[j - 1] - bonds[j]
            if d > dmax:
                d = dmax
            elif d < -dmax:
                d = -dmax
            if np.random.random() < table[d + dmax]:
                bonds[j] += 1
                j += 1
                if j > hi:
                    hi = j
            else:
                bonds[j - 1] += 1
                j -= 1
                if j < lo:
                    lo = j
        pos_out[k] = j - off
        lt_out[k] = 0.5 * (bonds[j - 1] + bonds[j])
        bonds[lo - 1:hi + 1] = 0
    return pos_out, lt_out


def walk_seeds(seed: int, n: int) -> np.ndarray:
    return np.random.SeedSequence([seed, 1]).generate_state(n, dtype=np.uint32).astype(np.int64)


def stopping_times(n_walks: int, n_steps: int, mode: str, seed: int) -> np.ndarray:
    """Walk lengths: all ``n_steps`` or geometric with mean ``n_steps``."""
    if mode == "fixed":
        return np.full(n_walks, n_steps, dtype=np.int64)
    if mode == "geometric":
        rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
        return rng.geometric(1.0 / n_steps, size=n_walks).astype(np.int64)
    raise DomainError(f"mode must be one of {MODES}")


@dataclass(frozen=True)
class WalkEnsemble:
    """Column storage for many walks; ``records()`` expands to WalkRecord."""

    n_steps: np.ndarray
    position: np.ndarray
    local_time: np.ndarray
    mode: str
    beta: float
    mean_steps: int
    seed: int

    def records(self) -> list:
        return [WalkRecord(int(n), int(p), float(ell), self.mode, self.beta)
                for n, p, ell in zip(self.n_steps, self.position, self.local_time)]


def tsaw_ensemble(n_walks: int, n_steps: int, beta: float = 1.0, mode: str = "fixed",
                  seed: int = 0, chunk: int = 4096, workers: int | None = None) -> WalkEnsemble:
    """Independent walks with per-walk seeds derived from ``seed``.

    Chunks of walks run on a thread pool (the kernel releases the GIL).
    Results depend only on ``seed``, not on ``chunk`` or ``workers``, since
    walk k always uses stream k.
    """
    if n_walks < 1 or n_steps < 1:
        raise DomainError("n_walks and n_steps must be positive")
    if not beta > 0:
        raise DomainError("beta must be positive")
    lengths = stopping_times(n_walks, n_steps, mode, seed)
    seeds = walk_seeds(seed, n_walks)
    table, dmax = _prob_table(beta)
    pos = np.empty(n_walks, dtype=np.int64)
    lt = np.empty(n_walks)

    def work(lo):
        sl = slice(lo, lo + chunk)
        pos[sl], lt[sl] = _run_walks(lengths[sl], seeds[sl], table, dmax)

    workers = workers or os.cpu_count() or 1
    starts = range(0, n_walks, chunk)
    if workers == 1:
        for lo in starts:
            work(lo)
    else:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(work, starts))
    return WalkEnsemble(lengths, pos, lt, mode, float(beta), int(n_steps), int(seed))


def tsaw_run(n_steps: int, beta: float = 1.0, seed: int = 0) -> WalkRecord:
    """A single fixed-length walk."""
    return tsaw_ensemble(1, n_steps, beta, "fixed", seed).records()[0]


def rescale(ens: WalkEnsemble):
    """Positions / n^(2/3) and local times / n^(1/3), per walk."""
    n = ens.n_steps.astype(float) if ens.mode == "fixed" else float(ens.mean_steps)
    return ens.position / n ** (2.0 / 3.0), ens.local_time / n ** (1.0 / 3.0)
