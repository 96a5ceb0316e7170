"""Scale calibration and Kolmogorov-Smirnov comparison against a marginal."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .. import marginals
from ..errors import StatisticsError

MIN_SAMPLES = 1000


@dataclass(frozen=True)
class GofReport:
    n: int
    kind: str
    ks_statistic: float
    p_value: float
    calibrated_scale: float
    alpha_hat: float
    histogram: tuple
    moment_checks: dict

    def to_dict(self) -> dict:
        edges, counts = self.histogram
        return {
            "n": self.n,
            "kind": self.kind,
            "ks": self.ks_statistic,
            "p_value": self.p_value,
            "scale": self.calibrated_scale,
            "alpha_hat": self.alpha_hat,
            "moment_checks": self.moment_checks,
            "histogram": {"edges": list(map(float, edges)), "counts": list(map(int, counts))},
        }


def calibrate_and_test(samples, kind, calibrate: bool = True, bins: int = 60) -> GofReport:
    """Fit one scale factor by first-absolute-moment matching, then KS-test.

    ``samples`` are already divided by n**(2/3) (positions) or n**(1/3)
    (heights).  The fitted factor ``c`` multiplies them; it corresponds to
    ``alpha_hat = c**(-3/2)`` for positions and ``c**(-3)`` for heights.
    """
    kind = marginals.MarginalKind(kind)
    y = np.asarray(samples, dtype=float).ravel()
    if y.size < MIN_SAMPLES:
        raise StatisticsError(f"need at least {MIN_SAMPLES} samples, got {y.size}")
    if not np.all(np.isfinite(y)):
        raise StatisticsError("samples contain non-finite values")
    if not kind.is_position and np.any(y < 0):
        raise StatisticsError("height samples must be non-negative")
    m1 = float(np.mean(np.abs(y)))
    if m1 == 0.0:
        raise StatisticsError("degenerate sample (all zero)")
    target = marginals.first_absolute_moment(kind)
    c = target / m1 if calibrate else 1.0
    z = c * y
    res = stats.kstest(z, marginals.cdf_interp(kind))
    counts, edges = np.histogram(z, bins=bins, range=(float(z.min()), float(z.max())))
    gamma = 2.0 / 3.0 if kind.is_position else 1.0 / 3.0
    checks = {
        "abs_moment_1": {"sample": float(np.mean(np.abs(z))), "target": target},
        "mean": {"sample": float(np.mean(z)), "std_error": float(np.std(z, ddof=1) / math.sqrt(z.size))},
    }
    return GofReport(int(z.size), kind.value, float(res.statistic), float(res.pvalue), float(c),
                     float(c ** (-1.0 / gamma)), (edges, counts), checks)
