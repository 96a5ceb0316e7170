"""Exact marginal laws of the true self-repelling motion, with numerical oracles.

Modules
-------
airy        normalized Airy function u, the spectrum of u', trace sums
special     Gamma, Tricomi U, Mittag-Leffler function and densities
marginals   position / height densities at fixed and exponential times
pde         Crank-Nicolson solver for the Feynman-Kac problem
transforms  Laplace-side formulas and integral-transform routes
stochastic  Brownian-area Monte Carlo, lattice walk, goodness of fit
cli         command-line interface
"""
__version__ = "0.1.0"

from .airy import spectrum, trace_sum, u, u_prime
from .errors import (
    ConfigurationError,
    DomainError,
    RangeError,
    SamplingError,
    SpectrumError,
    StatisticsError,
    TSRMError,
)
from .marginals import MarginalKind, moment_absX, moment_H, nu1, nu1_hat, nu2, nu2_hat

__all__ = [
    "__version__", "u", "u_prime", "spectrum", "trace_sum",
    "nu1", "nu2", "nu1_hat", "nu2_hat", "moment_H", "moment_absX", "MarginalKind",
    "TSRMError", "DomainError", "RangeError", "SpectrumError", "ConfigurationError",
    "SamplingError", "StatisticsError",
]
