"""Stochastic oracles: Brownian area Monte Carlo and the lattice walk."""
