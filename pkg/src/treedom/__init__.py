"""Stochastic domination thresholds for Ising and fuzzy Potts measures on trees."""

__version__ = "0.1.0"
