"""Explicit Bellman functions for the sharp L^p estimate under differential
subordination, with numerical certification of their pointwise conditions."""

from .exponent import DomainError, Exponent, Regime, SolverFailure

__version__ = "0.1.0"

__all__ = ["DomainError", "Exponent", "Regime", "SolverFailure", "__version__"]
