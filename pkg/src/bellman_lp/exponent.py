"""Exponent bookkeeping shared by every module."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class SolverFailure(RuntimeError):
    """Root iteration did not certify a residual within the iteration cap."""

    def __init__(self, message: str, bracket: tuple[float, float] | None = None):
        super().__init__(message)
        self.bracket = bracket


class Regime(enum.Enum):
    SUB2 = "sub2"
    TWO = "two"
    SUPER2 = "super2"


@dataclass(frozen=True)
class Exponent:
    """The exponent p together with its derived constants.

    ``K = (p* - 1)**p`` is the constant in the majorization condition, and
    ``K**(1/p) = p* - 1`` is the sharp constant of the L^p estimate.
    """

    p: float
    p_conj: float = field(init=False)
    p_star: float = field(init=False)
    K: float = field(init=False)
    regime: Regime = field(init=False)

    def __post_init__(self):
        p = float(self.p)
        if not math.isfinite(p) or p <= 1.0:
            raise DomainError(f"exponent must satisfy 1 < p < inf, got {self.p!r}")
        p_conj = p / (p - 1.0)
        p_star = max(p, p_conj)
        if p < 2.0:
            regime = Regime.SUB2
        elif p > 2.0:
            regime = Regime.SUPER2
        else:
            regime = Regime.TWO
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "p_conj", p_conj)
        object.__setattr__(self, "p_star", p_star)
        object.__setattr__(self, "K", (p_star - 1.0) ** p)
        object.__setattr__(self, "regime", regime)

    @property
    def sharp_constant(self) -> float:
        return self.p_star - 1.0

    @property
    def s0(self) -> float:
        """Slope parameter of the equality curve z = s0 * x**(p-1)."""
        if self.regime is Regime.SUB2:
            return (self.p - 1.0) ** (1.0 - self.p)
        if self.regime is Regime.SUPER2:
            return (self.p - 1.0) ** (self.p - 1.0)
        return 1.0


def as_exponent(p: float | Exponent) -> Exponent:
    return p if isinstance(p, Exponent) else Exponent(p)
