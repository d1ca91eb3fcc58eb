"""The implicit function phi(s) behind the special functions.

For 1 < p < 2, phi(s) >= 0 is the root of ``u (1+u)**(p-2) = p**(p-2) s``.
For p > 2, phi(s) >= p-2 is the root of
``p (1-1/p)**(p-1) (1+u)**(p-2) (u-p+2) = s``.

Both equations are solved for the *excess* ``w`` (``w = phi`` below 2,
``w = phi - (p-2)`` above 2), which is the quantity the residual is certified
in.  Written that way both cases read

    w (a + w)**(p-2) = target,

with ``a = 1, target = p**(p-2) s`` below 2 and ``a = p-1,
target = s / (p (1-1/p)**(p-1))`` above 2.  In log coordinates ``v = log w``
the left side is strictly increasing with slope between min(1, p-1) and
max(1, p-1), so a safeguarded Newton iteration on ``v`` converges from the
explicit bracket implied by those slope bounds, across any number of decades.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exponent import DomainError, Exponent, Regime, SolverFailure, as_exponent

MAX_ITER = 200
RESIDUAL_RTOL = 1e-12
_STOP_RTOL = 4.0 * np.finfo(float).eps


@dataclass(frozen=True)
class PhiValue:
    s: float
    phi: float
    residual: float
    phi_prime: float
    excess: float  # phi for p < 2, phi - (p - 2) for p > 2


def _shape(exp: Exponent) -> tuple[float, float]:
    """Return (a, scale) with target = scale * s."""
    p = exp.p
    if exp.regime is Regime.SUB2:
        return 1.0, p ** (p - 2.0)
    if exp.regime is Regime.SUPER2:
        c = p * (1.0 - 1.0 / p) ** (p - 1.0)
        return p - 1.0, 1.0 / c
    raise DomainError("phi is not defined at p = 2")


def residual_of(exp: Exponent, s, excess):
    """Residual of the defining equation, evaluated from the excess variable."""
    exp = as_exponent(exp)
    p = exp.p
    s = np.asarray(s, dtype=float)
    w = np.asarray(excess, dtype=float)
    if exp.regime is Regime.SUB2:
        with np.errstate(over="ignore", invalid="ignore"):
            return w * np.exp((p - 2.0) * np.log1p(w)) - p ** (p - 2.0) * s
    c = p * (1.0 - 1.0 / p) ** (p - 1.0)
    with np.errstate(over="ignore", invalid="ignore"):
        return c * np.exp((p - 2.0) * np.log((p - 1.0) + w)) * w - s


def _solve_excess(exp: Exponent, s: np.ndarray):
    """Vectorized excess solve.  Returns (w, residual, ok, lo, hi) in v-space."""
    p = exp.p
    a, scale = _shape(exp)
    s = np.asarray(s, dtype=float)
    w = np.zeros_like(s)
    ok = np.ones(s.shape, dtype=bool)
    lo_out = np.full(s.shape, -np.inf)
    hi_out = np.full(s.shape, np.inf)

    pos = s > 0
    if np.any(pos):
        sp = s[pos]
        log_t = np.log(scale) + np.log(sp)
        m, M = min(1.0, p - 1.0), max(1.0, p - 1.0)

        def F(v):
            return v + (p - 2.0) * np.logaddexp(math.log(a), v) - log_t

        # asymptotic guess: w ~ t / a**(p-2) for small t, w ~ t**(1/(p-1)) for large
        v = np.where(
            log_t < 0.0,
            log_t - (p - 2.0) * math.log(a),
            log_t / (p - 1.0),
        )
        f = F(v)
        # F' in [m, M]  =>  the root lies between v - f/m and v - f/M
        lo = np.where(f > 0, v - f / m, v - f / M)
        hi = np.where(f > 0, v - f / M, v - f / m)
        lo = np.minimum(lo, v)
        hi = np.maximum(hi, v)
        # widen by a hair so rounding never excludes the root
        pad = 1e-12 * (1.0 + np.abs(lo) + np.abs(hi))
        lo, hi = lo - pad, hi + pad

        done = np.zeros(sp.shape, dtype=bool)
        target = scale * sp
        for _ in range(MAX_ITER):
            f = F(v)
            wv = np.exp(v)
            res = _res_t(exp, a, target, wv)
            # relative to the target: w must be accurate even where s is tiny
            tight = np.abs(res) <= _STOP_RTOL * target
            width = hi - lo <= 4.0 * np.spacing(np.maximum(np.abs(lo), np.abs(hi)))
            done |= tight | width | (f == 0.0)
            if np.all(done):
                break
            lo = np.where(~done & (f < 0), v, lo)
            hi = np.where(~done & (f > 0), v, hi)
            fprime = 1.0 + (p - 2.0) * wv / (a + wv)
            step = v - f / fprime
            inside = (step > lo) & (step < hi)
            nxt = np.where(inside, step, 0.5 * (lo + hi))
            # rounding-level Newton step: the residual cannot improve further
            done |= inside & (np.abs(step - v) <= 2.0 * np.spacing(np.maximum(np.abs(v), 1.0)))
            v = np.where(done, v, nxt)
        wpos = np.exp(v)
        w[pos] = wpos
        lo_out[pos] = lo
        hi_out[pos] = hi

    res = residual_of(exp, s, w)
    ok &= np.isfinite(res) & (np.abs(res) <= RESIDUAL_RTOL * (1.0 + s))
    return w, res, ok, lo_out, hi_out


def _res_t(exp, a, target, w):
    # residual_of divided by the leading constant (1 below 2, c above 2)
    p = exp.p
    with np.errstate(over="ignore", invalid="ignore"):
        return w * np.exp((p - 2.0) * np.log(a + w)) - target


def solve_phi_array(exp: Exponent | float, s):
    """Vectorized solve: returns (phi, excess, residual, ok) arrays.

    Points that fail certification have ``ok`` False; callers decide whether
    to raise or mark them indeterminate.
    """
    exp = as_exponent(exp)
    s = np.asarray(s, dtype=float)
    if np.any(~np.isfinite(s)) or np.any(s < 0):
        raise DomainError("s must be finite and nonnegative")
    w, res, ok, _, _ = _solve_excess(exp, s)
    phi = w if exp.regime is Regime.SUB2 else w + (exp.p - 2.0)
    return phi, w, res, ok


def phi_prime_array(exp: Exponent | float, s, phi, excess=None):
    """Closed-form derivative; at s = 0 the one-sided limit is returned."""
    exp = as_exponent(exp)
    p = exp.p
    s = np.asarray(s, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if exp.regime is Regime.SUB2:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = phi / s * ((1.0 + phi) / (1.0 + (p - 1.0) * phi))
        limit = p ** (p - 2.0)
    elif exp.regime is Regime.SUPER2:
        w = phi - (p - 2.0) if excess is None else np.asarray(excess, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = w / ((p - 1.0) * s) * ((1.0 + phi) / (w + 1.0))
        c = p * (1.0 - 1.0 / p) ** (p - 1.0)
        limit = 1.0 / (c * (p - 1.0) ** (p - 2.0))
    else:
        raise DomainError("phi is not defined at p = 2")
    return np.where(s > 0, out, limit)


def _scalar_solve(exp: Exponent, s: float, regime: Regime) -> PhiValue:
    if exp.regime is not regime:
        raise DomainError(f"p = {exp.p} is not in the {regime.value} regime")
    s = float(s)
    if not math.isfinite(s) or s < 0:
        raise DomainError(f"s must be finite and nonnegative, got {s!r}")
    w, res, ok, lo, hi = _solve_excess(exp, np.array([s]))
    if not ok[0]:
        raise SolverFailure(
            f"phi solve did not certify at s={s!r} (residual {res[0]!r})",
            bracket=(float(np.exp(lo[0])), float(np.exp(hi[0]))),
        )
    phi = float(w[0]) if regime is Regime.SUB2 else float(w[0]) + (exp.p - 2.0)
    dphi = float(phi_prime_array(exp, s, phi, w[0]))
    return PhiValue(s=s, phi=phi, residual=float(res[0]), phi_prime=dphi, excess=float(w[0]))


def solve_phi_sub2(exp: Exponent | float, s: float) -> PhiValue:
    return _scalar_solve(as_exponent(exp), s, Regime.SUB2)


def solve_phi_super2(exp: Exponent | float, s: float) -> PhiValue:
    return _scalar_solve(as_exponent(exp), s, Regime.SUPER2)


def solve_phi(exp: Exponent | float, s: float) -> PhiValue:
    """Dispatch on the regime of ``exp``."""
    exp = as_exponent(exp)
    return _scalar_solve(exp, s, exp.regime)


def phi_prime(exp: Exponent | float, pv: PhiValue) -> float:
    exp = as_exponent(exp)
    if not pv.s > 0:
        raise DomainError("phi' closed forms need s > 0")
    return float(phi_prime_array(exp, pv.s, pv.phi, pv.excess))


def threshold(exp: Exponent | float) -> float:
    """The point s0 where phi(s) crosses s**(1/(p-1))."""
    exp = as_exponent(exp)
    if exp.regime is Regime.TWO:
        raise DomainError("phi is not defined at p = 2")
    return exp.s0


def phi_threshold_check(exp: Exponent | float, s: float, atol: float = 1e-9) -> bool:
    """True iff phi(s) sits on the correct side of s**(1/(p-1)).

    Below the threshold phi(s) >= s**(1/(p-1)); above it the inequality
    reverses.  ``atol`` is a relative allowance used only to admit the
    equality point itself.
    """
    exp = as_exponent(exp)
    s = float(s)
    if not s > 0:
        raise DomainError("threshold comparison needs s > 0")
    pv = solve_phi(exp, s)
    ref = s ** (1.0 / (exp.p - 1.0))
    gap = pv.phi - ref
    s0 = threshold(exp)
    if s <= s0:
        return gap >= -atol * ref
    return gap <= atol * ref
