"""The function C = B + xz and the straight leaves along which it is affine.

Through every point (x, s0 x**(p-1)) of the equality curve runs a segment

    (X, Z) = (x + d, s0 x**(p-1) + slope(x) d),   -x < d < x/(p-1),

on which C is affine in d with a constant gradient, so the Hessian of C is
degenerate there.  At p = 2 the leaves are the anti-diagonals X + Z = 2x and
C = (X + Z)**2 / 2 is constant on each.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .bellman import Point2, jet_arrays
from .exponent import DomainError, Exponent, Regime, as_exponent
from .phi import solve_phi_array
from .verify import TolerancePolicy, VerificationReport, verdict_for

D_FRACTION = 0.8  # share of the admissible d-interval that gets sampled


@dataclass(frozen=True)
class Leaf:
    base_x: float
    slope: float
    param_range: tuple[float, float]


@dataclass(frozen=True)
class FoliationConstant:
    s0: float
    K_of_s0: float


def leaf_slope(exp, x: float) -> float:
    exp = as_exponent(exp)
    p = exp.p
    if exp.regime is Regime.SUB2:
        return -exp.s0 ** ((p - 2.0) / (p - 1.0)) * x ** (p - 2.0)
    if exp.regime is Regime.SUPER2:
        return -exp.K * x ** (p - 2.0)
    return -1.0


def leaf(exp, x: float) -> Leaf:
    exp = as_exponent(exp)
    if not x > 0:
        raise DomainError(f"leaf base must be positive, got {x}")
    return Leaf(base_x=float(x), slope=leaf_slope(exp, x),
                param_range=(-float(x), float(x) / (exp.p - 1.0)))


def _leaf_xz(exp: Exponent, x: float, d):
    d = np.asarray(d, dtype=float)
    z0 = exp.s0 * x ** (exp.p - 1.0)
    return x + d, z0 + leaf_slope(exp, x) * d


def leaf_point(exp, x: float, d: float) -> Point2:
    """The point at parameter d on the leaf through (x, s0 x**(p-1))."""
    exp = as_exponent(exp)
    lf = leaf(exp, x)
    lo, hi = lf.param_range
    if not lo < d < hi:
        raise DomainError(
            f"d={d} leaves the quadrant; admissible d lies in ({lo}, {hi}), max admissible d = {hi}")
    X, Z = _leaf_xz(exp, x, d)
    return Point2(float(X), float(Z))


def leaf_samples(exp, x: float, n: int, fraction: float = D_FRACTION) -> np.ndarray:
    lo, hi = leaf(exp, x).param_range
    return np.linspace(fraction * lo, fraction * hi, n)


def phi_on_leaf(exp, x: float, d):
    """Closed-form value of phi(X**(1-p) Z) along the leaf."""
    exp = as_exponent(exp)
    p = exp.p
    d = np.asarray(d, dtype=float)
    if exp.regime is Regime.SUB2:
        return (x + d - p * d) / ((x + d) * (p - 1.0))
    if exp.regime is Regime.SUPER2:
        return ((p - 1.0) * x - d) / (x + d)
    raise DomainError("phi is not defined at p = 2")


def C_affine(exp, x: float, d):
    """C on the leaf as the affine function of d."""
    exp = as_exponent(exp)
    p = exp.p
    d = np.asarray(d, dtype=float)
    if exp.regime is Regime.SUB2:
        c = p * (p - 1.0) ** (-p)
        return c * x ** p + c * (2.0 - p) * x ** (p - 1.0) * d
    if exp.regime is Regime.SUPER2:
        y = (p - 1.0) * x
        return exp.p_conj * y ** p - p * (p - 2.0) * y ** (p - 1.0) * d
    return 2.0 * x * x + 0.0 * d


def leaf_gradient(exp, x: float) -> tuple[float, float]:
    """The constant gradient (C_x, C_z) along the leaf through base x."""
    exp = as_exponent(exp)
    p = exp.p
    return (exp.K + exp.s0) * x ** (p - 1.0), x * (1.0 + exp.s0 ** (1.0 / (p - 1.0)))


def C_direct(exp, X, Z):
    exp = as_exponent(exp)
    return jet_arrays(exp, X, Z).value + np.asarray(X) * np.asarray(Z)


def check_phi_on_leaf(exp, x: float, d: float) -> float:
    """|phi(X**(1-p) Z) - closed form| at one leaf point."""
    exp = as_exponent(exp)
    pt = leaf_point(exp, x, d)
    s = pt.x ** (1.0 - exp.p) * pt.z
    phi, _, _, _ = solve_phi_array(exp, np.array([s]))
    return float(abs(phi[0] - phi_on_leaf(exp, x, d)))


def axis_intercept(exp, x: float) -> tuple[str, float, float]:
    """Extrapolate the leaf line to the axis it meets.

    Returns (axis, extrapolated, claimed): the x-axis crossing for p < 2 and
    the z-axis crossing for p > 2.  The line is rebuilt from two interior
    leaf points, so the check never touches the boundary.
    """
    exp = as_exponent(exp)
    p = exp.p
    d1, d2 = leaf_samples(exp, x, 2, 0.5)
    X1, Z1 = _leaf_xz(exp, x, d1)
    X2, Z2 = _leaf_xz(exp, x, d2)
    slope = (Z2 - Z1) / (X2 - X1)
    if exp.regime is Regime.SUPER2:
        return "z", float(Z1 - slope * X1), (exp.K + exp.s0) * x ** (p - 1.0)
    claimed = x * (1.0 + exp.s0 ** (1.0 / (p - 1.0)))
    return "x", float(X1 - Z1 / slope), claimed


def check_C_affine_on_leaf(exp, x: float, d_samples,
                           policy: TolerancePolicy = TolerancePolicy()) -> VerificationReport:
    """Affine match, constant gradient, phi identity and degeneracy on one leaf."""
    exp = as_exponent(exp)
    d = np.asarray(d_samples, dtype=float)
    lo, hi = leaf(exp, x).param_range
    if np.any(d <= lo) or np.any(d >= hi):
        raise DomainError(f"every d must lie in ({lo}, {hi})")
    X, Z = _leaf_xz(exp, x, d)
    jet = jet_arrays(exp, X, Z)
    direct = jet.value + X * Z
    affine = C_affine(exp, x, d)
    affine_err = np.abs(direct - affine) / np.abs(affine)

    cx, cz = jet.bx + Z, jet.bz + X
    gx, gz = leaf_gradient(exp, x)
    grad_err = np.maximum(np.abs(cx - gx) / abs(gx), np.abs(cz - gz) / abs(gz))

    cxz = jet.bxz + 1.0
    degeneracy = np.abs(jet.bxx * jet.bzz - cxz * cxz) / (cxz * cxz)

    if exp.regime is Regime.TWO:
        phi_err = np.zeros_like(d)
    else:
        phi_err = np.abs(jet.phi - phi_on_leaf(exp, x, d)) / np.abs(phi_on_leaf(exp, x, d))

    worst_each = {
        "affine_max_relative_error": float(np.max(affine_err)),
        "gradient_max_relative_error": float(np.max(grad_err)),
        "phi_max_relative_error": float(np.max(phi_err)),
        "degeneracy_max_relative_error": float(np.max(degeneracy)),
    }
    combined = np.maximum.reduce([affine_err, grad_err, phi_err, degeneracy])
    i = int(np.argmax(combined))
    worst = -float(combined[i])
    bad = int(np.count_nonzero(~jet.ok))
    return VerificationReport(
        condition="leaf", p=exp.p, grid=None, worst_violation=worst,
        location={"base_x": float(x), "d": float(d[i])}, samples=int(d.size),
        verdict=verdict_for(worst, policy.equality, bad), seed=None,
        tolerance=policy.equality, indeterminate=bad, details=worst_each,
    )


def K_of_s0(exp, s0: float) -> float:
    exp = as_exponent(exp)
    p = exp.p
    if not s0 > 0:
        raise DomainError("s0 must be positive")
    if exp.regime is Regime.SUB2:
        return (s0 ** ((p - 2.0) / (p - 1.0)) + (2.0 - p) * s0) / (p - 1.0)
    if exp.regime is Regime.SUPER2:
        den = s0 ** (1.0 / (p - 1.0)) - p + 2.0
        if not den > 0:
            raise DomainError(f"need s0**(1/(p-1)) > p-2; s0 must exceed {(p - 2.0) ** (p - 1.0)}")
        return s0 * (p - 1.0) / den
    return 1.0


def _dK(exp: Exponent, s: float) -> float:
    """Derivative of K_of_s0 up to a positive factor."""
    p = exp.p
    if exp.regime is Regime.SUB2:
        a = (p - 2.0) / (p - 1.0)
        return a * s ** (a - 1.0) + (2.0 - p)
    b = 1.0 / (p - 1.0)
    return s ** b * (1.0 - b) - (p - 2.0)


def default_search_interval(exp) -> tuple[float, float]:
    exp = as_exponent(exp)
    lo, hi = exp.s0 / 50.0, exp.s0 * 50.0
    if exp.regime is Regime.SUPER2:
        lo = max(lo, (exp.p - 2.0) ** (exp.p - 1.0) * (1.0 + 1e-6))
    return lo, hi


class UnimodalityError(RuntimeError):
    """K(s0) did not show a single interior minimum on the interval."""


def minimize_K(exp, search_interval: tuple[float, float] | None = None,
               probes: int = 257) -> FoliationConstant:
    """Minimize K(s0) by bounded scalar search, then polish on K'(s0) = 0.

    The search alone pins the minimizer only to about sqrt(eps) because K is
    flat there; the derivative root restores full precision.  At p = 2, K is
    identically 1 and s0 = 1 is returned.
    """
    exp = as_exponent(exp)
    if exp.regime is Regime.TWO:
        return FoliationConstant(1.0, 1.0)
    lo, hi = search_interval or default_search_interval(exp)
    if not 0 < lo < hi:
        raise DomainError(f"bad search interval {(lo, hi)}")

    grid = np.geomspace(lo, hi, probes)
    signs = np.sign([_dK(exp, s) for s in grid])
    changes = np.count_nonzero(np.diff(signs) != 0)
    if changes != 1 or signs[0] >= 0 or signs[-1] <= 0:
        raise UnimodalityError(
            f"K' changes sign {changes} times on {(lo, hi)}; no single interior minimum")

    res = optimize.minimize_scalar(lambda t: K_of_s0(exp, math.exp(t)),
                                   bounds=(math.log(lo), math.log(hi)), method="bounded",
                                   options={"xatol": 1e-10})
    s_guess = math.exp(res.x)
    j = int(np.searchsorted(grid, s_guess))
    a, b = grid[max(j - 2, 0)], grid[min(j + 1, probes - 1)]
    if _dK(exp, a) * _dK(exp, b) > 0:
        a, b = lo, hi
    s_star = optimize.brentq(lambda s: _dK(exp, s), a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps)
    return FoliationConstant(s0=s_star, K_of_s0=K_of_s0(exp, s_star))


def leaf_bases(n: int, x_range: tuple[float, float] = (0.1, 10.0)) -> np.ndarray:
    return np.geomspace(x_range[0], x_range[1], n)


LEAF_COLUMNS = ("p", "base_x", "d", "X", "Z", "C_direct", "C_affine", "phi_slack")


def leaf_table(exp, n_leaves: int = 20, n_d: int = 20,
               x_range: tuple[float, float] = (0.1, 10.0)) -> list[dict]:
    exp = as_exponent(exp)
    rows = []
    for x in leaf_bases(n_leaves, x_range):
        d = leaf_samples(exp, x, n_d)
        X, Z = _leaf_xz(exp, x, d)
        jet = jet_arrays(exp, X, Z)
        direct = jet.value + X * Z
        affine = C_affine(exp, x, d)
        if exp.regime is Regime.TWO:
            slack = np.zeros_like(d)
        else:
            slack = np.abs(jet.phi - phi_on_leaf(exp, x, d))
        for i in range(d.size):
            rows.append({"p": exp.p, "base_x": float(x), "d": float(d[i]), "X": float(X[i]),
                         "Z": float(Z[i]), "C_direct": float(direct[i]),
                         "C_affine": float(affine[i]), "phi_slack": float(slack[i])})
    return rows


def rows_to_csv(rows: list[dict], columns=LEAF_COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def run_foliation(exp, n_leaves: int = 20, n_d: int = 20,
                  x_range: tuple[float, float] = (0.1, 10.0),
                  policy: TolerancePolicy = TolerancePolicy()) -> VerificationReport:
    """Every leaf check on ``n_leaves`` leaves, plus minimizer and intercepts."""
    exp = as_exponent(exp)
    leaves = [check_C_affine_on_leaf(exp, x, leaf_samples(exp, x, n_d), policy)
              for x in leaf_bases(n_leaves, x_range)]
    worst = min(leaves, key=lambda r: r.worst_violation)
    details = {name: max(r.details[name] for r in leaves) for name in leaves[0].details}

    fc = minimize_K(exp)
    s0_err = abs(fc.s0 - exp.s0) / exp.s0
    k_err = abs(fc.K_of_s0 - exp.K) / exp.K
    details.update({"minimizer_s0": fc.s0, "minimum_K": fc.K_of_s0,
                    "minimizer_relative_error": s0_err, "minimum_relative_error": k_err})
    bad = sum(r.indeterminate for r in leaves)
    ok = s0_err <= policy.equality and k_err <= policy.equality

    if exp.regime is Regime.TWO:
        details["note"] = "p = 2: leaves are the lines X + Z = const and C is constant on each"
    else:
        gaps = []
        for x in leaf_bases(n_leaves, x_range):
            axis, got, claimed = axis_intercept(exp, x)
            gaps.append(float(abs(got - claimed) / claimed))
        details["intercept_axis"] = axis
        details["intercept_max_relative_error"] = float(max(gaps))
        ok = ok and max(gaps) <= policy.equality

    verdict = verdict_for(worst.worst_violation, policy.equality, bad)
    return VerificationReport(
        condition="foliation", p=exp.p, grid=None, worst_violation=worst.worst_violation,
        location=worst.location, samples=n_leaves * n_d,
        verdict=verdict if ok else "fail", seed=None, tolerance=policy.equality,
        indeterminate=bad, details=details,
    )
