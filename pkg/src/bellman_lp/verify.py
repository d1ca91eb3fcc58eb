"""Grid and Monte Carlo certification of the pointwise conditions on B.

Every check computes a signed slack (negative means the condition fails) and
divides it by the magnitude of the quantities being compared, so reports
carry a relative ``worst_violation``.  A report passes iff that number is at
least ``-tolerance``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .bellman import grad_highdim, jet_arrays, majorant
from .exponent import DomainError, Exponent, Regime, as_exponent

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class TolerancePolicy:
    closed_form: float = 1e-9
    finite_difference: float = 1e-4
    equality: float = 1e-8  # discriminant / degeneracy equalities
    locus: float = 1e-9  # majorization equality on the curve z = s0 x**(p-1)
    tight_side: float = 1e-10


TOLERANCE_PROFILES = {
    "standard": TolerancePolicy(),
    "strict": TolerancePolicy(closed_form=1e-11, finite_difference=1e-5,
                              equality=1e-10, locus=1e-11, tight_side=1e-12),
}


@dataclass(frozen=True)
class GridSpec:
    x_range: tuple[float, float] = (1e-3, 1e3)
    z_range: tuple[float, float] = (1e-3, 1e3)
    points_per_axis: int = 64
    spacing: str = "log"
    p_list: tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("x_range", "z_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo < hi < math.inf):
                raise DomainError(f"{name} must be an interval inside (0, inf), got {(lo, hi)}")
        if int(self.points_per_axis) < 2:
            raise DomainError("a grid needs at least 2 points per axis")
        if self.spacing not in ("log", "linear"):
            raise DomainError(f"spacing must be 'log' or 'linear', got {self.spacing!r}")

    def axis(self, lo: float, hi: float) -> np.ndarray:
        n = int(self.points_per_axis)
        if self.spacing == "log":
            return np.logspace(math.log10(lo), math.log10(hi), n)
        return np.linspace(lo, hi, n)

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        xs = self.axis(*self.x_range)
        zs = self.axis(*self.z_range)
        X, Z = np.meshgrid(xs, zs, indexing="ij")
        return X.ravel(), Z.ravel()

    def to_dict(self) -> dict:
        return {
            "x_range": list(self.x_range),
            "z_range": list(self.z_range),
            "points_per_axis": int(self.points_per_axis),
            "spacing": self.spacing,
        }


STANDARD_GRID = GridSpec()
STANDARD_P_LIST = (1.1, 1.25, 1.5, 1.75, 1.9, 2.0, 2.1, 2.5, 3.0, 4.0, 8.0)


@dataclass
class VerificationReport:
    condition: str
    p: float
    grid: dict | None
    worst_violation: float
    location: dict
    samples: int
    verdict: str
    seed: int | None
    tolerance: float
    indeterminate: int = 0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def verdict_for(worst: float, tolerance: float, indeterminate: int = 0) -> str:
    return "pass" if indeterminate == 0 and worst >= -tolerance else "fail"


def _relative(slack, scale):
    scale = np.where(scale > 0, scale, 1.0)
    return slack / scale


def _reduce(rel, ok, coords: dict):
    """Worst relative slack over certified points and where it happens."""
    rel = np.where(ok, rel, np.inf)
    if not np.any(ok):
        return -math.inf, {}
    i = int(np.argmin(rel))
    return float(rel[i]), {k: float(np.asarray(v)[i]) for k, v in coords.items()}


def _report(condition, exp, grid, rel, ok, coords, tol, seed=None, details=None):
    worst, where = _reduce(rel, ok, coords)
    bad = int(np.count_nonzero(~ok))
    return VerificationReport(
        condition=condition, p=exp.p,
        grid=grid.to_dict() if grid is not None else None,
        worst_violation=worst, location=where, samples=int(np.size(ok)),
        verdict=verdict_for(worst, tol, bad), seed=seed, tolerance=tol,
        indeterminate=bad, details=details or {},
    )


def check_initial(exp, grid: GridSpec = STANDARD_GRID,
                  policy: TolerancePolicy = TolerancePolicy()) -> VerificationReport:
    """B(x, z) >= x z."""
    exp = as_exponent(exp)
    X, Z = grid.points()
    jet = jet_arrays(exp, X, Z)
    xz = X * Z
    rel = _relative(jet.value - xz, np.abs(jet.value) + xz)
    return _report("initial", exp, grid, rel, jet.ok, {"x": X, "z": Z}, policy.closed_form)


def equality_locus(exp, x_range=(1e-3, 1e3), n: int = 100):
    """Points (x, s0 x**(p-1)) and the relative gap |B - majorant| / majorant there."""
    exp = as_exponent(exp)
    xs = np.logspace(math.log10(x_range[0]), math.log10(x_range[1]), n)
    zs = exp.s0 * xs ** (exp.p - 1.0)
    jet = jet_arrays(exp, xs, zs)
    m = majorant(exp, xs, zs)
    return xs, zs, np.abs(jet.value - m) / m, jet.ok


def check_majorization(exp, grid: GridSpec = STANDARD_GRID,
                       policy: TolerancePolicy = TolerancePolicy(),
                       locus_points: int = 100) -> VerificationReport:
    """B <= K x**p/p + z**p'/p', with equality along z = s0 x**(p-1)."""
    exp = as_exponent(exp)
    X, Z = grid.points()
    jet = jet_arrays(exp, X, Z)
    m = majorant(exp, X, Z)
    rel = _relative(m - jet.value, m + np.abs(jet.value))
    xs, _, gap, lok = equality_locus(exp, grid.x_range, locus_points)
    locus_gap = float(np.max(np.where(lok, gap, np.inf)))
    rep = _report("majorization", exp, grid, rel, jet.ok, {"x": X, "z": Z}, policy.closed_form,
                  details={"s0": exp.s0, "locus_points": int(locus_points),
                           "locus_max_relative_gap": locus_gap,
                           "locus_tolerance": policy.locus})
    if not (locus_gap <= policy.locus):
        rep.verdict = "fail"
    return rep


def check_monotonicity(exp, grid: GridSpec = STANDARD_GRID,
                       policy: TolerancePolicy = TolerancePolicy()) -> VerificationReport:
    """Bxx/(|Bxz|+1) <= Bx/x and Bzz/(|Bxz|+1) <= Bz/z."""
    exp = as_exponent(exp)
    X, Z = grid.points()
    jet = jet_arrays(exp, X, Z)
    d = np.abs(jet.bxz) + 1.0
    ax, bx = jet.bx / X, jet.bxx / d
    az, bz = jet.bz / Z, jet.bzz / d
    rel_x = _relative(ax - bx, np.abs(ax) + np.abs(bx))
    rel_z = _relative(az - bz, np.abs(az) + np.abs(bz))
    rel = np.minimum(rel_x, rel_z)
    ok = jet.ok
    max_x = float(np.max(np.abs(np.where(ok, rel_x, 0.0))))
    max_z = float(np.max(np.abs(np.where(ok, rel_z, 0.0))))
    tight = [name for name, m in (("x", max_x), ("z", max_z)) if m <= policy.tight_side]
    expected = {Regime.SUB2: ["z"], Regime.SUPER2: ["x"], Regime.TWO: ["x", "z"]}[exp.regime]
    return _report("monotonicity", exp, grid, rel, ok, {"x": X, "z": Z}, policy.closed_form,
                   details={"x_slack_max_abs": max_x, "z_slack_max_abs": max_z,
                            "tight_sides": tight, "expected_tight_sides": expected})


def check_concavity(exp, grid: GridSpec = STANDARD_GRID, hk_samples: int = 8, seed: int = 0,
                    policy: TolerancePolicy = TolerancePolicy()) -> VerificationReport:
    """Bxx h^2 + 2 Bxz h k + Bzz k^2 >= 2|h||k| and the discriminant form.

    Checks (a) the discriminant Bxx Bzz >= (|Bxz|+1)^2 and how close it is to
    equality, (b) the quadratic form over ``hk_samples`` random unit pairs
    per point plus the direction where the reflected form vanishes, and (c)
    the reflected form on the same pairs.
    """
    if hk_samples < 1:
        raise DomainError("hk_samples must be at least 1")
    exp = as_exponent(exp)
    X, Z = grid.points()
    jet = jet_arrays(exp, X, Z)
    ok = jet.ok
    d = np.abs(jet.bxz) + 1.0
    prod = jet.bxx * jet.bzz
    rel_disc = _relative(prod - d * d, prod + d * d)
    eq_gap = float(np.max(np.where(ok, np.abs(prod - d * d) / (d * d), 0.0)))

    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(X.size, hk_samples))
    # null direction of the reflected form: h/k = sqrt(Bzz/Bxx)
    with np.errstate(divide="ignore", invalid="ignore"):
        crit = np.arctan2(np.sqrt(jet.bxx), np.sqrt(jet.bzz))
    theta = np.concatenate([theta, np.nan_to_num(crit)[:, None]], axis=1)
    h, k = np.cos(theta), np.sin(theta)
    bxx, bxz, bzz = jet.bxx[:, None], jet.bxz[:, None], jet.bzz[:, None]
    ahk = np.abs(h * k)
    form = bxx * h * h + 2.0 * bxz * h * k + bzz * k * k - 2.0 * ahk
    refl = bxx * h * h - 2.0 * np.abs(bxz) * ahk + bzz * k * k - 2.0 * ahk
    scale = bxx * h * h + 2.0 * np.abs(bxz) * ahk + bzz * k * k + 2.0 * ahk
    rel_form = np.min(_relative(form, scale), axis=1)
    rel_refl = np.min(_relative(refl, scale), axis=1)
    diag = _relative(np.minimum(jet.bxx, jet.bzz), np.abs(jet.bxx) + np.abs(jet.bzz))
    rel = np.minimum.reduce([rel_disc, rel_form, rel_refl, np.minimum(diag, 0.0)])

    def worst(r):
        return float(np.min(np.where(ok, r, np.inf)))

    rep = _report("concavity", exp, grid, rel, ok, {"x": X, "z": Z}, policy.closed_form, seed=seed,
                  details={"hk_samples": int(hk_samples),
                           "discriminant_worst": worst(rel_disc),
                           "quadratic_form_worst": worst(rel_form),
                           "reflected_form_worst": worst(rel_refl),
                           "discriminant_equality_gap": eq_gap,
                           "equality_tolerance": policy.equality})
    if not (eq_gap <= policy.equality):
        rep.verdict = "fail"
    return rep


def _sample_vectors(rng, n, dim, decades=(-3.0, 3.0)):
    """n vectors in R^dim: uniform direction, log-uniform norm."""
    v = rng.standard_normal((n, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    r = 10.0 ** rng.uniform(decades[0], decades[1], size=n)
    return v * r[:, None]


def _jump_samples(rng, n, dim):
    x = _sample_vectors(rng, n, dim)
    z = _sample_vectors(rng, n, dim)
    h = _sample_vectors(rng, n, dim)
    k = _sample_vectors(rng, n, dim)
    return x, z, h, k


def check_jump_control(exp, dim: int = 3, samples: int = 100_000, seed: int = 0,
                       policy: TolerancePolicy = TolerancePolicy()) -> VerificationReport:
    """B(x+h, z+k) >= B(x, z) + <Bx, h> + <Bz, k> + |h||k| on random quadruples."""
    exp = as_exponent(exp)
    if dim < 2:
        raise DomainError("the high-dimensional extension needs dim >= 2")
    rng = np.random.default_rng(seed)
    x, z, h, k = _jump_samples(rng, samples, dim)
    resampled = 0
    while True:
        bad = (np.linalg.norm(x + h, axis=1) == 0) | (np.linalg.norm(z + k, axis=1) == 0)
        if not np.any(bad):
            break
        nb = int(np.count_nonzero(bad))
        resampled += nb
        x[bad], z[bad], h[bad], k[bad] = _jump_samples(rng, nb, dim)

    gx, gz, jet0 = grad_highdim(exp, x, z)
    nxh, nzk = np.linalg.norm(x + h, axis=1), np.linalg.norm(z + k, axis=1)
    jet1 = jet_arrays(exp, nxh, nzk)
    lin_x = np.sum(gx * h, axis=1)
    lin_z = np.sum(gz * k, axis=1)
    hk = np.linalg.norm(h, axis=1) * np.linalg.norm(k, axis=1)
    slack = jet1.value - jet0.value - lin_x - lin_z - hk
    scale = np.abs(jet1.value) + np.abs(jet0.value) + np.abs(lin_x) + np.abs(lin_z) + hk
    rel = _relative(slack, scale)
    ok = jet0.ok & jet1.ok
    details = {"dim": int(dim), "resampled": resampled}
    if exp.regime is Regime.TWO:
        nh, nk = np.linalg.norm(h, axis=1), np.linalg.norm(k, axis=1)
        exact = 0.5 * (nh - nk) ** 2
        details["p2_identity_max_relative_error"] = float(np.max(np.abs(slack - exact) / scale))
    coords = {"x_norm": np.linalg.norm(x, axis=1), "z_norm": np.linalg.norm(z, axis=1),
              "h_norm": np.linalg.norm(h, axis=1), "k_norm": np.linalg.norm(k, axis=1)}
    return _report("jump_control", exp, None, rel, ok, coords, policy.closed_form,
                   seed=seed, details=details)


def check_hessian_bound(exp, dim: int = 2, samples: int = 10_000, seed: int = 0, step: float = 1e-5,
                        policy: TolerancePolicy = TolerancePolicy()) -> VerificationReport:
    """<D^2 B (h,k), (h,k)> >= Bxx/(|Bxz|+1)|h|^2 + Bzz/(|Bxz|+1)|k|^2.

    The Hessian is applied by central differences of the closed-form
    gradient along (h, k), with |h| <= |x| and |k| <= |z| so ``step`` is a
    relative displacement.
    """
    exp = as_exponent(exp)
    if dim < 2:
        raise DomainError("the high-dimensional extension needs dim >= 2")
    rng = np.random.default_rng(seed)
    x = _sample_vectors(rng, samples, dim)
    z = _sample_vectors(rng, samples, dim)
    nx, nz = np.linalg.norm(x, axis=1), np.linalg.norm(z, axis=1)
    h = _sample_vectors(rng, samples, dim, (0.0, 0.0)) * (nx * rng.uniform(0.0, 1.0, samples))[:, None]
    k = _sample_vectors(rng, samples, dim, (0.0, 0.0)) * (nz * rng.uniform(0.0, 1.0, samples))[:, None]

    gxp, gzp, _ = grad_highdim(exp, x + step * h, z + step * k)
    gxm, gzm, _ = grad_highdim(exp, x - step * h, z - step * k)
    lhs = (np.sum((gxp - gxm) * h, axis=1) + np.sum((gzp - gzm) * k, axis=1)) / (2.0 * step)

    jet = jet_arrays(exp, nx, nz)
    d = np.abs(jet.bxz) + 1.0
    h2, k2 = np.sum(h * h, axis=1), np.sum(k * k, axis=1)
    rhs = jet.bxx / d * h2 + jet.bzz / d * k2
    # magnitude of every piece of the Hessian quadratic form
    scale = (jet.bxx * h2 + 2.0 * np.abs(jet.bxz) * np.sqrt(h2 * k2) + jet.bzz * k2
             + np.abs(jet.bx) * h2 / nx + np.abs(jet.bz) * k2 / nz)
    rel = _relative(lhs - rhs, scale)
    coords = {"x_norm": nx, "z_norm": nz, "h_norm": np.sqrt(h2), "k_norm": np.sqrt(k2)}
    return _report("hessian_bound", exp, None, rel, jet.ok, coords, policy.finite_difference,
                   seed=seed, details={"dim": int(dim), "fd_step": step})


def run_suite(exp, grid: GridSpec = STANDARD_GRID, seed: int = 0,
              policy: TolerancePolicy = TolerancePolicy(), hk_samples: int = 8,
              jump_samples: int = 100_000, jump_dim: int = 3,
              hessian_samples: int = 10_000, hessian_dim: int = 2) -> list[VerificationReport]:
    """All grid and Monte Carlo checks for one exponent, in a fixed order."""
    exp = as_exponent(exp)
    return [
        check_initial(exp, grid, policy),
        check_majorization(exp, grid, policy),
        check_monotonicity(exp, grid, policy),
        check_concavity(exp, grid, hk_samples, seed, policy),
        check_jump_control(exp, jump_dim, jump_samples, seed, policy),
        check_hessian_bound(exp, hessian_dim, hessian_samples, seed, policy=policy),
    ]
