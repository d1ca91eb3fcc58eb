"""Heat-semigroup check of the bilinear Littlewood-Paley estimate on the line.

For u_f(x, t) = (p_t * f)(x) with p_t the Gaussian kernel of variance t,

    int_0^inf int |d/dx u_f| |d/dx u_g| dx dt <= K**(1/p) ||f||_p ||g||_p'.

The t-integral is taken over a finite window in log-t by Simpson's rule.
The pieces outside the window are bounded explicitly:

    t > T:      int |u_f'||u_g'| dx <= ||f||_1 ||g||_1 ||p_t'||_inf ||p_t'||_1
                                     = ||f||_1 ||g||_1 / (pi sqrt(e) t**1.5),
                so the tail is at most 2 ||f||_1 ||g||_1 / (pi sqrt(e T));
    t < t_min:  int |u_f'||u_g'| dx <= ||f'||_2 ||g'||_2, so the head is at
                most t_min ||f'||_2 ||g'||_2.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, signal

from .exponent import DomainError, as_exponent
from .verify import _jsonable

EPS_QUAD = 0.05
TAIL_SHARE = 0.10  # tail estimate above this share of the bound => inconclusive
KERNEL_WIDTH = 9.0  # kernel truncated at this many standard deviations


class ResolutionError(RuntimeError):
    """The grid cannot resolve the heat kernel at the requested time."""


@dataclass(frozen=True)
class GridFunction:
    """Samples of a function on the uniform grid of n points over [-L, L]."""

    L: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 16:
            raise DomainError("a grid function needs at least 16 samples")
        if not np.all(np.isfinite(v)):
            raise DomainError("grid function values must be finite")
        if not self.L > 0:
            raise DomainError("half-width L must be positive")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def dx(self) -> float:
        return 2.0 * self.L / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n)

    def norm(self, p: float) -> float:
        if math.isinf(p):
            return float(np.max(np.abs(self.values)))
        return float(np.trapezoid(np.abs(self.values) ** p, dx=self.dx) ** (1.0 / p))

    def derivative_norm2(self) -> float:
        return float(np.linalg.norm(np.gradient(self.values, self.dx)) * math.sqrt(self.dx))

    @classmethod
    def sample(cls, func, L: float, n: int) -> "GridFunction":
        return cls(L, func(np.linspace(-L, L, n)))


def _check_resolution(dx: float, t: float):
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    if math.sqrt(t) < 2.0 * dx:
        raise ResolutionError(
            f"heat kernel at t={t:g} has standard deviation {math.sqrt(t):.3g} < 2 grid steps ({dx:.3g})")


def _kernel(dx: float, t: float):
    half = int(math.ceil(KERNEL_WIDTH * math.sqrt(t) / dx))
    y = dx * np.arange(-half, half + 1)
    k = np.exp(-y * y / (2.0 * t))
    return y, k / (np.sum(k) * dx)


def heat_extension(f: GridFunction, t: float) -> GridFunction:
    """p_t * f on the same grid, with the sampled kernel renormalized to unit mass.

    Mass that the kernel carries past [-L, L] is dropped, so f should be
    negligible near the ends of its grid.
    """
    _check_resolution(f.dx, t)
    _, k = _kernel(f.dx, t)
    k = k * f.dx
    if k.size > 2 * f.n - 1:
        mid = k.size // 2
        k = k[mid - (f.n - 1): mid + f.n]
    out = signal.fftconvolve(f.values, k, mode="same")
    return GridFunction(f.L, out)


def heat_gradient(f: GridFunction, t: float):
    """x-derivative of p_t * f on the grid extended by the kernel width.

    The derivative falls on the kernel, p_t'(y) = -y p_t(y)/t, so no
    differencing of u is involved.  Returns (x, u_x).
    """
    _check_resolution(f.dx, t)
    y, k = _kernel(f.dx, t)
    dk = -y / t * k * f.dx
    half = y.size // 2
    out = signal.fftconvolve(f.values, dk, mode="full")
    x = -f.L - half * f.dx + f.dx * np.arange(out.size)
    return x, out


def pair_integrand(f: GridFunction, g: GridFunction, t: float) -> float:
    """int |d/dx u_f(x, t)| |d/dx u_g(x, t)| dx."""
    if f.n != g.n or f.L != g.L:
        raise DomainError("f and g must share a grid")
    _, uf = heat_gradient(f, t)
    _, ug = heat_gradient(g, t)
    return float(np.trapezoid(np.abs(uf) * np.abs(ug), dx=f.dx))


@dataclass(frozen=True)
class QuadratureSpec:
    t_min: float = 1e-3
    t_max: float = 1e3
    points_per_decade: int = 40

    def __post_init__(self):
        if not 0 < self.t_min < self.t_max:
            raise DomainError("need 0 < t_min < t_max")
        if self.points_per_decade < 2:
            raise DomainError("need at least 2 points per decade")

    def times(self) -> np.ndarray:
        decades = math.log10(self.t_max / self.t_min)
        n = int(round(decades * self.points_per_decade)) + 1
        n += (n + 1) % 2  # Simpson wants an odd count
        return np.geomspace(self.t_min, self.t_max, n)


@dataclass
class PaleyResult:
    p: float
    lhs: float
    bound: float
    epsilon: float
    tail_bound: float
    head_bound: float
    verdict: str
    times: np.ndarray = field(repr=False)
    profile: np.ndarray = field(repr=False)
    details: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        """Relative room left under the bound: 1 - lhs/bound."""
        return 1.0 - self.lhs / self.bound if self.bound > 0 else math.inf

    def to_dict(self) -> dict:
        return _jsonable({"p": self.p, "lhs": self.lhs, "bound": self.bound,
                          "epsilon": self.epsilon, "tail_bound": self.tail_bound,
                          "head_bound": self.head_bound, "margin": self.margin,
                          "verdict": self.verdict, "details": self.details})


def window_integral(f: GridFunction, g: GridFunction, spec: QuadratureSpec = QuadratureSpec()):
    """Simpson's rule in log t over [t_min, t_max].  Returns (value, times, profile)."""
    ts = spec.times()
    prof = np.array([pair_integrand(f, g, t) for t in ts])
    value = float(integrate.simpson(prof * ts, x=np.log(ts)))
    return value, ts, prof


def check_lp_paley(f: GridFunction, g: GridFunction, exp, t_max: float | None = None,
                   quadrature_spec: QuadratureSpec = QuadratureSpec(),
                   epsilon: float = EPS_QUAD) -> PaleyResult:
    """Windowed left side against K**(1/p) ||f||_p ||g||_p' (1 + epsilon)."""
    exp = as_exponent(exp)
    spec = quadrature_spec
    if t_max is not None:
        spec = QuadratureSpec(spec.t_min, t_max, spec.points_per_decade)
    _check_resolution(f.dx, spec.t_min)
    bound = exp.K ** (1.0 / exp.p) * f.norm(exp.p) * g.norm(exp.p_conj)
    if not np.any(g.values) or not np.any(f.values):
        ts = spec.times()
        return PaleyResult(exp.p, 0.0, bound, epsilon, 0.0, 0.0, "pass", ts, np.zeros_like(ts),
                           {"note": "a zero function makes the left side vanish"})
    lhs, ts, prof = window_integral(f, g, spec)
    tail = 2.0 * f.norm(1) * g.norm(1) / (math.pi * math.sqrt(math.e * spec.t_max))
    head = spec.t_min * f.derivative_norm2() * g.derivative_norm2()
    if tail > TAIL_SHARE * bound:
        verdict = "inconclusive"
    else:
        verdict = "pass" if lhs <= bound * (1.0 + epsilon) else "fail"
    details = {"t_min": spec.t_min, "t_max": spec.t_max, "t_points": int(ts.size),
               "upper_estimate": lhs + tail + head, "grid_n": f.n, "grid_L": f.L}
    return PaleyResult(exp.p, lhs, bound, epsilon, tail, head, verdict, ts, prof, details)


def gaussian_window_oracle(a: float, b: float) -> float:
    """Exact int_a^b int (d/dx u)**2 dx dt for f the standard Gaussian density.

    u(., t) is the centred Gaussian density of variance v = 1 + t, and
    int (u_x)**2 dx = 1 / (4 sqrt(pi) v**1.5).
    """
    return ((1.0 + a) ** -0.5 - (1.0 + b) ** -0.5) / (2.0 * math.sqrt(math.pi))


# --- function specs ---------------------------------------------------------

_SPEC_FIELDS = {
    "gaussian": {"center": 0.0, "sigma": 1.0, "amplitude": 1.0},
    "bump": {"center": 0.0, "radius": 1.0, "amplitude": 1.0},
    "step-smoothed": {"left": -1.0, "right": 1.0, "width": 0.25, "amplitude": 1.0},
}


def make_function(spec: dict):
    """A vectorized callable from {"type": ..., parameters...}; unknown keys are rejected."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise DomainError("a function spec is an object with a 'type' field")
    kind = spec["type"]
    if kind not in _SPEC_FIELDS:
        raise DomainError(f"function type must be one of {sorted(_SPEC_FIELDS)}, got {kind!r}")
    extra = set(spec) - set(_SPEC_FIELDS[kind]) - {"type", "name"}
    if extra:
        raise DomainError(f"unknown fields for {kind}: {sorted(extra)}")
    prm = {**_SPEC_FIELDS[kind], **{k: float(v) for k, v in spec.items() if k not in ("type", "name")}}
    a = prm["amplitude"]
    if kind == "gaussian":
        c, s = prm["center"], prm["sigma"]
        if not s > 0:
            raise DomainError("sigma must be positive")
        return lambda x: a * np.exp(-0.5 * ((x - c) / s) ** 2) / (s * math.sqrt(2.0 * math.pi))
    if kind == "bump":
        c, r = prm["center"], prm["radius"]
        if not r > 0:
            raise DomainError("radius must be positive")

        def bump(x):
            u = (np.asarray(x) - c) / r
            inside = np.abs(u) < 1.0
            out = np.zeros_like(u, dtype=float)
            out[inside] = a * np.exp(-1.0 / (1.0 - u[inside] ** 2))
            return out
        return bump
    lo, hi, w = prm["left"], prm["right"], prm["width"]
    if not (w > 0 and lo < hi):
        raise DomainError("step-smoothed needs width > 0 and left < right")
    return lambda x: a * 0.5 * (np.tanh((x - lo) / w) - np.tanh((x - hi) / w))


@dataclass(frozen=True)
class PaleyCase:
    name: str
    p: float
    f: dict
    g: dict


DEFAULT_BATTERY = (
    PaleyCase("gaussian_p2", 2.0, {"type": "gaussian"}, {"type": "gaussian"}),
    PaleyCase("bumps_p3", 3.0, {"type": "bump", "radius": 1.5},
              {"type": "bump", "center": 1.0, "radius": 1.5}),
    PaleyCase("gauss_step_p1.5", 1.5, {"type": "gaussian", "sigma": 0.7},
              {"type": "step-smoothed", "left": -2.0, "right": 1.0, "width": 0.3}),
    PaleyCase("step_gauss_p4", 4.0, {"type": "step-smoothed", "width": 0.5},
              {"type": "gaussian", "center": 0.5, "sigma": 2.0}),
    PaleyCase("bump_gauss_p1.25", 1.25, {"type": "bump", "radius": 2.0, "amplitude": 2.0},
              {"type": "gaussian", "center": -1.0, "sigma": 0.5}),
    PaleyCase("gauss_bump_p8", 8.0, {"type": "gaussian", "center": -0.5, "sigma": 1.2},
              {"type": "bump", "center": 0.5, "radius": 1.0, "amplitude": -3.0}),
)

DEFAULT_L = 12.0
DEFAULT_N = 2048


def run_case(case: PaleyCase, L: float = DEFAULT_L, n: int = DEFAULT_N,
             spec: QuadratureSpec = QuadratureSpec(), epsilon: float = EPS_QUAD) -> PaleyResult:
    f = GridFunction.sample(make_function(case.f), L, n)
    g = GridFunction.sample(make_function(case.g), L, n)
    res = check_lp_paley(f, g, case.p, quadrature_spec=spec, epsilon=epsilon)
    res.details["case"] = case.name
    return res


def load_battery(text: str) -> list[PaleyCase]:
    """Parse a JSON battery: {"cases": [{"name", "p", "f": spec, "g": spec}, ...]}."""
    data = json.loads(text)
    if not isinstance(data, dict) or set(data) - {"cases"}:
        raise DomainError("battery config must be an object with a single 'cases' list")
    cases = []
    for item in data.get("cases", []):
        extra = set(item) - {"name", "p", "f", "g"}
        if extra:
            raise DomainError(f"unknown case fields: {sorted(extra)}")
        make_function(item["f"])
        make_function(item["g"])
        cases.append(PaleyCase(str(item.get("name", f"case{len(cases)}")), float(item["p"]),
                               item["f"], item["g"]))
    if not cases:
        raise DomainError("battery has no cases")
    return cases


def profile_csv(results: list[PaleyResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["case", "p", "t", "integral"])
    for r in results:
        for t, v in zip(r.times, r.profile):
            writer.writerow([r.details.get("case", ""), repr(r.p), repr(float(t)), repr(float(v))])
    return buf.getvalue()
