"""Discrete-time martingale pairs and triples, and empirical checks of the
inequalities they must satisfy.

Paths come in batches: arrays of shape (n_paths, steps + 1, dim) where index 0
holds the initial values and index n > 0 the n-th increment.  Every increment
is a fair random sign times a quantity that depends only on the past, so the
martingale property is structural.  ``dg`` is always built as a contraction
of ``df`` chosen from the past, and the subordination certificate
``|dg_n| <= |df_n|`` is enforced and then audited with no tolerance.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .bellman import eval_U
from .exponent import DomainError, Exponent, Regime, as_exponent
from .verify import TolerancePolicy, VerificationReport, _jsonable, verdict_for

EPS_STAT = 0.02
GENERATOR = "numpy.PCG64"
GENERATOR_VERSION = 1

V_RULES = ("one", "minus_one", "alternating", "adversarial")
RHO_RULES = ("one", "zero", "varying")
ROTATION_RULES = ("identity", "permutation", "rotation")
VALUE_DISTS = ("rademacher", "gaussian")


def child_rng(root_seed: int, *key: int) -> np.random.Generator:
    """Independent stream for ``key`` under ``root_seed``."""
    if not isinstance(root_seed, (int, np.integer)) or root_seed < 0:
        raise DomainError(f"seed must be a nonnegative integer, got {root_seed!r}")
    return np.random.default_rng(np.random.SeedSequence(int(root_seed), spawn_key=tuple(key)))


def _norms(v):
    return np.linalg.norm(v, axis=-1)


@dataclass
class IncrementPath:
    """A batch of (df, dg, dh) difference sequences; dh may be absent."""

    df: np.ndarray
    dg: np.ndarray
    dh: np.ndarray | None = None
    filtration_tag: str = "rng_stream"

    def __post_init__(self):
        if self.df.ndim != 3 or self.df.shape != self.dg.shape:
            raise DomainError("df and dg must share shape (n_paths, steps+1, dim)")
        if self.dh is not None and self.dh.shape != self.df.shape:
            raise DomainError("dh must have the shape of df")
        if self.filtration_tag not in ("rng_stream", "dyadic_tree"):
            raise DomainError(f"unknown filtration tag {self.filtration_tag!r}")
        if self.certificate() > 0:
            raise DomainError("subordination certificate failed: some |dg_n| > |df_n|")

    @property
    def n_paths(self) -> int:
        return self.df.shape[0]

    @property
    def steps(self) -> int:
        return self.df.shape[1] - 1

    @property
    def dim(self) -> int:
        return self.df.shape[2]

    def certificate(self) -> float:
        """max over all paths and times of |dg_n| - |df_n|; must be <= 0."""
        return float(np.max(_norms(self.dg) - _norms(self.df)))

    def terminal(self, which: str) -> np.ndarray:
        arr = {"f": self.df, "g": self.dg, "h": self.dh}[which]
        if arr is None:
            raise DomainError(f"this batch has no {which}")
        return np.sum(arr, axis=1)


def _fair_signs(rng, shape):
    return rng.integers(0, 2, size=shape) * 2.0 - 1.0


def _enforce_subordination(dg, df):
    """Shrink dg by an ulp or two wherever rounding made |dg| exceed |df|."""
    for _ in range(8):
        over = _norms(dg) > _norms(df)
        if not np.any(over):
            return dg
        dg = dg.copy()
        ratio = _norms(df[over]) / _norms(dg[over])
        dg[over] *= (ratio * (1.0 - 4.0 * np.finfo(float).eps))[:, None]
    over = _norms(dg) > _norms(df)
    dg = dg.copy()
    dg[over] = 0.0
    return dg


def _draw(rng, dist, shape):
    if dist == "rademacher":
        return _fair_signs(rng, shape)
    if dist == "gaussian":
        # sign-flip of |N(0,1)| is N(0,1); kept explicit for the symmetry argument
        return _fair_signs(rng, shape) * np.abs(rng.standard_normal(shape))
    raise DomainError(f"value_dist must be one of {VALUE_DISTS}, got {dist!r}")


def _sign(x):
    return np.where(x >= 0, 1.0, -1.0)


def _greedy_v(exp, f, g, scale):
    """Predictable v in {-1, 1} keeping E[U(f_n, g_n) | past] as large as possible."""
    ups = []
    for v in (1.0, -1.0):
        ups.append(0.5 * (eval_U(exp, f + scale, g + v * scale) + eval_U(exp, f - scale, g - v * scale)))
    return np.where(ups[0] >= ups[1], 1.0, -1.0)


def gen_transform_pair(steps: int, rng_seed: int, value_dist: str = "rademacher",
                       v_rule: str = "alternating", n_paths: int = 1,
                       p: float = 3.0) -> IncrementPath:
    """Real martingale f and its transform g with dg_n = v_n df_n.

    ``v_n`` depends only on f_0..f_{n-1} and g_0..g_{n-1}:
      one / minus_one   constant
      alternating       (-1)**n sign(f_{n-1})
      adversarial       greedy choice against Burkholder's U at exponent p
                        (used for reporting how close the ratio gets to p*-1)
    """
    if steps < 1:
        raise DomainError("steps must be at least 1")
    if v_rule not in V_RULES:
        raise DomainError(f"v_rule must be one of {V_RULES}, got {v_rule!r}")
    rng = child_rng(rng_seed, 0)
    df = _draw(rng, value_dist, (n_paths, steps + 1, 1))
    dg = np.empty_like(df)
    f = np.zeros((n_paths, 1))
    g = np.zeros((n_paths, 1))
    exp = as_exponent(p)
    for n in range(steps + 1):
        if v_rule == "one":
            v = np.ones((n_paths, 1))
        elif v_rule == "minus_one":
            v = -np.ones((n_paths, 1))
        elif v_rule == "alternating":
            v = (-1.0) ** n * _sign(f)
        else:
            v = _greedy_v(exp, f, g, 1.0)[:, None]
        dg[:, n] = v * df[:, n]
        f = f + df[:, n]
        g = g + dg[:, n]
    return IncrementPath(df, dg, None, "rng_stream")


def _rotate(rule, f_prev, d, n):
    """Apply a past-measurable orthogonal map to each row of d."""
    dim = d.shape[1]
    if rule == "identity" or dim == 1 and rule == "rotation":
        return d if rule == "identity" else d * _sign(f_prev[:, :1])
    if rule == "permutation":
        shift = (np.floor(np.abs(f_prev[:, 0]) * 7.0).astype(int) + n) % dim
        idx = (np.arange(dim)[None, :] + shift[:, None]) % dim
        out = np.take_along_axis(d, idx, axis=1)
        return out * _sign(f_prev)
    if rule == "rotation":
        theta = np.linalg.norm(f_prev, axis=1) + 0.37 * n
        c, s = np.cos(theta), np.sin(theta)
        out = d.copy()
        out[:, 0] = c * d[:, 0] - s * d[:, 1]
        out[:, 1] = s * d[:, 0] + c * d[:, 1]
        return out
    raise DomainError(f"rotation rule must be one of {ROTATION_RULES}, got {rule!r}")


def _rho(rule, f_prev, shape):
    if rule == "one":
        return np.ones(shape)
    if rule == "zero":
        return np.zeros(shape)
    if rule == "varying":
        return 0.75 + 0.25 * np.cos(np.linalg.norm(f_prev, axis=1))
    raise DomainError(f"rho rule must be one of {RHO_RULES}, got {rule!r}")


def gen_subordinate_pair(dim: int, steps: int, rng_seed: int, n_paths: int = 1,
                         rho_rule: str = "varying", rotation_rule: str = "rotation",
                         with_h: bool = True, h_corr: float = 0.5,
                         h_noise: float = 0.5) -> IncrementPath:
    """f in R^dim with symmetric increments, dg_n = rho_n R_n df_n.

    Both rho_n in [0, 1] and the orthogonal map R_n are functions of
    f_{n-1}.  When ``with_h`` is set a third martingale
    dh_n = h_corr df_n + h_noise e_n is added, e_n an independent symmetric
    vector.  Increment sizes scale with a past-measurable factor so the
    batch is not a plain random walk.
    """
    if dim < 1:
        raise DomainError("dim must be at least 1")
    if steps < 1:
        raise DomainError("steps must be at least 1")
    rng = child_rng(rng_seed, 1)
    signs = _fair_signs(rng, (n_paths, steps + 1, 1))
    raw = rng.standard_normal((n_paths, steps + 1, dim))
    noise = _fair_signs(rng, (n_paths, steps + 1, 1)) * rng.standard_normal((n_paths, steps + 1, dim))
    df = np.empty((n_paths, steps + 1, dim))
    dg = np.empty_like(df)
    f = np.zeros((n_paths, dim))
    for n in range(steps + 1):
        size = 1.0 + 0.5 * np.tanh(np.linalg.norm(f, axis=1) - 2.0)
        df[:, n] = signs[:, n] * raw[:, n] * size[:, None]
        rho = _rho(rho_rule, f, n_paths)
        dg[:, n] = _enforce_subordination(rho[:, None] * _rotate(rotation_rule, f, df[:, n], n), df[:, n])
        f = f + df[:, n]
    dh = h_corr * df + h_noise * noise if with_h else None
    return IncrementPath(df, dg, dh, "rng_stream")


def _pnorm(values, p):
    """Empirical L^p norm of |values| with compensated summation."""
    v = np.abs(np.asarray(values, dtype=float)).ravel()
    if v.size == 0:
        return 0.0
    return (math.fsum(v ** p) / v.size) ** (1.0 / p)


def _mean(values):
    v = np.asarray(values, dtype=float).ravel()
    return math.fsum(v) / v.size if v.size else 0.0


@dataclass
class BoundCheck:
    name: str
    p: float
    value: float
    bound: float
    epsilon: float
    n_paths: int
    excluded: int = 0
    details: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.bound - self.value

    @property
    def holds(self) -> bool:
        return self.value <= self.bound * (1.0 + self.epsilon)

    def to_dict(self) -> dict:
        return _jsonable({"name": self.name, "p": self.p, "value": self.value, "bound": self.bound,
                          "slack": self.slack, "epsilon": self.epsilon, "holds": self.holds,
                          "n_paths": self.n_paths, "excluded": self.excluded,
                          "details": self.details})


def _nonzero_f(paths: IncrementPath):
    keep = np.any(_norms(paths.df) > 0, axis=1)
    return keep, int(np.count_nonzero(~keep))


def check_lp_bound(paths: IncrementPath, exp, epsilon: float = EPS_STAT) -> BoundCheck:
    """||g_N||_p / ||f_N||_p against p* - 1 at the terminal time."""
    exp = as_exponent(exp)
    keep, excluded = _nonzero_f(paths)
    nf = _norms(paths.terminal("f")[keep])
    ng = _norms(paths.terminal("g")[keep])
    fp, gp = _pnorm(nf, exp.p), _pnorm(ng, exp.p)
    ratio = gp / fp if fp > 0 else 0.0
    return BoundCheck("lp_bound", exp.p, ratio, exp.sharp_constant, epsilon,
                      int(np.count_nonzero(keep)), excluded,
                      {"f_norm": fp, "g_norm": gp})


def check_dual_bound(paths: IncrementPath, exp, epsilon: float = EPS_STAT) -> tuple[BoundCheck, BoundCheck]:
    """E|sum <dg_k, dh_k>| against (p*-1)||f||_p ||h||_p' and the Young form."""
    exp = as_exponent(exp)
    keep, excluded = _nonzero_f(paths)
    dg, dh = paths.dg[keep], paths.dh[keep]
    bracket = np.abs(np.sum(np.sum(dg * dh, axis=2), axis=1))
    lhs = _mean(bracket)
    fp = _pnorm(_norms(paths.terminal("f")[keep]), exp.p)
    hq = _pnorm(_norms(paths.terminal("h")[keep]), exp.p_conj)
    n = int(np.count_nonzero(keep))
    prod = BoundCheck("dual_bound", exp.p, lhs, exp.sharp_constant * fp * hq, epsilon, n, excluded,
                      {"f_norm": fp, "h_norm": hq})
    young = BoundCheck("dual_bound_young", exp.p, lhs,
                       exp.K * fp ** exp.p / exp.p + hq ** exp.p_conj / exp.p_conj,
                       epsilon, n, excluded, {"f_norm": fp, "h_norm": hq})
    return prod, young


def check_joint_variation(paths: IncrementPath, exp, epsilon: float = EPS_STAT) -> BoundCheck:
    """E sum |df_k||dh_k| against K**(1/p) ||f||_p ||h||_p'."""
    exp = as_exponent(exp)
    keep, excluded = _nonzero_f(paths)
    var = np.sum(_norms(paths.df[keep]) * _norms(paths.dh[keep]), axis=1)
    lhs = _mean(var)
    fp = _pnorm(_norms(paths.terminal("f")[keep]), exp.p)
    hq = _pnorm(_norms(paths.terminal("h")[keep]), exp.p_conj)
    return BoundCheck("joint_variation", exp.p, lhs, exp.K ** (1.0 / exp.p) * fp * hq, epsilon,
                      int(np.count_nonzero(keep)), excluded, {"f_norm": fp, "h_norm": hq})


# --- finite trees -----------------------------------------------------------

@dataclass
class TreeMartingale:
    """A finite rooted tree of (f, g) values.

    ``parent[i]`` is the parent of node i (-1 for the root at index 0) and
    ``prob[i]`` the conditional probability of reaching i from its parent.
    Parents must precede their children.
    """

    parent: np.ndarray
    prob: np.ndarray
    f: np.ndarray
    g: np.ndarray
    subordinate: bool = True
    mean_tol: float = 1e-14

    def __post_init__(self):
        self.parent = np.asarray(self.parent, dtype=int)
        self.prob = np.asarray(self.prob, dtype=float)
        self.f = np.atleast_2d(np.asarray(self.f, dtype=float))
        self.g = np.atleast_2d(np.asarray(self.g, dtype=float))
        n = self.parent.size
        if self.parent[0] != -1 or np.any(self.parent[1:] < 0) or np.any(self.parent[1:] >= np.arange(1, n)):
            raise DomainError("node 0 must be the root and parents must precede children")
        self.depth = np.zeros(n, dtype=int)
        self.weight = np.ones(n)
        for i in range(1, n):
            self.depth[i] = self.depth[self.parent[i]] + 1
            self.weight[i] = self.weight[self.parent[i]] * self.prob[i]
        self.children = [[] for _ in range(n)]
        for i in range(1, n):
            self.children[self.parent[i]].append(i)
        self._validate()

    def _validate(self):
        for i, kids in enumerate(self.children):
            if not kids:
                continue
            pr = self.prob[kids]
            if np.any(pr < 0) or abs(math.fsum(pr) - 1.0) > self.mean_tol:
                raise DomainError(f"children of node {i} do not carry a probability vector")
            for arr, name in ((self.f, "f"), (self.g, "g")):
                mean = np.array([math.fsum(c) for c in (pr[:, None] * arr[kids]).T])
                scale = 1.0 + np.max(np.abs(arr[kids]))
                if np.max(np.abs(mean - arr[i])) > self.mean_tol * scale:
                    raise DomainError(f"{name} is not a martingale at node {i}")
            if self.subordinate:
                df = _norms(self.f[kids] - self.f[i])
                dg = _norms(self.g[kids] - self.g[i])
                if np.any(dg > df):
                    raise DomainError(f"|dg| > |df| below node {i}")

    @property
    def horizon(self) -> int:
        return int(self.depth.max())

    def at_time(self, n: int) -> np.ndarray:
        """Indices of the nodes that carry f_n: depth n, or shallower leaves."""
        leaf = np.array([not c for c in self.children])
        return np.nonzero((self.depth == n) | (leaf & (self.depth < n)))[0]

    def lp_norm(self, which: str, p: float, sup_over_times: bool = True) -> float:
        arr = self.f if which == "f" else self.g
        norms = []
        for n in range(self.horizon + 1):
            idx = self.at_time(n)
            w = self.weight[idx]
            norms.append(math.fsum(w * _norms(arr[idx]) ** p) ** (1.0 / p))
        return max(norms) if sup_over_times else norms[-1]


def dyadic_tree(depth: int, dim: int, rng_seed: int, rho_rule: str = "varying",
                rotation_rule: str = "rotation") -> TreeMartingale:
    """Paley-Walsh martingale: every node splits into value +- d with probability 1/2."""
    if depth < 1 or depth > 16:
        raise DomainError("depth must lie in 1..16")
    rng = child_rng(rng_seed, 2)
    f = [rng.standard_normal(dim)]
    g = [f[0] * 0.5]
    parent, prob = [-1], [1.0]
    frontier = [0]
    for n in range(1, depth + 1):
        nxt = []
        for node in frontier:
            fp = f[node][None, :]
            d = rng.standard_normal((1, dim)) * (1.0 + 0.5 * np.tanh(np.linalg.norm(fp) - 2.0))
            rho = _rho(rho_rule, fp, 1)
            e = _enforce_subordination(rho[:, None] * _rotate(rotation_rule, fp, d, n), d)
            for sgn in (1.0, -1.0):
                parent.append(node)
                prob.append(0.5)
                f.append(f[node] + sgn * d[0])
                g.append(g[node] + sgn * e[0])
                nxt.append(len(f) - 1)
        frontier = nxt
    # the increments actually realised after rounding can exceed |d| by an ulp
    tree = TreeMartingale(np.array(parent), np.array(prob), np.array(f), np.array(g),
                          subordinate=False)
    for i, kids in enumerate(tree.children):
        if kids:
            df = tree.f[kids] - tree.f[i]
            dg = _enforce_subordination(tree.g[kids] - tree.g[i], df)
            tree.g[kids] = tree.g[i] + dg
    tree.subordinate = True
    tree._validate()
    return tree


def tree_lp_ratio(tree: TreeMartingale, exp) -> BoundCheck:
    """Exact sup_n ||g_n||_p / sup_n ||f_n||_p on a tree; no statistical slack."""
    exp = as_exponent(exp)
    fp, gp = tree.lp_norm("f", exp.p), tree.lp_norm("g", exp.p)
    return BoundCheck("tree_lp_bound", exp.p, gp / fp, exp.sharp_constant, 0.0, 1, 0,
                      {"f_norm": fp, "g_norm": gp, "horizon": tree.horizon})


@dataclass
class StepSlack:
    slack: float
    closed_form: float
    scale: float  # |E B(f, h)| + |B(f_prev, h_prev)| + E |df||dh|


def check_p2_step_inequality(f_prev, h_prev, probs, df_atoms, dh_atoms) -> StepSlack:
    """Exact one-step check of E B(f, h) >= B(f_prev, h_prev) + E |df||dh| at p = 2.

    B(x, z) = (|x|**2 + |z|**2)/2.  Expanding the square gives the closed form
    E(|df| - |dh|)**2 / 2 + <f_prev, E df> + <h_prev, E dh>; the drift terms
    vanish for martingale steps.
    """
    pr = np.asarray(probs, dtype=float)
    if np.any(pr < 0) or abs(math.fsum(pr) - 1.0) > 1e-14:
        raise DomainError("probs must be a probability vector")
    f0 = np.atleast_1d(np.asarray(f_prev, dtype=float))
    h0 = np.atleast_1d(np.asarray(h_prev, dtype=float))
    df = np.asarray(df_atoms, dtype=float).reshape(pr.size, -1)
    dh = np.asarray(dh_atoms, dtype=float).reshape(pr.size, -1)

    def B(x, z):
        return 0.5 * (np.sum(x * x, axis=-1) + np.sum(z * z, axis=-1))

    lhs = math.fsum(pr * B(f0 + df, h0 + dh))
    rhs = float(B(f0, h0)) + math.fsum(pr * _norms(df) * _norms(dh))
    drift = float(f0 @ np.array([math.fsum(c) for c in (pr[:, None] * df).T])
                  + h0 @ np.array([math.fsum(c) for c in (pr[:, None] * dh).T]))
    closed = 0.5 * math.fsum(pr * (_norms(df) - _norms(dh)) ** 2) + drift
    return StepSlack(slack=lhs - rhs, closed_form=closed, scale=abs(lhs) + abs(rhs))


def sample_one_step(rng, n: int, dim: int, atoms: int):
    """Random states and mean-zero finite-support steps with |k_i| <= |h_i|.

    The last atom is chosen to cancel the mean; if that makes |k_m| > |h_m|,
    every k_i is shrunk by the same factor, which keeps both the mean and
    the constraint.  Returns (x, y, probs, h, k) with h, k of shape
    (n, atoms, dim).
    """
    if atoms < 2:
        raise DomainError("a nontrivial step needs at least 2 atoms")
    x = rng.standard_normal((n, dim)) * 10.0 ** rng.uniform(-2, 2, (n, 1))
    y = rng.standard_normal((n, dim)) * 10.0 ** rng.uniform(-2, 2, (n, 1))
    probs = rng.dirichlet(np.ones(atoms), size=n)
    probs = np.maximum(probs, 1e-3)
    probs /= probs.sum(axis=1, keepdims=True)
    scale = (np.linalg.norm(x, axis=1) + np.linalg.norm(y, axis=1))[:, None, None]
    h = rng.standard_normal((n, atoms, dim)) * 10.0 ** rng.uniform(-2, 1, (n, atoms, 1)) * scale
    u = rng.standard_normal((n, atoms, dim))
    u /= np.linalg.norm(u, axis=2, keepdims=True)
    k = u * (np.linalg.norm(h, axis=2, keepdims=True) * rng.uniform(0, 1, (n, atoms, 1)))
    pm = probs[:, -1][:, None]
    h[:, -1] = -np.einsum("na,nad->nd", probs[:, :-1], h[:, :-1]) / pm
    k[:, -1] = -np.einsum("na,nad->nd", probs[:, :-1], k[:, :-1]) / pm
    nh, nk = np.linalg.norm(h[:, -1], axis=1), np.linalg.norm(k[:, -1], axis=1)
    shrink = np.where(nk > nh, nh / np.where(nk > 0, nk, 1.0), 1.0)
    k *= shrink[:, None, None]
    k = _enforce_subordination(k.reshape(-1, dim), h.reshape(-1, dim)).reshape(h.shape)
    return x, y, probs, h, k


def check_U_supermartingale(exp, samples: int = 100_000, dim: int = 2, rng_seed: int = 11,
                            policy: TolerancePolicy = TolerancePolicy(), tol: float = 1e-10,
                            trees: list[TreeMartingale] | None = None) -> VerificationReport:
    """E U(x+H, y+K) <= U(x, y) for sampled one-step extensions (2 to 4 atoms).

    Expectations are exact finite sums.  The slack is normalized by the sum of
    |U| over the state and all atoms.  Optional ``trees`` are checked at
    every internal node as well.
    """
    exp = as_exponent(exp)
    rng = child_rng(rng_seed, 3)
    worst, where, total = math.inf, {}, 0
    per = [samples // 3 + (1 if i < samples % 3 else 0) for i in range(3)]
    for atoms, n in zip((2, 3, 4), per):
        if n == 0:
            continue
        x, y, probs, h, k = sample_one_step(rng, n, dim, atoms)
        u0 = eval_U(exp, x, y)
        u1 = eval_U(exp, x[:, None, :] + h, y[:, None, :] + k)
        eu = np.sum(probs * u1, axis=1)
        scale = np.abs(u0) + np.sum(probs * np.abs(u1), axis=1)
        rel = (u0 - eu) / np.where(scale > 0, scale, 1.0)
        i = int(np.argmin(rel))
        total += n
        if rel[i] < worst:
            worst = float(rel[i])
            where = {"atoms": atoms, "x_norm": float(np.linalg.norm(x[i])),
                     "y_norm": float(np.linalg.norm(y[i]))}
    tree_worst = None
    for tree in trees or []:
        for node, kids in enumerate(tree.children):
            if not kids:
                continue
            u0 = eval_U(exp, tree.f[node], tree.g[node])
            u1 = eval_U(exp, tree.f[kids], tree.g[kids])
            pr = tree.prob[kids]
            scale = abs(u0) + math.fsum(pr * np.abs(u1))
            rel = (u0 - math.fsum(pr * u1)) / (scale if scale > 0 else 1.0)
            tree_worst = rel if tree_worst is None else min(tree_worst, rel)
            total += 1
    details = {"dim": int(dim), "atoms": [2, 3, 4]}
    if tree_worst is not None:
        details["tree_worst"] = float(tree_worst)
        worst = min(worst, tree_worst)
    return VerificationReport(
        condition="U_supermartingale", p=exp.p, grid=None, worst_violation=worst,
        location=where, samples=total, verdict=verdict_for(worst, tol), seed=rng_seed,
        tolerance=tol, details=details,
    )


# --- batch runs -------------------------------------------------------------

BATCH_COLUMNS = ("seed", "p", "dim", "steps", "check", "ratio", "bound", "slack")


@dataclass
class MartingaleSummary:
    root_seed: int
    checks: list[BoundCheck]
    rows: list[dict]
    u_reports: list[VerificationReport]
    step_max_error: float
    tree_checks: list[BoundCheck]
    adversarial: list[BoundCheck]

    @property
    def passed(self) -> bool:
        return (all(c.holds for c in self.checks) and all(r.passed for r in self.u_reports)
                and all(c.holds for c in self.tree_checks) and self.step_max_error <= 1e-12)

    def to_dict(self) -> dict:
        return _jsonable({
            "root_seed": self.root_seed, "generator": GENERATOR,
            "generator_version": GENERATOR_VERSION, "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "tree_checks": [c.to_dict() for c in self.tree_checks],
            "adversarial_transform_ratios": [c.to_dict() for c in self.adversarial],
            "U_supermartingale": [r.to_dict() for r in self.u_reports],
            "p2_step_max_error": self.step_max_error,
        })


def p2_step_battery(rng_seed: int, n: int = 1000, dim: int = 2) -> float:
    """Largest relative |slack - closed form| over random mean-zero one-step extensions."""
    rng = child_rng(rng_seed, 4)
    worst = 0.0
    for atoms in (2, 3, 4):
        x, y, probs, h, k = sample_one_step(rng, n, dim, atoms)
        for i in range(n):
            res = check_p2_step_inequality(x[i], y[i], probs[i], h[i], k[i])
            worst = max(worst, abs(res.slack - res.closed_form) / res.scale)
    return worst


def run_martingale_suite(root_seed: int = 0, n_paths: int = 10_000, steps: int = 50,
                         dims=(1, 2, 3), p_list=(1.5, 2.0, 3.0), epsilon: float = EPS_STAT,
                         u_samples: int = 100_000, u_seed: int = 11, tree_depth: int = 10,
                         adversarial_paths: int = 2000) -> MartingaleSummary:
    checks, rows, trees, tree_checks, adversarial = [], [], [], [], []
    for dim in dims:
        paths = gen_subordinate_pair(dim, steps, _seed_for(root_seed, dim), n_paths)
        tree = dyadic_tree(tree_depth, dim, _seed_for(root_seed, dim))
        trees.append(tree)
        for p in p_list:
            exp = as_exponent(p)
            lp = check_lp_bound(paths, exp, epsilon)
            dual, young = check_dual_bound(paths, exp, epsilon)
            jv = check_joint_variation(paths, exp, epsilon)
            for c in (lp, dual, young, jv):
                c.details["dim"] = dim
                checks.append(c)
                rows.append({"seed": root_seed, "p": exp.p, "dim": dim, "steps": steps,
                             "check": c.name, "ratio": c.value, "bound": c.bound, "slack": c.slack})
            tc = tree_lp_ratio(tree, exp)
            tc.details["dim"] = dim
            tree_checks.append(tc)
    for p in p_list:
        adv = gen_transform_pair(steps, root_seed, "rademacher", "adversarial", adversarial_paths, p)
        c = check_lp_bound(adv, p, epsilon)
        c.name = "adversarial_transform"
        adversarial.append(c)
    u_reports = [check_U_supermartingale(p, u_samples, 2, u_seed, trees=trees) for p in p_list]
    step_err = p2_step_battery(root_seed)
    return MartingaleSummary(root_seed, checks, rows, u_reports, step_err, tree_checks, adversarial)


def _seed_for(root_seed: int, dim: int) -> int:
    """A derived integer seed, so each dim has its own reproducible stream."""
    return int(np.random.SeedSequence(int(root_seed), spawn_key=(100 + dim,)).generate_state(1)[0])


def rows_to_csv(rows: list[dict], columns=BATCH_COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()
