"""Figures written next to the CLI reports.  Uses the Agg backend only."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .bellman import jet_arrays, majorant  # noqa: E402
from .exponent import Regime, as_exponent  # noqa: E402
from .foliation import leaf, leaf_bases  # noqa: E402

_META = {"Software": None}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)
    return path


def foliation_figure(p: float, path, n_leaves: int = 16, x_range=(0.1, 3.0)) -> Path:
    """Leaves of the foliation and the equality curve in the (x, z) quadrant."""
    exp = as_exponent(p)
    fig, ax = plt.subplots(figsize=(5.5, 5))
    for x in leaf_bases(n_leaves, x_range):
        lf = leaf(exp, x)
        d = np.linspace(*lf.param_range, 50)
        z0 = exp.s0 * x ** (exp.p - 1.0)
        ax.plot(x + d, z0 + lf.slope * d, color="0.55", lw=0.8)
    xs = np.linspace(1e-3, x_range[1], 300)
    ax.plot(xs, exp.s0 * xs ** (exp.p - 1.0), color="C3", lw=2, label="equality curve")
    ax.set_xlim(left=0)
    ax.set_ylim(bottom=0)
    ax.set_xlabel("x")
    ax.set_ylabel("z")
    ax.set_title(f"leaves of C = B + xz, p = {exp.p:g}")
    ax.legend(loc="upper left")
    return _save(fig, path)


def majorization_figure(p: float, path, n: int = 120) -> Path:
    """log10 of the relative majorization gap over a log grid; dark along the equality curve."""
    exp = as_exponent(p)
    xs = np.logspace(-2, 2, n)
    zs = np.logspace(-2, 2, n)
    X, Z = np.meshgrid(xs, zs, indexing="xy")
    B = jet_arrays(exp, X.ravel(), Z.ravel()).value.reshape(X.shape)
    M = majorant(exp, X, Z)
    gap = np.log10(np.maximum((M - B) / M, 1e-17))
    fig, ax = plt.subplots(figsize=(6, 5))
    mesh = ax.pcolormesh(X, Z, gap, shading="auto", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="log10 relative gap")
    if exp.regime is not Regime.TWO:
        ax.plot(xs, exp.s0 * xs ** (exp.p - 1.0), color="w", lw=1, ls="--")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlim(xs[0], xs[-1])
    ax.set_ylim(zs[0], zs[-1])
    ax.set_xlabel("x")
    ax.set_ylabel("z")
    ax.set_title(f"majorant minus B, p = {exp.p:g}")
    return _save(fig, path)


def semigroup_figure(results, path) -> Path:
    """t * int |u_f'||u_g'| dx against t, the integrand in log t."""
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for r in results:
        ax.plot(r.times, r.times * r.profile, label=f"{r.details.get('case', '')} (p={r.p:g})")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("t * integral over x")
    ax.legend(fontsize=7)
    return _save(fig, path)


def simulation_figure(checks, path) -> Path:
    """Each empirical quantity as a fraction of its bound."""
    names = [f"{c.name}\np={c.p:g} d={c.details.get('dim', '')}" for c in checks]
    frac = [c.value / c.bound if c.bound > 0 else math.nan for c in checks]
    fig, ax = plt.subplots(figsize=(max(6, 0.35 * len(checks)), 4.5))
    ax.bar(range(len(frac)), frac, color="C0")
    ax.axhline(1.0, color="C3", lw=1)
    ax.set_xticks(range(len(frac)))
    ax.set_xticklabels(names, rotation=90, fontsize=6)
    ax.set_ylabel("value / bound")
    fig.tight_layout()
    return _save(fig, path)
