"""Special functions B(x, z) on the open quadrant and their relatives.

All partial derivatives come from closed forms.  Writing ``q = s phi'(s)``
(which both regimes express without s), the jets are

  p < 2:  Bx = ((2-p) + 1/phi) z/(p-1)      Bz = x phi
          Bxx = (z/x) q / phi**2            Bzz = (x/z) q
          Bxz = (2-p) phi / (1 + (p-1) phi)
  p > 2:  Bx = (p-1) z / w                  Bz = x phi        (w = phi-p+2)
          Bxx = (p-1)**2 (z/x) q / w**2     Bzz = (x/z) q
          Bxz = (p-2) / (w + 1)

and p = 2 is the quadratic (x**2 + z**2)/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exponent import DomainError, Exponent, Regime, SolverFailure, as_exponent
from .phi import solve_phi_array


@dataclass(frozen=True)
class Point2:
    x: float
    z: float

    def __post_init__(self):
        if not (self.x > 0 and self.z > 0):
            raise DomainError(f"B lives on (0, inf)^2, got ({self.x}, {self.z})")


@dataclass(frozen=True)
class BellmanJet:
    value: float
    bx: float
    bz: float
    bxx: float
    bxz: float
    bzz: float
    s: float
    phi: float


@dataclass
class JetArrays:
    """Array-valued jet; ``ok`` flags points whose phi solve certified."""

    value: np.ndarray
    bx: np.ndarray
    bz: np.ndarray
    bxx: np.ndarray
    bxz: np.ndarray
    bzz: np.ndarray
    s: np.ndarray
    phi: np.ndarray
    ok: np.ndarray

    def at(self, index) -> BellmanJet:
        return BellmanJet(
            *(float(getattr(self, name)[index]) for name in
              ("value", "bx", "bz", "bxx", "bxz", "bzz", "s", "phi"))
        )


def ratio_s(exp: Exponent, x, z):
    """s = x**(1-p) z.

    The direct power keeps s within a few ulps; log space is the fallback
    where the power over- or underflows.
    """
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        direct = x ** (1.0 - exp.p) * z
        bad = ~np.isfinite(direct) | (direct < np.finfo(float).tiny)
        if np.any(bad):
            logged = np.exp((1.0 - exp.p) * np.log(x) + np.log(z))
            direct = np.where(bad, logged, direct)
    return direct


def _check_quadrant(x, z):
    if np.any(~(x > 0)) or np.any(~(z > 0)) or np.any(~np.isfinite(x)) or np.any(~np.isfinite(z)):
        raise DomainError("B is defined only on the open quadrant (0, inf)^2")


def jet_arrays(exp: Exponent | float, x, z) -> JetArrays:
    exp = as_exponent(exp)
    p = exp.p
    x, z = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(z, dtype=float))
    _check_quadrant(x, z)

    if exp.regime is Regime.TWO:
        one = np.ones_like(x)
        return JetArrays(
            value=0.5 * (x * x + z * z), bx=x.copy(), bz=z.copy(),
            bxx=one, bxz=np.zeros_like(x), bzz=one.copy(),
            s=z / x, phi=z / x, ok=np.ones(x.shape, dtype=bool),
        )

    s = ratio_s(exp, x, z)
    phi, w, _, ok = solve_phi_array(exp, s)
    zx = z / x
    if exp.regime is Regime.SUB2:
        # r is bounded, so nothing below forms phi**2 (phi can reach 1e200 near p = 1)
        r = (1.0 + phi) / (1.0 + (p - 1.0) * phi)
        q = phi * r
        value = x * z * ((p - 1.0) / p * phi + (2.0 - p) / (p * (p - 1.0))
                         + 1.0 / (p * (p - 1.0) * phi))
        bx = ((2.0 - p) + 1.0 / phi) * z / (p - 1.0)
        bxx = zx * r / phi
        bxz = (2.0 - p) * phi / (1.0 + (p - 1.0) * phi)
    else:
        r = (1.0 + phi) / (w + 1.0)
        q = r * w / (p - 1.0)
        value = (1.0 - 1.0 / p) * x * z * (phi + 1.0 / w)
        bx = (p - 1.0) * z / w
        bxx = (p - 1.0) * zx * r / w
        bxz = (p - 2.0) / (w + 1.0)
    return JetArrays(
        value=value, bx=bx, bz=x * phi, bxx=bxx, bxz=bxz, bzz=q / zx,
        s=s, phi=phi, ok=ok,
    )


def eval_B_array(exp: Exponent | float, x, z):
    return jet_arrays(exp, x, z).value


def eval_jet(exp: Exponent | float, pt: Point2) -> BellmanJet:
    jet = jet_arrays(exp, np.array([pt.x]), np.array([pt.z]))
    if not jet.ok[0]:
        raise SolverFailure(f"phi solve failed at {pt}")
    return jet.at(0)


def eval_B(exp: Exponent | float, pt: Point2) -> float:
    return eval_jet(exp, pt).value


def majorant(exp: Exponent | float, x, z):
    """K x**p / p + z**p' / p'."""
    exp = as_exponent(exp)
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    return exp.K * x ** exp.p / exp.p + z ** exp.p_conj / exp.p_conj


def _norms(v):
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        return np.abs(v)
    return np.linalg.norm(v, axis=-1)


def eval_B_highdim(exp: Exponent | float, x, z):
    """B(|x|, |z|) for vectors (last axis is the coordinate axis)."""
    nx, nz = _norms(x), _norms(z)
    if np.any(nx == 0) or np.any(nz == 0):
        raise DomainError("the high-dimensional extension needs |x| |z| > 0")
    out = eval_B_array(exp, nx, nz)
    return float(out) if np.ndim(out) == 0 else out


def grad_highdim(exp: Exponent | float, x, z):
    """Gradient pair (B_x(|x|,|z|) x/|x|, B_z(|x|,|z|) z/|z|), batched over rows."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    nx = np.linalg.norm(x, axis=-1)
    nz = np.linalg.norm(z, axis=-1)
    jet = jet_arrays(exp, nx, nz)
    gx = (jet.bx / nx)[..., None] * x
    gz = (jet.bz / nz)[..., None] * z
    return gx, gz, jet


def eval_U(exp: Exponent | float, x, y):
    """Burkholder's function p (1-1/p*)**(p-1) (|y| - (p*-1)|x|) (|x|+|y|)**(p-1)."""
    exp = as_exponent(exp)
    p, ps = exp.p, exp.p_star
    nx, ny = _norms(x), _norms(y)
    out = p * (1.0 - 1.0 / ps) ** (p - 1.0) * (ny - (ps - 1.0) * nx) * (nx + ny) ** (p - 1.0)
    return float(out) if np.ndim(out) == 0 else out


def eval_NTV(exp: Exponent | float, zeta, eta) -> float:
    """The four-variable Nazarov-Treil function for p > 2.

    ``zeta`` and ``eta`` are elements of H^2, passed as arrays and measured
    by the Euclidean norm of all their entries.  The undefined exponent q of
    the original formula is taken to be p'.
    """
    exp = as_exponent(exp)
    if exp.regime is not Regime.SUPER2:
        raise DomainError("the Nazarov-Treil function is stated for p > 2")
    p, q = exp.p, exp.p_conj
    a = float(np.linalg.norm(np.ravel(np.asarray(zeta, dtype=float))))
    b = float(np.linalg.norm(np.ravel(np.asarray(eta, dtype=float))))
    base = a ** p + b ** q
    if a ** p >= b ** q:
        return base + a * a * b ** (2.0 - q)
    return base + 2.0 / p * a ** p + (2.0 / q - 1.0) * b ** q
