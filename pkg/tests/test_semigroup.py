import csv
import io
import json
import math

import numpy as np
import pytest
from scipy import integrate

from bellman_lp import DomainError
from bellman_lp.semigroup import (DEFAULT_BATTERY, GridFunction, PaleyCase, QuadratureSpec,
                                  ResolutionError, check_lp_paley, gaussian_window_oracle,
                                  heat_extension, heat_gradient, load_battery, make_function,
                                  pair_integrand, profile_csv, run_case)

L, N = 12.0, 2048


def gauss(var, center=0.0):
    return lambda x: np.exp(-0.5 * (x - center) ** 2 / var) / math.sqrt(2 * math.pi * var)


def test_grid_function_validation():
    with pytest.raises(DomainError):
        GridFunction(1.0, np.zeros(8))
    with pytest.raises(DomainError):
        GridFunction(1.0, np.full(32, np.nan))
    with pytest.raises(DomainError):
        GridFunction(-1.0, np.zeros(32))
    f = GridFunction.sample(gauss(1.0), L, N)
    assert f.norm(1) == pytest.approx(1.0, rel=1e-10)
    assert f.norm(2) ** 2 == pytest.approx(1 / (2 * math.sqrt(math.pi)), rel=1e-10)


def test_constant_is_preserved_in_interior():
    f = GridFunction(L, np.full(N, 3.0))
    u = heat_extension(f, 0.5)
    interior = np.abs(f.x) < L - 9 * math.sqrt(0.5) - 0.1
    assert np.max(np.abs(u.values[interior] - 3.0)) < 1e-12


@pytest.mark.parametrize("t", [0.01, 0.3, 2.0])
def test_gaussian_convolution_oracle(t):
    f = GridFunction.sample(gauss(0.5), L, N)
    u = heat_extension(f, t)
    assert np.max(np.abs(u.values - gauss(0.5 + t)(f.x))) <= 1e-6


def test_gradient_oracle():
    f = GridFunction.sample(gauss(1.0), L, N)
    x, ux = heat_gradient(f, 0.7)
    exact = -x / 1.7 * gauss(1.7)(x)
    assert np.max(np.abs(ux - exact)) <= 1e-6


def test_small_t_approaches_identity():
    f = GridFunction.sample(make_function({"type": "bump", "radius": 3.0}), L, N)
    t = (2.2 * f.dx) ** 2
    assert np.max(np.abs(heat_extension(f, t).values - f.values)) < 1e-3


def test_semigroup_property():
    f = GridFunction.sample(make_function({"type": "step-smoothed", "width": 0.4}), L, N)
    a = heat_extension(heat_extension(f, 0.2), 0.5)
    b = heat_extension(f, 0.7)
    assert np.max(np.abs(a.values - b.values)) <= 1e-6


@pytest.mark.parametrize("p", [1.25, 2.0, 4.0])
def test_contraction(p):
    f = GridFunction.sample(make_function({"type": "bump", "radius": 2.0}), L, N)
    for t in (0.05, 1.0, 5.0):
        assert heat_extension(f, t).norm(p) <= f.norm(p) * (1 + 1e-6)


def test_resolution_error():
    f = GridFunction.sample(gauss(1.0), L, 64)
    with pytest.raises(ResolutionError):
        heat_extension(f, 0.01)
    with pytest.raises(ResolutionError):
        check_lp_paley(f, f, 2)
    with pytest.raises(DomainError):
        heat_extension(f, 0.0)


def test_zero_g_gives_zero():
    f = GridFunction.sample(gauss(1.0), L, N)
    g = GridFunction(L, np.zeros(N))
    r = check_lp_paley(f, g, 3)
    assert r.lhs == 0.0 and r.verdict == "pass"


def test_gaussian_window_oracle_by_quadrature():
    # the oracle against a direct double integral of the closed-form derivative
    def inner(t):
        v = 1.0 + t
        return integrate.quad(lambda x: (x / v * gauss(v)(x)) ** 2, -np.inf, np.inf)[0]
    direct = integrate.quad(inner, 0.1, 10.0)[0]
    assert gaussian_window_oracle(0.1, 10.0) == pytest.approx(direct, rel=1e-9)


def test_p2_gaussian_matches_oracle():
    f = GridFunction.sample(gauss(1.0), L, N)
    spec = QuadratureSpec()
    r = check_lp_paley(f, f, 2, quadrature_spec=spec)
    oracle = gaussian_window_oracle(spec.t_min, spec.t_max)
    assert r.lhs == pytest.approx(oracle, rel=1e-4)
    assert r.verdict == "pass"
    # ||f||_2^2 = 1/(2 sqrt(pi)) is the K = 1 bound; the full integral is exactly that
    assert r.bound == pytest.approx(1 / (2 * math.sqrt(math.pi)), rel=1e-10)
    assert r.lhs <= r.bound


def test_pair_integrand_needs_shared_grid():
    f = GridFunction.sample(gauss(1.0), L, N)
    g = GridFunction.sample(gauss(1.0), L, N // 2)
    with pytest.raises(DomainError):
        pair_integrand(f, g, 1.0)


def test_inconclusive_when_tail_dominates():
    f = GridFunction.sample(gauss(1.0), L, N)
    r = check_lp_paley(f, f, 2, t_max=1.0)
    assert r.verdict == "inconclusive"


def test_quadrature_spec():
    ts = QuadratureSpec().times()
    assert ts.size == 241 and ts.size % 2 == 1
    assert QuadratureSpec(1e-2, 1e2, 5).times().size % 2 == 1
    with pytest.raises(DomainError):
        QuadratureSpec(1.0, 0.5)


@pytest.mark.parametrize("case", DEFAULT_BATTERY, ids=lambda c: c.name)
def test_battery_passes(case):
    r = run_case(case)
    assert r.verdict == "pass", r.to_dict()
    assert r.margin > 0
    assert r.tail_bound <= 0.1 * r.bound


def test_function_specs():
    with pytest.raises(DomainError, match="unknown fields"):
        make_function({"type": "gaussian", "width": 2})
    with pytest.raises(DomainError):
        make_function({"type": "sinc"})
    with pytest.raises(DomainError):
        make_function({"type": "gaussian", "sigma": 0})
    b = make_function({"type": "bump", "radius": 1.0})
    assert b(np.array([0.0]))[0] == pytest.approx(math.exp(-1))
    assert b(np.array([1.0, 2.0])).tolist() == [0.0, 0.0]


def test_load_battery():
    text = json.dumps({"cases": [{"name": "a", "p": 3, "f": {"type": "gaussian"},
                                  "g": {"type": "bump", "radius": 2}}]})
    cases = load_battery(text)
    assert cases == [PaleyCase("a", 3.0, {"type": "gaussian"}, {"type": "bump", "radius": 2})]
    with pytest.raises(DomainError):
        load_battery(json.dumps({"cases": [], "extra": 1}))
    with pytest.raises(DomainError):
        load_battery(json.dumps({"cases": [{"p": 2, "f": {"type": "gaussian"},
                                            "g": {"type": "gaussian"}, "colour": "red"}]}))
    with pytest.raises(DomainError):
        load_battery(json.dumps({"cases": []}))


def test_profile_csv():
    r = run_case(DEFAULT_BATTERY[0], n=512, spec=QuadratureSpec(1e-1, 1e3, 4))
    rows = list(csv.reader(io.StringIO(profile_csv([r]))))
    assert rows[0] == ["case", "p", "t", "integral"]
    assert len(rows) == 1 + r.times.size
    assert rows[1][0] == "gaussian_p2"
