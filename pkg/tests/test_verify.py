import json
import math

import numpy as np
import pytest

from bellman_lp import DomainError
from bellman_lp.verify import (STANDARD_P_LIST, GridSpec, TolerancePolicy, check_concavity,
                               check_hessian_bound, check_initial, check_jump_control,
                               check_majorization, check_monotonicity, equality_locus, run_suite,
                               verdict_for)

SMALL = GridSpec((1e-2, 1e2), (1e-2, 1e2), 16)


def test_gridspec_validation():
    with pytest.raises(DomainError):
        GridSpec((-1.0, 2.0), (1.0, 2.0))
    with pytest.raises(DomainError):
        GridSpec((1.0, 2.0), (1.0, 2.0), 1)
    with pytest.raises(DomainError):
        GridSpec((1.0, 2.0), (1.0, 2.0), 4, "cubic")
    X, Z = GridSpec((1.0, 4.0), (1.0, 4.0), 3, "linear").points()
    assert sorted(set(X)) == [1.0, 2.5, 4.0] and X.size == 9


def test_verdict_is_function_of_worst():
    assert verdict_for(-1e-10, 1e-9) == "pass"
    assert verdict_for(-2e-9, 1e-9) == "fail"
    assert verdict_for(0.5, 1e-9, indeterminate=1) == "fail"


def test_initial_examples():
    r = check_initial(2, GridSpec((0.5, 2), (0.5, 2), 5, "linear"))
    assert r.passed and r.worst_violation == 0.0  # x = z sits on the grid
    one = GridSpec((1.0, 1.0 + 1e-12), (4.0, 4.0 + 1e-12), 2, "linear")
    r = check_initial(3, one)
    # slack 8 - 4 relative to 8 + 4
    assert r.worst_violation == pytest.approx(4 / 12, rel=1e-9)


def test_majorization_examples_and_locus():
    r = check_majorization(3, SMALL)
    assert r.passed
    assert r.details["locus_max_relative_gap"] <= 1e-9
    xs, zs, gap, ok = equality_locus(1.5, (1.0, 1.0 + 1e-9), 2)
    assert zs[0] == pytest.approx(math.sqrt(2), rel=1e-12)
    assert gap.max() < 1e-14
    # at p = 2 the majorant is B itself
    r = check_majorization(2, SMALL)
    assert r.worst_violation == 0.0


@pytest.mark.parametrize("p,side", [(1.5, "z"), (1.25, "z"), (3.0, "x"), (8.0, "x")])
def test_monotonicity_tight_side(p, side):
    r = check_monotonicity(p, SMALL)
    assert r.passed
    assert r.details["tight_sides"] == [side] == r.details["expected_tight_sides"]


def test_monotonicity_p2_both_sides_zero():
    r = check_monotonicity(2, SMALL)
    assert r.worst_violation == 0.0
    assert r.details["tight_sides"] == ["x", "z"]


def test_concavity_examples():
    r = check_concavity(3, SMALL, hk_samples=4)
    assert r.passed
    assert r.details["discriminant_equality_gap"] <= 1e-8
    r = check_concavity(2, SMALL, hk_samples=4)
    assert r.passed and abs(r.worst_violation) <= 1e-12
    with pytest.raises(DomainError):
        check_concavity(3, SMALL, hk_samples=0)


def test_jump_control_zero_step_and_p2_identity():
    r = check_jump_control(2, dim=3, samples=20_000, seed=4)
    assert r.passed
    assert r.details["p2_identity_max_relative_error"] <= 1e-12


def test_jump_control_spec_seed():
    r = check_jump_control(3, dim=3, samples=100_000, seed=42)
    assert r.passed and r.worst_violation >= -1e-9
    assert r.seed == 42 and r.samples == 100_000


def test_jump_control_needs_dim2():
    with pytest.raises(DomainError):
        check_jump_control(3, dim=1, samples=10)


def test_hessian_bound_examples():
    r = check_hessian_bound(3, dim=2, samples=10_000, seed=7)
    assert r.passed and r.worst_violation >= -1e-4
    r = check_hessian_bound(2, dim=2, samples=2000, seed=7)
    assert abs(r.worst_violation) < 1e-8


@pytest.mark.parametrize("p", STANDARD_P_LIST)
def test_suite_passes_on_small_grid(p):
    reports = run_suite(p, SMALL, seed=1, jump_samples=5000, hessian_samples=2000)
    assert [r.condition for r in reports] == ["initial", "majorization", "monotonicity",
                                              "concavity", "jump_control", "hessian_bound"]
    assert all(r.passed for r in reports), [(r.condition, r.worst_violation) for r in reports]


def test_p2_checks_are_exact():
    for r in run_suite(2, SMALL, seed=0, jump_samples=5000, hessian_samples=1000)[:4]:
        assert abs(r.worst_violation) <= 1e-12


def test_report_json_shape():
    r = check_initial(3, SMALL)
    d = r.to_dict()
    for key in ("condition", "p", "grid", "worst_violation", "location", "samples", "verdict", "seed"):
        assert key in d
    assert json.loads(json.dumps(d)) == d


def test_strict_policy_is_tighter():
    assert TolerancePolicy(closed_form=1e-11).closed_form < TolerancePolicy().closed_form


def test_solver_failure_marks_indeterminate(monkeypatch):
    from bellman_lp import phi as phimod
    monkeypatch.setattr(phimod, "MAX_ITER", 0)
    r = check_initial(3, GridSpec((0.5, 2.0), (0.5, 2.0), 4))
    assert r.indeterminate > 0 and r.verdict == "fail"
    assert np.isfinite(r.samples)
