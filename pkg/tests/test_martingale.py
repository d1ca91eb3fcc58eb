import csv
import io
import math

import numpy as np
import pytest

from bellman_lp import DomainError, Exponent
from bellman_lp.martingale import (BATCH_COLUMNS, IncrementPath, TreeMartingale, check_dual_bound,
                                   check_joint_variation, check_lp_bound, check_p2_step_inequality,
                                   check_U_supermartingale, child_rng, dyadic_tree,
                                   gen_subordinate_pair, gen_transform_pair, p2_step_battery,
                                   rows_to_csv, run_martingale_suite, tree_lp_ratio)


@pytest.mark.parametrize("rule", ["one", "minus_one"])
def test_constant_transform_has_ratio_one(rule):
    paths = gen_transform_pair(30, 5, v_rule=rule, n_paths=500)
    c = check_lp_bound(paths, 3)
    assert c.value == pytest.approx(1.0, rel=1e-14)
    assert c.holds


def test_alternating_transform_seed1():
    paths = gen_transform_pair(50, 1, "rademacher", "alternating", n_paths=1)
    assert paths.certificate() <= 0
    assert paths.steps == 50 and paths.dim == 1
    for p in (1.5, 2.0, 3.0):
        assert check_lp_bound(paths, p).holds


def test_transform_gaussian_and_errors():
    paths = gen_transform_pair(10, 3, "gaussian", n_paths=50)
    assert np.allclose(np.abs(paths.dg), np.abs(paths.df))
    with pytest.raises(DomainError):
        gen_transform_pair(0, 1)
    with pytest.raises(DomainError):
        gen_transform_pair(5, 1, "cauchy")
    with pytest.raises(DomainError):
        gen_transform_pair(5, 1, v_rule="random")


def test_zero_rho_freezes_g():
    paths = gen_subordinate_pair(2, 20, 3, n_paths=100, rho_rule="zero")
    assert np.all(paths.dg == 0.0)
    prod, _ = check_dual_bound(paths, 3)
    assert prod.value == 0.0


def test_identity_rho_one_copies_f():
    paths = gen_subordinate_pair(3, 20, 3, n_paths=100, rho_rule="one", rotation_rule="identity")
    assert np.array_equal(paths.terminal("g") - paths.dg[:, 0], paths.terminal("f") - paths.df[:, 0])


def test_certificate_seed2():
    paths = gen_subordinate_pair(3, 100, 2)
    assert paths.certificate() <= 0
    for rule in ("identity", "permutation", "rotation"):
        assert gen_subordinate_pair(3, 100, 2, 200, rotation_rule=rule).certificate() <= 0


def test_certificate_is_enforced():
    df = np.ones((1, 2, 1))
    with pytest.raises(DomainError):
        IncrementPath(df, 2 * df)


def test_rng_streams_are_reproducible_and_distinct():
    a = gen_subordinate_pair(2, 10, 9, 5)
    b = gen_subordinate_pair(2, 10, 9, 5)
    c = gen_subordinate_pair(2, 10, 10, 5)
    assert np.array_equal(a.df, b.df) and np.array_equal(a.dh, b.dh)
    assert not np.array_equal(a.df, c.df)
    with pytest.raises(DomainError):
        child_rng(-1)


def test_h_zero_gives_zero_bracket():
    paths = gen_subordinate_pair(2, 10, 4, 200, h_corr=0.0, h_noise=0.0)
    prod, young = check_dual_bound(paths, 3)
    assert prod.value == 0.0 and young.value == 0.0
    assert check_joint_variation(paths, 3).value == 0.0


def test_zero_f_paths_are_excluded():
    paths = gen_subordinate_pair(1, 5, 4, 10)
    df, dg, dh = paths.df.copy(), paths.dg.copy(), paths.dh.copy()
    df[0] = dg[0] = 0.0
    c = check_lp_bound(IncrementPath(df, dg, dh), 2)
    assert c.excluded == 1 and c.n_paths == 9


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_inequalities_on_batch(dim, p):
    paths = gen_subordinate_pair(dim, 50, 20 + dim, 10_000)
    exp = Exponent(p)
    assert check_lp_bound(paths, exp).holds
    prod, young = check_dual_bound(paths, exp)
    assert prod.holds and young.holds
    assert check_joint_variation(paths, exp).holds


def test_dual_bound_has_slack_at_p3():
    paths = gen_subordinate_pair(2, 50, 7, 10_000)
    prod, _ = check_dual_bound(paths, 3)
    assert prod.value <= prod.bound * (1 - 0.02)


# --- trees -------------------------------------------------------------------

def _two_step_tree():
    # f0 = 0; children +-1; grandchildren +-1 again, g = f (subordinate with equality)
    parent = [-1, 0, 0, 1, 1, 2, 2]
    prob = [1, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5]
    f = np.array([[0.0], [1], [-1], [2], [0], [0], [-2]])
    return parent, prob, f


def test_tree_validation():
    parent, prob, f = _two_step_tree()
    TreeMartingale(parent, prob, f, f)
    with pytest.raises(DomainError, match="probability"):
        TreeMartingale(parent, [1, 0.5, 0.6, 0.5, 0.5, 0.5, 0.5], f, f)
    bad = f.copy()
    bad[3] = 3.0
    with pytest.raises(DomainError, match="martingale"):
        TreeMartingale(parent, prob, bad, f * 0)
    with pytest.raises(DomainError, match=r"\|dg\|"):
        TreeMartingale(parent, prob, f, 2 * f)
    with pytest.raises(DomainError):
        TreeMartingale([0, 0], [1, 1], np.zeros((2, 1)), np.zeros((2, 1)))


def test_tree_p2_orthogonality_equality():
    parent, prob, f = _two_step_tree()
    tree = TreeMartingale(parent, prob, f, f)
    # E sum |df|^2 over the two steps equals ||f_2||_2^2 since f_0 = 0
    sq = math.fsum(tree.weight[i] * float(np.sum((tree.f[i] - tree.f[tree.parent[i]]) ** 2))
                   for i in range(1, len(parent)))
    assert sq == pytest.approx(tree.lp_norm("f", 2) ** 2, rel=1e-15)
    assert tree.lp_norm("f", 2, sup_over_times=False) ** 2 == pytest.approx(2.0)
    c = tree_lp_ratio(tree, 2)
    assert c.value == pytest.approx(1.0) and c.holds


def test_tree_sup_over_times_matches_terminal():
    tree = dyadic_tree(8, 2, 3)
    for p in (1.5, 3.0):
        assert tree.lp_norm("f", p) == pytest.approx(tree.lp_norm("f", p, sup_over_times=False), rel=1e-14)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_dyadic_tree_ratio(p):
    tree = dyadic_tree(10, 2, 5)
    assert tree.horizon == 10
    assert tree_lp_ratio(tree, p).holds
    with pytest.raises(DomainError):
        dyadic_tree(0, 2, 5)


# --- one-step inequality -------------------------------------------------------

def test_p2_step_examples():
    r = check_p2_step_inequality([0.3], [-1.2], [0.5, 0.5], [1.0, -1.0], [1.0, -1.0])
    assert r.slack == pytest.approx(0.0, abs=1e-15)
    r = check_p2_step_inequality([0.3], [0.7], [0.5, 0.5], [1.0, -1.0], [-1.0, 1.0])
    assert r.slack == pytest.approx(0.0, abs=1e-15)
    # dh here has mean -1, so the state is taken at the origin where drift drops out
    r = check_p2_step_inequality([0.0], [0.0], [1 / 3, 2 / 3], [2.0, -1.0], [1.0, -2.0])
    assert r.slack == pytest.approx(0.5, rel=1e-14)
    assert r.closed_form == pytest.approx(0.5, rel=1e-14)


def test_p2_step_rejects_bad_probs():
    with pytest.raises(DomainError):
        check_p2_step_inequality([0.0], [0.0], [0.5, 0.6], [1.0, -1.0], [1.0, -1.0])


def test_p2_step_battery_closed_form():
    assert p2_step_battery(3, n=300, dim=3) <= 1e-12


# --- U -------------------------------------------------------------------------

def test_U_p2_is_exact_algebra():
    r = check_U_supermartingale(2, samples=3000, dim=3, rng_seed=5)
    assert r.passed and r.worst_violation >= 0.0


def test_U_seed11_p3():
    r = check_U_supermartingale(3, samples=100_000, dim=2, rng_seed=11)
    assert r.passed
    assert r.worst_violation >= -1e-10
    assert r.samples == 100_000


def test_U_trees_are_checked():
    trees = [dyadic_tree(6, 2, 1)]
    r = check_U_supermartingale(1.5, samples=300, trees=trees)
    assert r.passed and "tree_worst" in r.details
    assert r.samples == 300 + 2 ** 6 - 1


# --- batch output --------------------------------------------------------------

def test_small_suite_csv_and_determinism():
    kw = dict(n_paths=500, steps=10, u_samples=600, tree_depth=4, adversarial_paths=50)
    a = run_martingale_suite(3, **kw)
    b = run_martingale_suite(3, **kw)
    assert a.passed
    assert a.to_dict() == b.to_dict()
    text = rows_to_csv(a.rows)
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert tuple(parsed[0]) == BATCH_COLUMNS
    assert len(parsed) == 3 * 3 * 4
    assert text == rows_to_csv(b.rows)
    d = a.to_dict()
    assert d["generator_version"] == 1 and d["root_seed"] == 3
