import math
from fractions import Fraction

import pytest

from kfw.arith import build_tables
from kfw.errors import CapacityError, OutOfRangeError
from kfw.exact import (
    Quantity,
    expect_Sn,
    expect_Tn,
    expect_Xi,
    expect_XiXi1,
    expect_XiXj,
    expectation_series,
    path_enumeration_oracle,
    product_approximation,
    variance_Sn,
    variance_Sn_exact,
    variance_Tn,
    variance_Tn_exact,
)

SIX_OVER_PI2 = 6 / math.pi**2


@pytest.fixture(scope="module")
def tabs():
    return {k: build_tables(4100, k) for k in (1, 2)}


def test_single_point_examples(tabs):
    for a in (0.2, 0.5, 0.9):
        for k in (1, 2):
            assert expect_Xi(1, a, k, tabs[k]) == pytest.approx(1, abs=1e-15)
    assert expect_Xi(2, 0.5, 1, tabs[1]) == pytest.approx(0.5, abs=1e-15)
    assert expect_Xi(2, 0.5, 2, tabs[2]) == pytest.approx(1, abs=1e-15)
    assert expect_XiXi1(1, 0.5, 1, tabs[1]) == pytest.approx(0.5, abs=1e-15)
    assert expect_XiXi1(1, 0.5, 2, tabs[2]) == pytest.approx(1, abs=1e-15)
    assert expect_XiXj(1, 2, 0.5, 1, tabs[1]) == pytest.approx(expect_XiXi1(1, 0.5, 1, tabs[1]), abs=1e-15)


def test_averages_examples(tabs):
    assert expect_Sn(1, 0.4, 1, tabs[1]) == pytest.approx(1, abs=1e-15)
    assert expect_Sn(2, 0.5, 1, tabs[1]) == pytest.approx(0.75, abs=1e-15)
    assert expect_Tn(1, 0.5, 1, tabs[1]) == pytest.approx(0.5, abs=1e-15)
    assert expect_Tn(1, 0.5, 2, tabs[2]) == pytest.approx(1, abs=1e-15)


def test_oracle_small_cases():
    o = path_enumeration_oracle(1, Fraction(1, 3), 1)
    assert o.mean_s == 1 and o.var_s == 0 and o.mean_t is None
    o = path_enumeration_oracle(2, Fraction(1, 2), 1)
    assert o.mean_s == Fraction(3, 4)
    assert o.var_s == Fraction(1, 16)
    assert o.s_distribution == {1: Fraction(1, 2), 2: Fraction(1, 2)}
    assert sum(o.t_distribution.values()) == 1
    assert variance_Sn_exact(1, 0.3, 2) == 0


@pytest.mark.parametrize("alpha", [Fraction(1, 3), Fraction(1, 4), Fraction(2, 3)])
@pytest.mark.parametrize("k", [1, 2])
def test_routes_agree_with_oracle(tabs, alpha, k):
    for n in (3, 7, 12):
        o = path_enumeration_oracle(n, alpha, k)
        assert expect_Sn(n, alpha, k, tabs[k]) == pytest.approx(float(o.mean_s), abs=1e-12)
        assert expect_Tn(n - 1, alpha, k, tabs[k]) == pytest.approx(float(o.mean_t), abs=1e-12)
        assert variance_Sn(n, alpha, k, tabs[k]) == pytest.approx(float(o.var_s), abs=1e-12)
        assert variance_Tn(n - 1, alpha, k, tabs[k]) == pytest.approx(float(o.var_t), abs=1e-12)


def test_pair_expectation_vs_oracle(tabs):
    # marginal of one pair of points from the full 2^j path enumeration
    from kfw.arith import is_kfree_direct
    from itertools import product

    def brute(i, j, a, k):
        total = 0.0
        for steps in product((0, 1), repeat=j):
            x = sum(steps[:i])
            xj = sum(steps)
            ok = is_kfree_direct(math.gcd(x, i - x), k) and is_kfree_direct(math.gcd(xj, j - xj), k)
            p = math.prod(a if s else 1 - a for s in steps)
            total += p * ok
        return total

    for i, j, a, k in [(1, 3, 0.5, 1), (2, 4, 0.3, 2), (2, 3, 1 / 3, 1), (3, 9, 0.7, 1)]:
        assert expect_XiXj(i, j, a, k, tabs[k]) == pytest.approx(brute(i, j, a, k), abs=1e-12)
    assert expect_XiXi1(2, 1 / 3, 1, tabs[1]) == pytest.approx(brute(2, 3, 1 / 3, 1), abs=1e-12)


def test_xi_matches_oracle_marginal():
    # E(X_i) depends only on the endpoint distribution after i steps
    t = build_tables(20, 1)
    for i in range(2, 12):
        o = path_enumeration_oracle(i, 0.35, 1)
        o_prev = path_enumeration_oracle(i - 1, 0.35, 1)
        last = i * float(o.mean_s) - (i - 1) * float(o_prev.mean_s)
        assert expect_Xi(i, 0.35, 1, t) == pytest.approx(last, abs=1e-12)


def test_variance_n12_two_methods(tabs):
    assert variance_Sn(12, 0.3, 1, tabs[1]) == pytest.approx(variance_Sn_exact(12, 0.3, 1), abs=1e-10)
    assert variance_Tn(11, 0.3, 1, tabs[1]) == pytest.approx(variance_Tn_exact(11, 0.3, 1), abs=1e-10)


def test_large_n_near_limits(tabs):
    from kfw.constants import twin_product

    assert abs(expect_Sn(2000, 0.3, 1, tabs[1]) - SIX_OVER_PI2) < 0.05
    assert abs(expect_Tn(2000, 0.5, 1, tabs[1]) - twin_product(1, 1e-8).value) < 0.05
    assert abs(expect_Sn(2000, 0.3, 1, tabs[1]) - expect_Sn(2000, 0.7, 1, tabs[1])) <= 0.02


def test_product_approximation(tabs):
    # f_1(6) = 1/3 and f_1(10) = 2/5
    assert product_approximation(6, 10, tabs[1]) == pytest.approx(float(Fraction(1, 3) * Fraction(2, 5)))


def test_mean_series_decays(tabs):
    s = expectation_series(Quantity.MEAN_S, 0.3, 1, [250, 1000, 4000], tables=tabs[1])
    r = [abs(x) for x in s.residuals]
    assert r[0] > r[1] > r[2]
    assert s.loglog_slope() <= -0.3
    assert all(0 <= v <= 1 for v in s.values)
    rows = s.rows()
    assert [row["n"] for row in rows] == [250, 1000, 4000]


def test_variance_series_decays(tabs):
    for q in (Quantity.VAR_S, Quantity.VAR_T):
        s = expectation_series(q, 0.5, 1, [64, 256, 1024], tables=tabs[1])
        assert s.values[-1] < s.values[0]
        assert all(v >= 0 for v in s.values)


def test_k2_mean_series(tabs):
    s = expectation_series(Quantity.MEAN_S, 0.5, 2, [250, 1000, 4000], tables=tabs[2])
    assert abs(s.residuals[-1]) < abs(s.residuals[0])


def test_errors(tabs):
    with pytest.raises(CapacityError):
        expect_Sn(50, 0.5, 1, tabs[1], max_n=10)
    with pytest.raises(CapacityError):
        path_enumeration_oracle(21, 0.5, 1)
    with pytest.raises(OutOfRangeError):
        expect_Sn(5000, 0.5, 1, tabs[1])
    with pytest.raises(ValueError):
        expectation_series(Quantity.MEAN_S, 0.5, 1, [100, 50], tables=tabs[1])
    with pytest.raises(ValueError):
        expect_XiXj(3, 3, 0.5, 1, tabs[1])
