import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coalsim.errors import BudgetError, DomainError, RegimeError
from coalsim.rates import (
    BetaParams,
    build_rate_table,
    drift_constants,
    gamma_asymptotic_constant,
    gamma_moment,
    gamma_moment_direct,
    gamma_moments,
    merger_rate,
    merger_size_pmf,
)
from coalsim.verify import arcsine_rate, arcsine_rate_as_printed, bolthausen_sznitman_rate, random_params


def exact_rate(a: Fraction, b: Fraction, m: int, k: int) -> Fraction:
    def rf(x, j):
        out = Fraction(1)
        for i in range(j):
            out *= x + i
        return out

    return rf(a, k - 2) * rf(b, m - k) / rf(a + b, m - 2)


def test_params_validation():
    with pytest.raises(DomainError):
        BetaParams(0.0, 1.0)
    with pytest.raises(DomainError):
        BetaParams(1.0, -1.0)
    with pytest.raises(DomainError):
        BetaParams(math.inf, 1.0)
    k = BetaParams.kingman()
    assert (k.a, k.b, k.is_kingman) == (0.0, 1.0, True)
    assert k.comes_down_from_infinity()
    assert not BetaParams(1.5, 1).comes_down_from_infinity()


@pytest.mark.parametrize("k,expected", [(2, Fraction(1, 3)), (3, Fraction(1, 6)), (4, Fraction(1, 3))])
def test_bolthausen_sznitman_row_4(k, expected):
    # (k-2)!(4-k)!/3!
    assert merger_rate(BetaParams(1, 1), 4, k).value == pytest.approx(float(expected), rel=1e-14)
    table = build_rate_table(BetaParams(1, 1), 4)
    assert math.exp(table.log_lambda(4, k)) == pytest.approx(float(expected), rel=1e-14)


def test_arcsine_matches_exact_fraction():
    half = Fraction(1, 2)
    for m in range(2, 12):
        for k in range(2, m + 1):
            assert arcsine_rate(m, k) == pytest.approx(float(exact_rate(half, half, m, k)), rel=1e-12)


def test_arcsine_printed_form_is_off_by_factorial():
    assert arcsine_rate_as_printed(3, 2) == pytest.approx(arcsine_rate(3, 2))
    assert arcsine_rate_as_printed(6, 3) == pytest.approx(24 * arcsine_rate(6, 3))


@pytest.mark.parametrize("a,b", [(0.5, 0.5), (1.0, 1.0), (0.2, 3.0), (2.5, 1.5), (1.0005, 0.7)])
def test_table_matches_exact_rationals(a, b):
    fa, fb = Fraction(a), Fraction(b)
    table = build_rate_table(BetaParams(a, b), 30)
    for m in (2, 3, 7, 30):
        row = np.exp(table.log_row(m))
        for k in range(2, m + 1):
            assert row[k - 2] == pytest.approx(float(exact_rate(fa, fb, m, k)), rel=1e-12)


def test_row_totals_and_pair_probability():
    p = BetaParams(0.5, 0.5)
    table = build_rate_table(p, 40)
    for m in (2, 5, 40):
        direct = math.fsum(math.comb(m, k) * merger_rate(p, m, k).value for k in range(2, m + 1))
        assert table.row_totals[m] == pytest.approx(direct, rel=1e-12)
        assert table.pair_prob[m] == pytest.approx(math.comb(m, 2) * merger_rate(p, m, 2).value / direct, rel=1e-12)


def test_row_totals_near_singular_a():
    # closed form degenerates at a=1; the table falls back to summation
    for a in (1.0, 1.0004, 2.0):
        p = BetaParams(a, 0.8)
        table = build_rate_table(p, 50)
        direct = math.fsum(math.comb(50, k) * merger_rate(p, 50, k).value for k in range(2, 51))
        assert table.row_totals[50] == pytest.approx(direct, rel=1e-12)


def test_kingman_table():
    table = build_rate_table(BetaParams.kingman(), 10)
    assert table.row_totals[10] == 45
    assert table.pair_prob[10] == 1
    assert math.exp(table.log_lambda(5, 2)) == 1.0
    assert table.log_lambda(5, 3) == -math.inf
    assert merger_size_pmf(table, 6).tolist() == [1, 0, 0, 0, 0]


def test_table_arrays_are_read_only():
    table = build_rate_table(BetaParams(0.5, 0.5), 10)
    with pytest.raises(ValueError):
        table.row_totals[3] = 1.0


def test_table_errors():
    with pytest.raises(DomainError):
        build_rate_table(BetaParams(0.5, 0.5), 1)
    with pytest.raises(BudgetError):
        build_rate_table(BetaParams(0.5, 0.5), 100, max_blocks=50)
    table = build_rate_table(BetaParams(0.5, 0.5), 10)
    with pytest.raises(DomainError):
        table.log_row(11)
    with pytest.raises(DomainError):
        merger_rate(BetaParams(0.5, 0.5), 3, 4)


def test_dense_log_shape():
    dense = build_rate_table(BetaParams(0.5, 0.5), 6).dense_log()
    assert dense.shape == (7, 7)
    assert np.isnan(dense[3, 4]) and np.isfinite(dense[6, 6])


def test_merger_size_pmf_bs3():
    # beta(1,1) from 3 blocks: pair w.p. 3/4, triple w.p. 1/4
    pmf = merger_size_pmf(build_rate_table(BetaParams(1, 1), 3), 3)
    assert pmf == pytest.approx([0.75, 0.25], abs=1e-15)


def test_rows_are_log_convex():
    table = build_rate_table(BetaParams(0.5, 0.5), 300)
    for m in (10, 100, 300):
        assert np.all(np.diff(table.log_row(m), 2) >= -1e-12)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.05, 4.0), b=st.floats(0.05, 4.0), m=st.integers(2, 150))
def test_consistency_recursion(a, b, m):
    table = build_rate_table(BetaParams(a, b), m + 1)
    cur = np.exp(table.log_row(m))
    nxt = np.exp(table.log_row(m + 1))
    assert np.allclose(cur, nxt[:-1] + nxt[1:], rtol=1e-10, atol=0)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.05, 4.0), b=st.floats(0.05, 4.0), m=st.integers(2, 200))
def test_pmf_sums_to_one(a, b, m):
    pmf = merger_size_pmf(build_rate_table(BetaParams(a, b), m), m)
    assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(pmf >= 0)


@pytest.mark.parametrize("p", random_params(6, seed=21))
@pytest.mark.parametrize("n", [2, 3, 10, 300])
def test_gamma_closed_forms_vs_direct(p, n):
    for k in (0, 1, 2, 3):
        assert gamma_moment(p, n, k) == pytest.approx(gamma_moment_direct(p, n, k), rel=1e-9)
    assert gamma_moment(p, n, 2, "falling") == n * (n - 1)
    assert gamma_moment(p, n, 3, "falling") == pytest.approx(gamma_moment_direct(p, n, 3, "falling"), rel=1e-9, abs=1e-300)


def test_gamma_moments_bundle_and_kingman():
    g = gamma_moments(BetaParams(0.5, 0.5), 10)
    assert set(g.gamma) == {0, 1, 2, 3} and set(g.gamma_falling) == {1, 2, 3}
    k = BetaParams.kingman()
    assert gamma_moment(k, 10, 0) == 45
    assert gamma_moment(k, 10, 2, "falling") == 90


def test_gamma_moment_argument_checks():
    p = BetaParams(0.5, 0.5)
    with pytest.raises(DomainError):
        gamma_moment(p, 1, 0)
    with pytest.raises(DomainError):
        gamma_moment(p, 10, 4)
    with pytest.raises(DomainError):
        gamma_moment(p, 10, 0, "falling")
    with pytest.raises(DomainError):
        gamma_moment(BetaParams(1.0, 0.5), 10, 0)


@pytest.mark.parametrize("a,b,k", [(0.5, 0.5, 0), (1.5, 1.0, 0), (3.0, 1.0, 0), (0.3, 2.0, 1), (3.0, 1.0, 1), (0.5, 1.0, 3)])
def test_gamma_asymptotics(a, b, k):
    p = BetaParams(a, b)
    c, e = gamma_asymptotic_constant(p, k)
    n = 10**6
    assert abs(gamma_moment(p, n, k) / (c * n**e) - 1) <= 10 * n ** -min(1, abs(1 - a))


def test_asymptotic_constant_regimes():
    with pytest.raises(RegimeError):
        gamma_asymptotic_constant(BetaParams.kingman(), 0)
    with pytest.raises(DomainError):
        gamma_asymptotic_constant(BetaParams(0.5, 0.5), 2)


def test_drift_constants():
    g, k = drift_constants(BetaParams(0.5, 0.5))
    assert k == pytest.approx(math.gamma(1.0) / (1.5 * math.gamma(0.5)))
    assert g == pytest.approx(2 * k)
    assert drift_constants(BetaParams.kingman()) == (0.5, 0.5)
    with pytest.raises(RegimeError):
        drift_constants(BetaParams(1.5, 1))
