import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coalsim.errors import DomainError
from coalsim.specfun import (
    ONE,
    ZERO,
    LogValue,
    falling_float,
    log_beta,
    log_binomial_array,
    log_gamma,
    log_rising_array,
    rising,
    rising_float,
    rising_ratio,
    rising_ratio_asymptotic,
)


def mp_rising(x, k):
    with mpmath.workdps(50):
        return mpmath.rf(mpmath.mpf(x), k)


@pytest.mark.parametrize("x", [1e-3, 0.5, 1.0, 2.5, 10.0, 1e3, 1e8])
def test_log_gamma_matches_mpmath(x):
    with mpmath.workdps(40):
        exact = float(mpmath.loggamma(x))
    assert log_gamma(x) == pytest.approx(exact, rel=1e-14, abs=1e-15)


def test_log_gamma_rejects_non_positive():
    with pytest.raises(DomainError):
        log_gamma(0.0)
    with pytest.raises(DomainError):
        log_gamma(-1.5)


def test_log_beta():
    assert math.exp(log_beta(2, 3)) == pytest.approx(1 / 12, rel=1e-14)


def test_rising_small_cases():
    assert rising(3.0, 0) == ONE
    assert rising_float(1.0, 5) == pytest.approx(120.0, rel=1e-15)
    assert rising_float(0.5, 3) == pytest.approx(0.5 * 1.5 * 2.5, rel=1e-15)
    assert falling_float(5.0, 3) == pytest.approx(60.0, rel=1e-15)


def test_rising_with_zero_factor_is_exact_zero():
    assert rising(-2.0, 5) == ZERO
    assert rising(-2.0, 2).value == pytest.approx(2.0)


def test_rising_negative_argument_sign():
    # (-1.5)(-0.5)(0.5) = 0.375
    assert rising_float(-1.5, 3) == pytest.approx(0.375, rel=1e-15)
    assert rising(-1.5, 2).sign == 1
    assert rising(-0.5, 2).sign == -1


def test_rising_large_order_does_not_overflow():
    v = rising(0.5, 10_000)
    assert math.isfinite(v.log_magnitude)
    assert v.value == math.inf
    with mpmath.workdps(40):
        assert v.log_magnitude == pytest.approx(float(mpmath.log(mpmath.rf(0.5, 10_000))), rel=1e-13)


def test_rising_ratio_vs_mpmath():
    got = rising_ratio(0.7, 500, 1.3, 498)
    exact = float(mp_rising(0.7, 500) / mp_rising(1.3, 498))
    assert got == pytest.approx(exact, rel=1e-12)


def test_rising_ratio_asymptotic_converges():
    a, b, z = 0.5, 1.5, 1
    gaps = [abs(rising_ratio(a, n, b, n + z) / rising_ratio_asymptotic(a, b, z, n) - 1) for n in (10, 100, 1000, 10**4)]
    assert all(g2 < g1 for g1, g2 in zip(gaps, gaps[1:]))


def test_array_helpers():
    k = np.arange(0, 20)
    assert np.allclose(log_rising_array(0.5, k), [rising(0.5, int(j)).log_magnitude for j in k], rtol=1e-13, atol=1e-13)
    assert np.allclose(np.exp(log_binomial_array(10, np.arange(11))), [math.comb(10, j) for j in range(11)], rtol=1e-13)


def test_logvalue_arithmetic():
    x = LogValue.from_float(-3.0)
    y = LogValue.from_float(2.0)
    assert (x * y).value == pytest.approx(-6.0)
    assert (x / y).value == pytest.approx(-1.5)
    assert (-x).value == pytest.approx(3.0)
    assert LogValue.from_float(0.0) == ZERO
    with pytest.raises(ZeroDivisionError):
        x / ZERO
    with pytest.raises(ValueError):
        LogValue(0.0, 2)


@settings(max_examples=60, deadline=None)
@given(
    a=st.floats(0.01, 5.0),
    b=st.floats(0.01, 5.0),
    n=st.integers(0, 80),
)
def test_binomial_type_identity(a, b, n):
    lhs = math.fsum(math.comb(n, l) * rising_float(a, l) * rising_float(b, n - l) for l in range(n + 1))
    assert lhs == pytest.approx(rising_float(a + b, n), rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(x=st.floats(-20.0, 20.0), k=st.integers(0, 60))
def test_rising_matches_mpmath(x, k):
    got = rising(x, k)
    exact = mp_rising(x, k)
    if exact == 0:
        assert got.sign == 0 or abs(got.value) < 1e-300
        return
    assert got.sign == int(mpmath.sign(exact))
    assert got.log_magnitude == pytest.approx(float(mpmath.log(abs(exact))), rel=1e-12, abs=1e-11)
