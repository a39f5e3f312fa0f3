import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minary.config import SignalDistribution
from minary.theory import (
    DERIVED,
    PAPER,
    averages,
    conditional_mean,
    conditional_variance,
    enumerate_conditional_moments,
    eta,
    limit_expectation,
)

UNIFORM = SignalDistribution.uniform()


@pytest.mark.parametrize(
    "m,k,expected",
    [(6, 3, Fraction(1, 6)), (19, 3, Fraction(8, 35)), (5, 1, Fraction(1, 2)), (4, 4, Fraction(0)), (1, 1, Fraction(0))],
)
def test_eta_examples(m, k, expected):
    assert eta(m, k) == pytest.approx(float(expected), abs=1e-15)


def test_eta_rejects_bad_k():
    with pytest.raises(ValueError):
        eta(3, 4)


def test_averages_example(generalist_C):
    avg = averages(generalist_C)
    assert np.allclose(avg.col_means, 0.5, atol=1e-15)
    assert np.allclose(avg.row_means, 0.5, atol=1e-15)
    assert avg.global_mean == pytest.approx(0.5, abs=1e-15)


def test_hat_c():
    avg = averages(np.array([[0.2, 0.4, 0.6]]))
    assert np.allclose(avg.hat_c, [0.5, 0.4, 0.3], atol=1e-15)


def test_generalist_limit_is_scaled_deviation(generalist_C):
    U = limit_expectation(generalist_C, 6, 3)
    assert np.allclose(U, (generalist_C - 0.5) / 6, atol=1e-15)
    assert np.abs(U[1]).max() <= 1e-15


def test_limit_k_one_is_half_column_deviation():
    C = np.random.default_rng(0).random((4, 5))
    assert np.allclose(limit_expectation(C, 5, 1), 0.5 * (C - C.mean(axis=0)), atol=1e-15)


def test_limit_full_subset_is_row_deviation():
    C = np.random.default_rng(1).random((3, 4))
    U = limit_expectation(C, 4, 4)
    expect = np.broadcast_to((C.mean(axis=1) - C.mean())[:, None], (3, 4))
    assert np.allclose(U, 0.5 * expect, atol=1e-15)


def test_limit_width_mismatch():
    with pytest.raises(ValueError):
        limit_expectation(np.zeros((2, 3)), m=4, k=1)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(1, 8), st.data())
def test_limit_has_zero_column_means(n, m, data):
    k = data.draw(st.integers(1, m))
    C = np.random.default_rng(data.draw(st.integers(0, 10**6))).random((n, m))
    assert np.abs(limit_expectation(C, m, k).mean(axis=0)).max() <= 1e-14


def test_conditional_mean_example():
    C = np.array([[0.2, 0.4, 0.6]])
    assert conditional_mean(C, UNIFORM, 2, 0, DERIVED) == pytest.approx(0.15, abs=1e-15)
    assert conditional_mean(C, UNIFORM, 2, 0, PAPER) == pytest.approx(0.65, abs=1e-15)
    with pytest.raises(ValueError):
        conditional_mean(C, UNIFORM, 2, 0, "other")


def test_single_column_moments():
    C = np.array([[0.3], [0.7]])
    assert conditional_mean(C, UNIFORM, 1, 0) == pytest.approx(0.0, abs=1e-15)
    assert conditional_variance(C, UNIFORM, 1, 0) == pytest.approx(1 / 12, abs=1e-15)


def test_two_columns_have_no_spread_term():
    # with m = 2 every valid k makes (k - 1)(m - k) vanish
    C = np.array([[0.2, 0.7]])
    assert conditional_variance(C, UNIFORM, 1, 0) == pytest.approx(1 / 12, abs=1e-15)
    assert conditional_variance(C, UNIFORM, 2, 1) == pytest.approx(1 / 24, abs=1e-15)


def _brute_moments(C, k, j):
    """Exact rational moments of the normalised consensus given j active, uniform signals."""
    col = [Fraction(repr(float(v))) for v in np.asarray(C).mean(axis=0)]
    m = len(col)
    shifts = [(col[j] + sum(col[r] for r in rest)) / k for rest in itertools.combinations([r for r in range(m) if r != j], k - 1)]
    mean_shift = sum(shifts) / len(shifts)
    var_shift = sum((s - mean_shift) ** 2 for s in shifts) / len(shifts)
    return float(Fraction(1, 2) - mean_shift), float(Fraction(1, 12) / k + var_shift)


@pytest.mark.parametrize("j", range(4))
def test_conditional_moments_m4_k2(j):
    C = np.array([[0.1, 0.5, 0.3, 0.9], [0.4, 0.2, 0.8, 0.6]])
    bm, bv = _brute_moments(C, 2, j)
    assert conditional_mean(C, UNIFORM, 2, j) == pytest.approx(bm, abs=1e-12)
    assert conditional_variance(C, UNIFORM, 2, j) == pytest.approx(bv, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(3, 7), st.data())
def test_moments_match_enumeration(m, data):
    k = data.draw(st.integers(1, m))
    j = data.draw(st.integers(0, m - 1))
    C = np.random.default_rng(data.draw(st.integers(0, 10**6))).random((data.draw(st.integers(1, 4)), m))
    bm, bv = _brute_moments(C, k, j)
    em, ev = enumerate_conditional_moments(C, UNIFORM, k, j)
    assert abs(em - bm) <= 1e-12 and abs(ev - bv) <= 1e-12
    assert abs(conditional_mean(C, UNIFORM, k, j) - bm) <= 1e-12
    assert abs(conditional_variance(C, UNIFORM, k, j) - bv) <= 1e-12


def test_sign_variants_agree_only_when_k_is_one():
    C = np.random.default_rng(2).random((3, 5))
    for j in range(5):
        assert conditional_mean(C, UNIFORM, 1, j, DERIVED) == conditional_mean(C, UNIFORM, 1, j, PAPER)
    assert conditional_mean(C, UNIFORM, 3, 0, DERIVED) != pytest.approx(conditional_mean(C, UNIFORM, 3, 0, PAPER))
