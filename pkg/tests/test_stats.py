"""Harmonic/c-factor oracles, MAD thresholding, and the two-sample KS test."""
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from driftwatch.errors import ConfigError
from driftwatch.stats import (
    EULER_GAMMA,
    MAD_EPSILON,
    c_factor,
    c_factor_array,
    harmonic,
    ks_pvalue,
    ks_statistic,
    ks_test,
    mad_summary,
    median,
)

scipy_stats = pytest.importorskip("scipy.stats")


# --- harmonic and c_factor ----------------------------------------------------

def test_harmonic_small_values():
    # ln(i) + gamma approximation, not the exact harmonic number
    assert harmonic(1) == pytest.approx(EULER_GAMMA, abs=0)
    assert harmonic(10) == pytest.approx(2.8798, abs=1e-4)
    assert harmonic(255) == pytest.approx(6.1185, abs=1e-4)
    assert harmonic(2) == pytest.approx(math.log(2) + EULER_GAMMA, abs=1e-12)


def test_harmonic_rejects_nonpositive():
    with pytest.raises(ConfigError):
        harmonic(0)


def test_c_factor_exact_anchors():
    assert c_factor(0) == 0.0
    assert c_factor(1) == 0.0
    assert c_factor(2) == 1.0


def test_c_factor_256_against_independent_derivation():
    # value recomputed from 2*(ln(n-1) + gamma) - 2*(n-1)/n with n=256
    n = 256
    expected = 2.0 * (math.log(n - 1) + 0.5772156649) - 2.0 * (n - 1) / n
    assert c_factor(256) == pytest.approx(expected, abs=1e-6)
    assert c_factor(256) == pytest.approx(10.2448, abs=1e-3)


def test_c_factor_array_matches_scalar():
    ns = np.array([0, 1, 2, 3, 10, 256, 1000])
    out = c_factor_array(ns)
    for n, v in zip(ns, out):
        assert v == c_factor(int(n))


@given(st.integers(min_value=2, max_value=100_000))
def test_c_factor_nondecreasing(n):
    assert c_factor(n + 1) >= c_factor(n)


@given(st.integers(min_value=3, max_value=10_000))
def test_c_factor_below_two_harmonic(n):
    # c(n) = 2H(n-1) - 2(n-1)/n < 2H(n-1)
    assert c_factor(n) < 2.0 * harmonic(n - 1)


# --- median and MAD -----------------------------------------------------------

def test_median_odd_even():
    assert median([3.0, 1.0, 2.0]) == 2.0
    assert median([4.0, 1.0, 3.0, 2.0]) == 2.5


def test_median_rejects_empty_and_nonfinite():
    with pytest.raises(ConfigError):
        median([])
    with pytest.raises(ConfigError):
        median([1.0, float("nan")])


def test_mad_summary_hand_example():
    s = mad_summary([1.0, 2.0, 3.0, 4.0, 100.0])
    assert s.median == 3.0
    assert s.mad == 1.0
    assert s.k == 3.5
    assert s.threshold == 6.5
    assert not s.degenerate


def test_mad_summary_outlier_resistance():
    # one wild value barely moves the threshold
    base = mad_summary([1.0, 2.0, 3.0, 4.0, 5.0])
    wild = mad_summary([1.0, 2.0, 3.0, 4.0, 1e9])
    assert abs(base.threshold - wild.threshold) < 1.0


def test_mad_summary_degenerate_constant_sample():
    s = mad_summary([2.0, 2.0, 2.0])
    assert s.degenerate
    assert s.mad == 0.0
    assert s.threshold == pytest.approx(2.0 + MAD_EPSILON, abs=0)


def test_mad_summary_custom_k():
    s = mad_summary([1.0, 2.0, 3.0, 4.0, 100.0], k=2.0)
    assert s.threshold == 5.0


@given(
    st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=1, max_size=60),
    st.floats(min_value=-1e3, max_value=1e3),
)
def test_mad_shift_invariance(xs, shift):
    a = mad_summary(xs)
    b = mad_summary([x + shift for x in xs])
    assert b.median == pytest.approx(a.median + shift, abs=1e-6)
    assert b.mad == pytest.approx(a.mad, abs=1e-6)


@given(st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=1, max_size=60))
def test_mad_median_within_bounds(xs):
    s = mad_summary(xs)
    assert min(xs) <= s.median <= max(xs)


@given(
    st.lists(st.floats(min_value=-1e3, max_value=1e3), min_size=2, max_size=40),
    st.floats(min_value=0.1, max_value=10.0),
    st.floats(min_value=0.1, max_value=10.0),
)
def test_mad_threshold_monotone_in_k(xs, k1, k2):
    lo, hi = sorted((k1, k2))
    assert mad_summary(xs, k=lo).threshold <= mad_summary(xs, k=hi).threshold


# --- KS statistic ---------------------------------------------------------------

def test_ks_statistic_hand_examples():
    assert ks_statistic([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0
    assert ks_statistic([0.0, 1.0], [5.0, 6.0]) == 1.0
    # ECDFs: a jumps at 1,2; b jumps at 2,3 -> max gap 0.5 at x in [1,2)
    assert ks_statistic([1.0, 2.0], [2.0, 3.0]) == pytest.approx(0.5, abs=0)


def test_ks_statistic_with_ties_matches_scipy():
    a = [1.0, 1.0, 2.0, 3.0, 3.0, 3.0]
    b = [1.0, 2.0, 2.0, 2.0, 4.0]
    expected = scipy_stats.ks_2samp(a, b, method="asymp").statistic
    assert ks_statistic(a, b) == pytest.approx(expected, abs=1e-15)


def test_ks_statistic_rejects_empty():
    with pytest.raises(ConfigError):
        ks_statistic([], [1.0])


@given(
    st.lists(st.floats(min_value=-100, max_value=100), min_size=1, max_size=50),
    st.lists(st.floats(min_value=-100, max_value=100), min_size=1, max_size=50),
)
def test_ks_statistic_symmetric_and_bounded(a, b):
    d1 = ks_statistic(a, b)
    d2 = ks_statistic(b, a)
    assert d1 == d2
    assert 0.0 <= d1 <= 1.0


@settings(max_examples=40)
@given(
    st.lists(st.floats(min_value=-100, max_value=100), min_size=2, max_size=50),
    st.lists(st.floats(min_value=-100, max_value=100), min_size=2, max_size=50),
)
def test_ks_statistic_matches_scipy(a, b):
    expected = scipy_stats.ks_2samp(a, b, method="asymp").statistic
    assert ks_statistic(a, b) == pytest.approx(expected, abs=1e-12)


# --- KS p-value ------------------------------------------------------------------

def test_ks_pvalue_spec_point():
    assert ks_pvalue(0.2, 100, 100) == pytest.approx(0.0366, abs=1e-3)


def test_ks_pvalue_zero_distance_is_one():
    assert ks_pvalue(0.0, 50, 60) == 1.0


def test_ks_pvalue_matches_kolmogorov_limit():
    # independent oracle: the Kolmogorov limiting distribution
    for d, n1, n2 in [(0.2, 100, 100), (0.1375, 80, 120), (0.5, 30, 40), (0.03, 1000, 1000)]:
        lam = d * math.sqrt(n1 * n2 / (n1 + n2))
        expected = scipy_stats.distributions.kstwobign.sf(lam)
        assert ks_pvalue(d, n1, n2) == pytest.approx(expected, rel=1e-10)


@given(
    st.floats(min_value=0.0, max_value=1.0),
    st.integers(min_value=1, max_value=10_000),
    st.integers(min_value=1, max_value=10_000),
)
def test_ks_pvalue_in_unit_interval(d, n1, n2):
    p = ks_pvalue(d, n1, n2)
    assert 0.0 <= p <= 1.0


@given(
    st.floats(min_value=0.0, max_value=0.99),
    st.floats(min_value=0.0, max_value=0.99),
    st.integers(min_value=5, max_value=5000),
)
def test_ks_pvalue_nonincreasing_in_d(d1, d2, n):
    lo, hi = sorted((d1, d2))
    # the truncated series is only trustworthy once lambda clears the
    # slow-convergence region near zero
    assume(lo * math.sqrt(n / 2.0) >= 0.05)
    assert ks_pvalue(hi, n, n) <= ks_pvalue(lo, n, n) + 1e-12


def test_ks_test_identical_samples():
    r = ks_test([0.3, 0.4, 0.5], [0.3, 0.4, 0.5])
    assert r.d_statistic == 0.0
    assert r.p_value == 1.0
    assert (r.n1, r.n2) == (3, 3)


def test_ks_test_shifted_gaussians_significant(rng):
    a = rng.standard_normal(300)
    b = rng.standard_normal(300) + 2.0
    r = ks_test(a, b)
    assert r.p_value < 1e-10
    assert r.d_statistic > 0.5
