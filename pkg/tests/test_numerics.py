import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from lpci.errors import DimensionMismatch, DomainError, EmptyInput, NotPsd
from lpci.numerics import (
    aupc,
    child_seed,
    chi2_cdf,
    chi2_quantile,
    chi2_sf,
    derive_child,
    inv_sqrt_psd,
    ks_against_cdf,
    ks_chi2,
    ks_uniform,
    lp_null_quantile,
    lp_null_sample,
    make_rng,
    regularized_lower_gamma,
    regularized_upper_gamma,
    sample_mvn,
)


# --- random streams --------------------------------------------------------
def test_streams_are_reproducible():
    a = derive_child(7, 1, 2).standard_normal(5)
    b = derive_child(7, 1, 2).standard_normal(5)
    np.testing.assert_array_equal(a, b)


def test_distinct_indices_give_distinct_streams():
    a = derive_child(7, 0).standard_normal(5)
    b = derive_child(7, 1).standard_normal(5)
    c = make_rng(7).standard_normal(5)
    assert not np.allclose(a, b)
    assert not np.allclose(a, c)


def test_child_seed_is_stable_64_bit():
    s = child_seed(3, 4)
    assert s == child_seed(3, 4)
    assert 0 <= s < 2**64
    assert s != child_seed(3, 5)


def test_negative_seed_rejected():
    with pytest.raises(DomainError):
        make_rng(-1)


# --- inv_sqrt_psd ----------------------------------------------------------
def test_inv_sqrt_identity():
    np.testing.assert_allclose(inv_sqrt_psd(np.eye(3)), np.eye(3), atol=1e-14)


def test_inv_sqrt_diagonal_with_ridge():
    np.testing.assert_allclose(inv_sqrt_psd(np.diag([3.0, 8.0]), 1.0), np.diag([0.5, 1 / 3]), atol=1e-14)


def test_inv_sqrt_round_trip_random_psd(rng):
    low = np.tril(rng.standard_normal((4, 4)))
    m = low @ low.T
    a = inv_sqrt_psd(m, 1e-8)
    assert np.max(np.abs(a @ (m + 1e-8 * np.eye(4)) @ a - np.eye(4))) < 1e-8


@given(st.integers(1, 6), st.integers(0, 10_000), st.floats(1e-6, 1.0))
def test_inv_sqrt_round_trip_property(d, seed, ridge):
    g = np.random.default_rng(seed)
    b = g.standard_normal((d, d))
    m = b @ b.T
    a = inv_sqrt_psd(m, ridge)
    np.testing.assert_allclose(a, a.T, atol=1e-10)
    reg = m + ridge * np.eye(d)
    scale = np.linalg.cond(reg)
    assert np.max(np.abs(a @ reg @ a - np.eye(d))) < 1e-12 * max(scale, 1.0) + 1e-9


def test_inv_sqrt_rejects_indefinite():
    with pytest.raises(NotPsd):
        inv_sqrt_psd(np.diag([1.0, -0.5]))


def test_inv_sqrt_rejects_singular_without_ridge():
    with pytest.raises(NotPsd):
        inv_sqrt_psd(np.zeros((2, 2)))


def test_inv_sqrt_rejects_non_square():
    with pytest.raises(DimensionMismatch):
        inv_sqrt_psd(np.ones((2, 3)))


# --- incomplete gamma and chi-square --------------------------------------
@given(st.floats(0.5, 40.0), st.floats(0.0, 120.0))
def test_incomplete_gamma_matches_scipy(a, x):
    from scipy.special import gammainc, gammaincc

    assert regularized_lower_gamma(a, x) == pytest.approx(gammainc(a, x), abs=1e-12)
    assert regularized_upper_gamma(a, x) == pytest.approx(gammaincc(a, x), abs=1e-12)


def test_chi2_two_dof_closed_forms():
    assert chi2_quantile(2, 0.95) == pytest.approx(-2 * math.log(0.05), abs=1e-10)
    assert chi2_quantile(2, 0.95) == pytest.approx(5.991464547, abs=1e-9)
    assert chi2_quantile(2, 0.5) == pytest.approx(1.386294361, abs=1e-9)


def test_chi2_five_dof_quantile():
    assert chi2_quantile(5, 0.95) == pytest.approx(11.0705, abs=1e-3)
    assert chi2_quantile(5, 0.95) == pytest.approx(stats.chi2.ppf(0.95, 5), abs=1e-9)


@given(st.integers(1, 30), st.floats(1e-6, 1 - 1e-6))
def test_chi2_quantile_cdf_round_trip(dof, prob):
    q = chi2_quantile(dof, prob)
    assert chi2_cdf(q, dof) == pytest.approx(prob, abs=1e-8)


@given(st.integers(1, 30), st.floats(0.0, 200.0))
def test_chi2_cdf_and_sf_sum_to_one(dof, x):
    assert chi2_cdf(x, dof) + chi2_sf(x, dof) == pytest.approx(1.0, abs=1e-12)
    assert chi2_sf(x, dof) == pytest.approx(stats.chi2.sf(x, dof), abs=1e-12)


@pytest.mark.parametrize("prob", [0.0, 1.0, -0.1, 1.5])
def test_chi2_quantile_domain(prob):
    with pytest.raises(DomainError):
        chi2_quantile(3, prob)


# --- lp null law -----------------------------------------------------------
def test_lp_null_p2_is_exact_chi2():
    assert lp_null_quantile(2, 5, 0.95, 10, make_rng(0)) == chi2_quantile(5, 0.95)


def test_lp_null_p1_single_location_is_half_normal():
    assert lp_null_quantile(1, 1, 0.95, 200_000, make_rng(1)) == pytest.approx(1.95996, abs=0.02)


def test_lp_null_p1_two_locations_median():
    oracle = np.median(np.abs(make_rng(99).standard_normal((10_000_000, 2))).sum(axis=1))
    assert lp_null_quantile(1, 2, 0.5, 200_000, make_rng(2)) == pytest.approx(oracle, abs=0.02)


def test_lp_null_sample_p3_matches_moment():
    draws = lp_null_sample(3, 2, 200_000, make_rng(3))
    # E|Z|^3 = 2 sqrt(2/pi)
    assert draws.mean() == pytest.approx(2 * 2 * math.sqrt(2 / math.pi), rel=0.02)


def test_lp_null_rejects_bad_prob():
    with pytest.raises(DomainError):
        lp_null_quantile(1, 2, 1.0, 10, make_rng(0))


# --- sample_mvn ------------------------------------------------------------
def test_sample_mvn_zero_covariance():
    out = sample_mvn([1.0, 2.0], np.zeros((2, 2)), 3, make_rng(0))
    np.testing.assert_array_equal(out, np.tile([1.0, 2.0], (3, 1)))


def test_sample_mvn_identity_moments():
    out = sample_mvn(np.zeros(2), np.eye(2), 100_000, make_rng(1))
    assert np.all(np.abs(out.mean(axis=0)) < 0.02)
    assert np.all(np.abs(np.cov(out, rowvar=False) - np.eye(2)) < 0.02)


def test_sample_mvn_scalar_variance():
    out = sample_mvn([0.0], [[4.0]], 100_000, make_rng(2))
    assert 3.9 <= out.var() <= 4.1


def test_sample_mvn_rejects_indefinite():
    with pytest.raises(NotPsd):
        sample_mvn([0.0, 0.0], np.diag([1.0, -1.0]), 2, make_rng(0))


# --- KS and AUPC -----------------------------------------------------------
def test_ks_single_point():
    assert ks_uniform([0.5]) == pytest.approx(0.5)


def test_ks_three_points():
    assert ks_uniform([0.25, 0.5, 0.75]) == pytest.approx(0.25)


def test_ks_evenly_spaced():
    assert ks_uniform([i / 10 for i in range(1, 10)]) == pytest.approx(0.1)


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=50))
def test_ks_matches_scipy(values):
    assert ks_uniform(values) == pytest.approx(stats.kstest(values, "uniform").statistic, abs=1e-12)


def test_ks_uniform_calibration():
    g = make_rng(5)
    n = 200
    exceed = sum(ks_uniform(g.random(n)) > 1.628 / math.sqrt(n) for _ in range(1000))
    assert exceed < 20


def test_ks_chi2_against_scipy(rng):
    values = rng.chisquare(5, 300)
    assert ks_chi2(values, 5) == pytest.approx(stats.kstest(values, "chi2", args=(5,)).statistic, abs=1e-10)


def test_ks_against_cdf_rejects_empty():
    with pytest.raises(EmptyInput):
        ks_against_cdf([], lambda t: t)


def test_aupc_oracles():
    assert aupc([0.0, 0.0]) == 1.0
    assert aupc([1.0, 1.0]) == 0.0
    assert aupc([0.25, 0.75]) == pytest.approx(0.5)


def test_aupc_piecewise_integration(rng):
    pv = rng.random(17)
    grid = np.linspace(0, 1, 200_001)
    ecdf = np.searchsorted(np.sort(pv), grid, side="right") / pv.size
    assert aupc(pv) == pytest.approx(np.trapezoid(ecdf, grid), abs=1e-4)


def test_summaries_reject_bad_input():
    with pytest.raises(EmptyInput):
        aupc([])
    with pytest.raises(DomainError):
        ks_uniform([1.5])
