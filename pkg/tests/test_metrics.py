import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ortho_group

from pgmfilter.gaussmix import GaussianMixture
from pgmfilter.metrics import (
    SW_BOUND_99,
    MetricRecord,
    chi2_quantile,
    chi2_upper_bound,
    consistency_fraction,
    evaluate,
    likelihood_metric,
    log_v2sigma,
    mode_indicator,
    most_likely_mode,
    nees,
    nees_mixture,
    rmse_series,
    sw_statistic,
    v2sigma,
    weight_consistency_terms,
)
from pgmfilter.errors import CholeskyFailure, InvalidArgument

from oracles import simplex_grid, weight_error_moments_enumerated


def test_rmse_zero_error():
    X = np.random.default_rng(0).standard_normal((3, 5, 2))
    series, avg = rmse_series(X, X)
    assert np.all(series == 0) and avg == 0


def test_rmse_single_run_hand_values():
    series, avg = rmse_series([[[0.0], [0.0]]], [[[3.0], [4.0]]])
    np.testing.assert_allclose(series, [3.0, 4.0])
    assert avg == pytest.approx(3.5)


def test_rmse_two_runs_one_step():
    series, _ = rmse_series([[[0.0]], [[0.0]]], [[[3.0]], [[4.0]]])
    assert series[0] == pytest.approx(math.sqrt(12.5))
    assert series[0] == pytest.approx(3.5355, abs=1e-4)


def test_rmse_shape_mismatch():
    with pytest.raises(InvalidArgument):
        rmse_series(np.zeros((2, 3)), np.zeros((2, 4)))


def test_nees_values():
    assert nees([1.0, 2.0], [1.0, 2.0], np.eye(2)) == 0.0
    assert nees([2.0], [0.0], [[4.0]]) == pytest.approx(1.0)
    with pytest.raises(CholeskyFailure):
        nees([1.0], [0.0], [[0.0]])


def test_nees_mixture_picks_mode_at_truth():
    g = GaussianMixture([0.9, 0.1], [[-5.0, 0.0], [3.0, 3.0]], [np.eye(2), 1e-4 * np.eye(2)])
    assert most_likely_mode(g, [3.0, 3.0]) == 1
    assert nees_mixture([3.0, 3.0], g) == 0.0
    np.testing.assert_array_equal(mode_indicator(g, [3.0, 3.0]), [0.0, 1.0])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 4))
def test_nees_mixture_reduces_to_single(seed, d):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((d, d))
    P = A @ A.T + 0.1 * np.eye(d)
    mu, x = rng.standard_normal(d), rng.standard_normal(d)
    assert nees_mixture(x, GaussianMixture.single(mu, P)) == pytest.approx(nees(x, mu, P), rel=1e-12)


@pytest.mark.parametrize("d,expected", [(1, 1.5231), (3, 3.8642), (40, 43.0013)])
def test_chi2_bound_printed_values(d, expected):
    assert chi2_upper_bound(d, 50, 0.99) == pytest.approx(expected, abs=1e-3)


def test_chi2_quantile_against_known_values():
    # classical table entries
    assert chi2_quantile(0.95, 1) == pytest.approx(3.841459, abs=1e-6)
    assert chi2_quantile(0.99, 10) == pytest.approx(23.209251, abs=1e-6)
    with pytest.raises(InvalidArgument):
        chi2_quantile(1.0, 3)


def test_chi2_bound_monotone():
    assert chi2_upper_bound(3, 50, 0.9) < chi2_upper_bound(3, 50, 0.95) < chi2_upper_bound(3, 50, 0.99)
    vals = [chi2_upper_bound(3, n, 0.99) for n in (50, 500, 5000)]
    assert vals[0] > vals[1] > vals[2] > 3


def test_weight_terms_single_mode():
    eps2, mean, var = weight_consistency_terms([1.0], [1.0])
    assert (eps2, mean, var) == (0.0, 0.0, 0.0)


def test_weight_terms_hand_values():
    assert weight_consistency_terms([0.5, 0.5], [1.0, 0.0])[1] == pytest.approx(0.5)
    assert weight_consistency_terms([0.9, 0.1], [1.0, 0.0])[1] == pytest.approx(0.18)


def test_weight_terms_variance_monte_carlo():
    w = np.array([0.9, 0.1])
    _, mean, var = weight_consistency_terms(w, [1.0, 0.0])
    rng = np.random.default_rng(0)
    n = 1_000_000
    idx = rng.choice(2, size=n, p=w)
    eps2 = np.where(idx == 0, 2 * 0.1**2, 2 * 0.9**2)
    mc_var = eps2.var(ddof=1)
    # standard error of a sample variance: sqrt((mu4 - sigma^4) / n)
    mu4 = np.mean((eps2 - eps2.mean()) ** 4)
    se = math.sqrt((mu4 - mc_var**2) / n)
    assert abs(mc_var - var) < 3 * se
    assert abs(eps2.mean() - mean) < 3 * eps2.std() / math.sqrt(n)


@pytest.mark.parametrize("M", [2, 3, 4, 5])
def test_weight_terms_match_enumeration_on_grid(M):
    for w in simplex_grid(M, 0.1):
        _, mean, var = weight_consistency_terms(w, np.eye(M)[0])
        em, ev = weight_error_moments_enumerated(w)
        assert mean == pytest.approx(em, abs=1e-12)
        assert var == pytest.approx(ev, abs=1e-12)


def test_sw_zero_when_errors_equal_means():
    terms = [(0.5, 0.5, 0.2), (0.18, 0.18, 0.1)]
    assert sw_statistic(terms)[0] == 0.0


def test_sw_single_run():
    val, excluded = sw_statistic([(0.9, 0.5, 0.04)])
    assert val == pytest.approx(0.4 / 0.2)
    assert excluded == 0


def test_sw_absent_when_undefined():
    assert sw_statistic([None, (0.0, 0.0, 0.0)]) == (None, 2)


def synthetic_sw(rng, n_runs):
    terms = []
    for _ in range(n_runs):
        M = int(rng.integers(2, 5))
        w = rng.dirichlet(np.ones(M))
        v = np.zeros(M)
        v[min(int(np.searchsorted(np.cumsum(w), rng.random())), M - 1)] = 1.0
        terms.append(weight_consistency_terms(w, v))
    return sw_statistic(terms)[0]


def test_sw_calibration():
    # 2000 trials: standard errors are about 0.022 (mean) and 0.032 (variance)
    rng = np.random.default_rng(1)
    vals = np.array([synthetic_sw(rng, 50) for _ in range(2000)])
    assert abs(vals.mean()) < 0.08
    assert 0.88 <= vals.var() <= 1.12


def test_sw_bound_is_two_sided_99():
    from scipy.stats import norm

    assert SW_BOUND_99 == pytest.approx(norm.ppf(0.995), abs=1e-12)


def test_likelihood_standard_normal_at_truth():
    for d in (1, 3):
        val, bad = likelihood_metric(GaussianMixture.single(np.ones(d), np.eye(d)), np.ones(d))
        assert val == pytest.approx((2 * math.pi) ** (-d / 2))
        assert not bad


def test_likelihood_degenerate_ensemble_flagged():
    val, bad = likelihood_metric(np.ones((20, 2)), np.ones(2))
    assert bad and np.isfinite(val)


def test_likelihood_two_mode_hand_sum():
    g = GaussianMixture([0.25, 0.75], [[0.0], [2.0]], [[[1.0]], [[4.0]]])
    x = 1.0
    hand = 0.25 * math.exp(-0.5) / math.sqrt(2 * math.pi) + 0.75 * math.exp(-0.5 / 4) / math.sqrt(8 * math.pi)
    assert likelihood_metric(g, [x])[0] == pytest.approx(hand, rel=1e-12)


def test_v2sigma_values():
    assert v2sigma(GaussianMixture.single(np.zeros(3), np.eye(3))) == pytest.approx(8.0)
    assert v2sigma(GaussianMixture.single([0.0], [[0.3]])) == pytest.approx(0.6)
    g = GaussianMixture([0.5, 0.5], [[0.0, 0.0], [1.0, 1.0]], [np.eye(2), np.eye(2)])
    assert v2sigma(g) == pytest.approx(8.0)
    assert math.exp(log_v2sigma(g)) == pytest.approx(8.0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 4), M=st.integers(1, 3))
def test_v2sigma_rotation_invariant(seed, d, M):
    rng = np.random.default_rng(seed)
    covs = []
    for _ in range(M):
        A = rng.standard_normal((d, d))
        covs.append(A @ A.T + 0.1 * np.eye(d))
    U = ortho_group.rvs(d, random_state=rng)
    g1 = GaussianMixture(np.ones(M), rng.standard_normal((M, d)), covs)
    g2 = GaussianMixture(np.ones(M), g1.means, [U @ P @ U.T for P in covs])
    assert v2sigma(g2) == pytest.approx(v2sigma(g1), rel=1e-9)


def test_consistency_fraction_values():
    assert consistency_fraction([0.1, 0.2], 1.0) == 1.0
    assert consistency_fraction([0.5, 2.0, 0.5, 2.0], 1.0) == 0.5
    assert consistency_fraction([1.0, 2.0, 3.0], 2.5) == pytest.approx(2 / 3)


def test_evaluate_record_fields():
    g = GaussianMixture([0.7, 0.3], [[1.0], [-1.0]], [[[1.0]], [[1.0]]])
    rec = evaluate("F", 3, 10, g, [1.0])
    assert isinstance(rec, MetricRecord)
    assert rec.beta == 0.0
    assert rec.rmse_sq_contrib == pytest.approx((1.0 - g.mean()[0]) ** 2)
    assert rec.sw_mean == pytest.approx(2 * 0.7 * 0.3)
    assert rec.v2sigma == pytest.approx(4.0)
    single = evaluate("F", 0, 1, GaussianMixture.single([0.0], [[1.0]]), [0.5])
    assert single.sw_var is None
    assert MetricRecord.columns()[:3] == ["filter", "run_index", "step"]
