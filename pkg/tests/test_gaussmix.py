import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pgmfilter import (
    CholeskyFailure,
    DimensionError,
    GaussianComponent,
    GaussianMixture,
    InvalidArgument,
    gaussian_logpdf,
    merge_components,
    merge_pass,
    mixture_pdf,
    sample_mixture,
    similarity,
)
from pgmfilter.gaussmix import pairwise_similarity, repair_cov

from oracles import (
    mixture_mass_quadrature_1d,
    mixture_moments_quadrature_1d,
    similarity_quadrature_1d,
)


def random_spd(rng, d, scale=1.0):
    A = rng.standard_normal((d, d))
    return scale * (A @ A.T / d + 0.2 * np.eye(d))


def random_mixture(rng, d, M):
    w = rng.dirichlet(np.ones(M))
    means = rng.normal(0.0, 2.0, size=(M, d))
    covs = np.array([random_spd(rng, d, rng.uniform(0.2, 2.0)) for _ in range(M)])
    return GaussianMixture(w, means, covs)


# --- densities -----------------------------------------------------------------------


def test_logpdf_standard_normal_at_mean():
    assert gaussian_logpdf(0.0, 0.0, 1.0) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-12)
    assert gaussian_logpdf(0.0, 0.0, 1.0) == pytest.approx(-0.91894, abs=1e-5)


@pytest.mark.parametrize("d", [1, 2, 5, 40])
def test_logpdf_at_mean_identity(d):
    mu = np.arange(d, dtype=float)
    assert gaussian_logpdf(mu, mu, np.eye(d)) == pytest.approx(-0.5 * d * math.log(2 * math.pi), rel=1e-12)


def test_pdf_hand_value():
    val = math.exp(gaussian_logpdf(2.0, 0.0, 4.0))
    assert val == pytest.approx((2 * math.pi * 4) ** -0.5 * math.exp(-0.5), rel=1e-12)
    assert val == pytest.approx(0.120985, abs=1e-6)


def test_logpdf_batch_matches_pointwise():
    rng = np.random.default_rng(1)
    P = random_spd(rng, 3)
    X = rng.standard_normal((7, 3))
    batch = gaussian_logpdf(X, np.zeros(3), P)
    assert batch.shape == (7,)
    for i in range(7):
        assert batch[i] == pytest.approx(gaussian_logpdf(X[i], np.zeros(3), P), rel=1e-12)


def test_logpdf_high_dimension_does_not_underflow():
    d = 40
    lp = gaussian_logpdf(np.full(d, 3.0), np.zeros(d), 1e-3 * np.eye(d))
    assert np.isfinite(lp) and lp < -1e5


def test_cholesky_failure_reports_dim_and_pivot():
    P = np.diag([1.0, 2.0, -1.0])
    with pytest.raises(CholeskyFailure) as exc:
        gaussian_logpdf(np.zeros(3), np.zeros(3), P)
    assert exc.value.dim == 3
    assert exc.value.pivot == 2


def test_mixture_pdf_single_component_equals_gaussian():
    g = GaussianMixture.single([1.0, -1.0], [[2.0, 0.3], [0.3, 1.0]])
    x = np.array([0.4, 0.1])
    assert mixture_pdf(g, x) == pytest.approx(math.exp(gaussian_logpdf(x, g.means[0], g.covs[0])), rel=1e-12)


def test_mixture_pdf_symmetric_pair():
    g = GaussianMixture([0.5, 0.5], [[-1.0], [1.0]], [[[1.0]], [[1.0]]])
    assert mixture_pdf(g, 0.0) == pytest.approx(math.exp(-0.5) / math.sqrt(2 * math.pi), rel=1e-12)
    assert mixture_pdf(g, 0.0) == pytest.approx(0.24197, abs=1e-5)


def test_mixture_pdf_zero_weight_contributes_nothing():
    g = GaussianMixture([1.0, 0.0], [[0.0], [0.5]], [[[1.0]], [[1.0]]])
    assert mixture_pdf(g, 0.3) == math.exp(gaussian_logpdf(0.3, 0.0, 1.0))


def test_mixture_pdf_dimension_mismatch():
    g = GaussianMixture.single([0.0, 0.0], np.eye(2))
    with pytest.raises(DimensionError):
        mixture_pdf(g, np.zeros(3))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), M=st.integers(1, 4))
def test_mixture_pdf_integrates_to_one(seed, M):
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(M))
    mu = rng.normal(0, 3, M)
    var = rng.uniform(0.05, 4.0, M)
    assert mixture_mass_quadrature_1d(w, mu, var) == pytest.approx(1.0, abs=1e-6)


# --- construction invariants ---------------------------------------------------------


def test_weights_renormalized():
    g = GaussianMixture([2.0, 6.0], [[0.0], [1.0]], [[[1.0]], [[1.0]]])
    assert g.weights.sum() == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(g.weights, [0.25, 0.75])


def test_rejects_tiny_weight_sum():
    with pytest.raises(InvalidArgument):
        GaussianMixture([1e-14, 1e-14], [[0.0], [1.0]], [[[1.0]], [[1.0]]])


def test_rejects_negative_weight():
    with pytest.raises(InvalidArgument):
        GaussianMixture([1.0, -0.1], [[0.0], [1.0]], [[[1.0]], [[1.0]]])


def test_rejects_non_spd():
    with pytest.raises(CholeskyFailure):
        GaussianMixture.single([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])


def test_component_rejects_asymmetric():
    with pytest.raises(InvalidArgument):
        GaussianComponent(1.0, [0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]])


def test_components_share_dimension():
    with pytest.raises(DimensionError):
        GaussianMixture.from_components([GaussianComponent(1, [0.0], [[1.0]]), GaussianComponent(1, [0.0, 0.0], np.eye(2))])


def test_empty_mixture_rejected():
    with pytest.raises(InvalidArgument):
        GaussianMixture.from_components([])


def test_json_round_trip():
    g = random_mixture(np.random.default_rng(3), 3, 3)
    h = GaussianMixture.from_json(g.to_json())
    np.testing.assert_array_equal(g.weights, h.weights)
    np.testing.assert_array_equal(g.means, h.means)
    np.testing.assert_array_equal(g.covs, h.covs)


def test_repair_cov_gives_spd():
    P = np.array([[1.0, 1.0], [1.0, 1.0 - 1e-17]])
    R = repair_cov(P)
    assert np.linalg.eigvalsh(R).min() > 0
    np.testing.assert_allclose(R, P, atol=1e-9)


# --- sampling ------------------------------------------------------------------------


def test_sample_moments_standard_normal():
    X = sample_mixture(GaussianMixture.single([0.0, 0.0], np.eye(2)), 100_000, np.random.default_rng(0))
    assert np.all(np.abs(X.mean(axis=0)) < 0.02)
    assert np.all(np.abs(np.cov(X, rowvar=False) - np.eye(2)) < 0.05)


def test_sample_zero_weight_component_never_drawn():
    g = GaussianMixture([1.0, 0.0], [[-100.0], [100.0]], [[[1.0]], [[1.0]]])
    X = sample_mixture(g, 5000, np.random.default_rng(1))
    assert np.all(X < 0)


def test_sample_deterministic():
    g = random_mixture(np.random.default_rng(2), 2, 3)
    a = sample_mixture(g, 100, np.random.default_rng(42))
    b = sample_mixture(g, 100, np.random.default_rng(42))
    np.testing.assert_array_equal(a, b)


def test_sample_rejects_nonpositive_count():
    with pytest.raises(InvalidArgument):
        sample_mixture(GaussianMixture.single([0.0], [[1.0]]), 0, np.random.default_rng(0))


def test_sample_mean_error_shrinks_as_root_n():
    g = GaussianMixture([0.3, 0.7], [[-2.0], [1.0]], [[[0.5]], [[2.0]]])
    true_mean = float(g.mean()[0])
    errs = []
    for n in (1_000, 10_000, 100_000):
        # average over repetitions so the ratio test is not at the mercy of one draw
        e = [abs(sample_mixture(g, n, np.random.default_rng([n, r])).mean() - true_mean) for r in range(40)]
        errs.append(np.sqrt(np.mean(np.square(e))))
    for a, b in zip(errs, errs[1:]):
        assert a / b == pytest.approx(math.sqrt(10), rel=1.0)  # within a factor 2


# --- similarity ----------------------------------------------------------------------


def test_similarity_identical_is_zero():
    c = GaussianComponent(0.3, [1.0, 2.0], [[1.0, 0.2], [0.2, 0.5]])
    assert similarity(c, c) == pytest.approx(0.0, abs=1e-14)


def test_similarity_far_apart_is_one():
    assert similarity(GaussianComponent(1, [0.0], [[1.0]]), GaussianComponent(1, [100.0], [[1.0]])) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize(
    "mi,vi,mj,vj",
    [(0.0, 1.0, 0.0, 1.0), (0.0, 1.0, 0.5, 1.0), (0.0, 1.0, 1.0, 3.0), (-2.0, 0.3, 1.5, 0.8), (0.0, 0.01, 0.05, 0.02)],
)
def test_similarity_matches_quadrature(mi, vi, mj, vj):
    closed = similarity(GaussianComponent(1, [mi], [[vi]]), GaussianComponent(1, [mj], [[vj]]))
    assert closed == pytest.approx(similarity_quadrature_1d(mi, vi, mj, vj), abs=1e-8)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.sampled_from([1, 2, 5]), M=st.integers(2, 5))
def test_similarity_symmetric_bounded(seed, d, M):
    D = pairwise_similarity(random_mixture(np.random.default_rng(seed), d, M))
    np.testing.assert_array_equal(D, D.T)
    assert np.all(np.diag(D) == 0)
    assert np.all((D >= 0) & (D <= 1))


def test_similarity_dimension_mismatch():
    with pytest.raises(DimensionError):
        similarity(GaussianComponent(1, [0.0], [[1.0]]), GaussianComponent(1, [0.0, 0.0], np.eye(2)))


# --- merging -------------------------------------------------------------------------


def test_merge_single_component_unchanged():
    g = random_mixture(np.random.default_rng(4), 2, 3)
    c = merge_components(g, [1])
    np.testing.assert_array_equal(c.mean, g.means[1])
    np.testing.assert_array_equal(c.cov, g.covs[1])
    assert c.weight == g.weights[1]


def test_merge_pair_hand_values():
    g = GaussianMixture([0.5, 0.5], [[-1.0], [1.0]], [[[1.0]], [[1.0]]])
    c = merge_components(g, [0, 1])
    assert c.weight == pytest.approx(1.0)
    assert c.mean[0] == pytest.approx(0.0, abs=1e-15)
    assert c.cov[0, 0] == pytest.approx(2.0, abs=1e-15)


def test_merge_matches_quadrature_moments():
    w, mu, var = [0.2, 0.5, 0.3], [-1.0, 0.5, 2.0], [0.4, 1.0, 0.3]
    g = GaussianMixture(w, np.array(mu)[:, None], np.array(var)[:, None, None])
    c = merge_components(g, [0, 1, 2])
    qm, qv = mixture_moments_quadrature_1d(w, mu, var)
    assert c.mean[0] == pytest.approx(qm, abs=1e-6)
    assert c.cov[0, 0] == pytest.approx(qv, abs=1e-6)


def test_merge_empty_or_invalid_indices():
    g = random_mixture(np.random.default_rng(5), 1, 3)
    with pytest.raises(InvalidArgument):
        merge_components(g, [])
    with pytest.raises(InvalidArgument):
        merge_components(g, [0, 0])
    with pytest.raises(InvalidArgument):
        merge_components(g, [3])


def test_merge_pass_noop_when_separated():
    g = GaussianMixture([0.2, 0.8], [[-10.0], [10.0]], [[[1.0]], [[1.0]]])
    out = merge_pass(g, 0.01)
    np.testing.assert_array_equal(out.weights, g.weights)
    np.testing.assert_array_equal(out.means, g.means)
    np.testing.assert_array_equal(out.covs, g.covs)


def test_merge_pass_identical_pair():
    g = GaussianMixture([0.3, 0.7], [[1.0], [1.0]], [[[2.0]], [[2.0]]])
    out = merge_pass(g, 0.01)
    assert out.n_components == 1
    assert out.weights[0] == pytest.approx(1.0)
    assert out.covs[0, 0, 0] == pytest.approx(2.0)


def test_merge_pass_transitive_chain():
    # adjacent pairs below tol, the outer pair above it
    step = 0.1
    g = GaussianMixture([1, 1, 1], [[0.0], [step], [2 * step]], [[[1.0]], [[1.0]], [[1.0]]])
    D = pairwise_similarity(g)
    tol = 0.5 * (D[0, 1] + D[0, 2])
    assert D[0, 1] < tol and D[1, 2] < tol and D[0, 2] >= tol
    out, groups = merge_pass(g, tol, return_groups=True)
    assert out.n_components == 1
    assert groups == [[0, 1, 2]]


def test_merge_pass_rejects_bad_tol():
    g = random_mixture(np.random.default_rng(6), 1, 2)
    with pytest.raises(InvalidArgument):
        merge_pass(g, 0.0)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.sampled_from([1, 2, 5]), M=st.integers(2, 6), tol=st.sampled_from([0.01, 0.1, 0.5]))
def test_merge_pass_preserves_moments(seed, d, M, tol):
    rng = np.random.default_rng(seed)
    g = random_mixture(rng, d, M)
    # duplicate-ish components so merges actually happen
    means = g.means.copy()
    means[1] = means[0] + 0.01 * rng.standard_normal(d)
    covs = g.covs.copy()
    covs[1] = covs[0]
    g = GaussianMixture(g.weights, means, covs)
    out = merge_pass(g, tol)
    assert out.weights.sum() == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(out.mean(), g.mean(), rtol=1e-9, atol=1e-9 * np.abs(g.mean()).max())
    np.testing.assert_allclose(out.cov(), g.cov(), rtol=1e-9, atol=1e-9 * np.abs(g.cov()).max())
    D = pairwise_similarity(out)
    iu = np.triu_indices(out.n_components, 1)
    assert np.all(D[iu] >= tol)
