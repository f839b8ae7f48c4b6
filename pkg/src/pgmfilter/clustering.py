"""k-means partitioning of particle ensembles and GMM recovery from clusters."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import CholeskyFailure, InvalidArgument
from .gaussmix import GaussianMixture, as_particles, cholesky, symmetrize

log = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 100
DEFAULT_RESTARTS = 5
_SINGLETON_SCALE = 1e-2


@dataclass(frozen=True, eq=False)
class ClusterAssignment:
    """Hard partition of an ensemble into ``M`` non-empty clusters."""

    labels: np.ndarray
    centroids: np.ndarray
    wcss: float
    wcss_history: list[float] = field(default_factory=list)
    n_iter: int = 0

    @property
    def M(self) -> int:
        return self.centroids.shape[0]

    def counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.M)


def _sqdist(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d2 = np.sum(X * X, axis=1)[:, None] - 2.0 * X @ C.T + np.sum(C * C, axis=1)[None, :]
    return np.maximum(d2, 0.0)


def _wcss(X: np.ndarray, labels: np.ndarray, C: np.ndarray) -> float:
    diff = X - C[labels]
    return float(np.sum(diff * diff))


def _kmeans_pp(X: np.ndarray, M: int, rng: np.random.Generator) -> np.ndarray:
    N = X.shape[0]
    centers = [X[rng.integers(N)]]
    closest = np.sum((X - centers[0]) ** 2, axis=1)
    for _ in range(1, M):
        total = closest.sum()
        if total <= 0.0:
            # every point coincides with a chosen center
            idx = rng.integers(N)
        else:
            idx = rng.choice(N, p=closest / total)
        centers.append(X[idx])
        closest = np.minimum(closest, np.sum((X - X[idx]) ** 2, axis=1))
    return np.array(centers)


def _fill_empty(X: np.ndarray, labels: np.ndarray, d2: np.ndarray, M: int) -> np.ndarray:
    """Give every empty cluster the point farthest from its current centroid."""
    labels = labels.copy()
    counts = np.bincount(labels, minlength=M)
    own = d2[np.arange(X.shape[0]), labels].copy()
    for j in np.flatnonzero(counts == 0):
        donors = counts[labels] > 1
        cand = np.where(donors, own, -np.inf)
        far = int(np.argmax(cand))
        counts[labels[far]] -= 1
        labels[far] = j
        counts[j] = 1
        own[far] = 0.0
    return labels


def _lloyd(X: np.ndarray, C: np.ndarray, max_iter: int) -> ClusterAssignment:
    M = C.shape[0]
    labels = None
    history: list[float] = []
    it = 0
    for it in range(1, max_iter + 1):
        d2 = _sqdist(X, C)
        new = np.argmin(d2, axis=1)
        if np.bincount(new, minlength=M).min() == 0:
            new = _fill_empty(X, new, d2, M)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        counts = np.bincount(labels, minlength=M)
        C = np.zeros_like(C)
        np.add.at(C, labels, X)
        C /= counts[:, None]
        history.append(_wcss(X, labels, C))
    return ClusterAssignment(labels, C, history[-1], history, it)


def kmeans(
    points,
    M: int,
    rng: np.random.Generator,
    max_iter: int = DEFAULT_MAX_ITER,
    restarts: int = DEFAULT_RESTARTS,
) -> ClusterAssignment:
    """Lloyd's k-means with k-means++ seeding, best of ``restarts`` by WCSS.

    Restarts run in order and ties keep the earliest restart, so the result
    depends only on the state of ``rng``.
    """
    X = as_particles(points)
    N = X.shape[0]
    if not 1 <= M <= N:
        raise InvalidArgument(f"cluster count M={M} must satisfy 1 <= M <= N_p={N}")
    if M == 1:
        C = X.mean(axis=0, keepdims=True)
        labels = np.zeros(N, dtype=int)
        w = _wcss(X, labels, C)
        return ClusterAssignment(labels, C, w, [w], 1)
    best = None
    for _ in range(max(1, restarts)):
        fit = _lloyd(X, _kmeans_pp(X, M, rng), max_iter)
        if best is None or fit.wcss < best.wcss:
            best = fit
    return best


def _ridge(C: np.ndarray) -> np.ndarray:
    d = C.shape[0]
    eps = max(1e-8, 1e-6 * np.trace(C) / d)
    for _ in range(12):
        R = C + eps * np.eye(d)
        try:
            cholesky(R)
            return R
        except CholeskyFailure:
            eps *= 10.0
    raise CholeskyFailure(d, 0, "regularized cluster covariance")


def cluster_moments(points, assignment: ClusterAssignment) -> GaussianMixture:
    """Weights, means and Bessel-corrected covariances of each cluster.

    Tiny clusters are regularized instead of producing NaNs: a singleton gets
    ``1e-2`` times the whole-ensemble covariance, and any cluster with
    ``n_i <= d`` or a non-SPD sample covariance gets a ridge
    ``max(1e-8, 1e-6 trace(C)/d) I``.
    """
    X = as_particles(points)
    N, d = X.shape
    labels = np.asarray(assignment.labels)
    if labels.shape != (N,):
        raise InvalidArgument(f"assignment has {labels.shape[0]} labels for {N} points")
    M = assignment.M
    counts = np.bincount(labels, minlength=M)
    if counts.min() == 0:
        raise InvalidArgument("assignment contains an empty cluster")
    weights = counts / N
    means = np.zeros((M, d))
    covs = np.zeros((M, d, d))
    global_cov = None
    for i in range(M):
        Xi = X[labels == i]
        n = Xi.shape[0]
        mu = Xi.mean(axis=0)
        means[i] = mu
        if n == 1:
            if global_cov is None:
                global_cov = np.atleast_2d(np.cov(X, rowvar=False)) if N > 1 else np.zeros((d, d))
            covs[i] = _ridge(_SINGLETON_SCALE * global_cov)
            log.debug("cluster %d is a singleton; using scaled ensemble covariance", i)
            continue
        dev = Xi - mu
        C = symmetrize(dev.T @ dev / (n - 1))
        if n <= d:
            covs[i] = _ridge(C)
            log.debug("cluster %d has %d <= d=%d points; ridge added", i, n, d)
            continue
        try:
            cholesky(C)
            covs[i] = C
        except CholeskyFailure:
            covs[i] = _ridge(C)
            log.debug("cluster %d covariance not SPD; ridge added", i)
    return GaussianMixture(weights, means, covs)


def likelihood_agreement(gmm: GaussianMixture, points) -> float:
    """Sum of the mixture density over all particles."""
    X = as_particles(points, gmm.dim)
    return float(np.sum(gmm.pdf(X)))


@dataclass(frozen=True, eq=False)
class ClusterFit:
    """Outcome of the naive model selection."""

    gmm: GaussianMixture
    assignment: ClusterAssignment
    score: float
    scores: dict[int, float]

    @property
    def M(self) -> int:
        return self.gmm.n_components


def fit_naive(
    points,
    M_max: int,
    rng: np.random.Generator,
    max_iter: int = DEFAULT_MAX_ITER,
    restarts: int = DEFAULT_RESTARTS,
) -> ClusterFit:
    """Cluster at ``M_max, M_max - 1, ..., 1`` and keep the best likelihood agreement.

    Every ``M`` is clustered from scratch.  A later (smaller) model replaces
    the incumbent when its score is greater than *or equal to* it.
    """
    if M_max < 1:
        raise InvalidArgument(f"M_max must be >= 1, got {M_max}")
    X = as_particles(points)
    M = min(M_max, X.shape[0])
    best = None
    scores = {}
    while M >= 1:
        assignment = kmeans(X, M, rng, max_iter=max_iter, restarts=restarts)
        gmm = cluster_moments(X, assignment)
        score = likelihood_agreement(gmm, X)
        scores[M] = score
        if best is None or score >= best.score:
            best = ClusterFit(gmm, assignment, score, scores)
        M -= 1
    return best


def select_model(points, M_max: int, rng: np.random.Generator, **kwargs) -> GaussianMixture:
    """GMM with at most ``M_max`` modes chosen by the likelihood agreement measure."""
    return fit_naive(points, M_max, rng, **kwargs).gmm
