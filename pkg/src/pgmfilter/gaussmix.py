"""Gaussian mixture densities: evaluation, sampling, similarity and merging.

Mixtures are stored as stacked arrays (``weights`` of shape ``(M,)``,
``means`` of shape ``(M, d)``, ``covs`` of shape ``(M, d, d)``) so the
filters can work on all components at once.  :class:`GaussianComponent`
is the per-mode view used by the single-component operations.

Particle ensembles are plain ``(N, d)`` float arrays throughout the package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import lapack, solve_triangular

from .errors import CholeskyFailure, DimensionError, InvalidArgument

LOG_2PI = math.log(2.0 * math.pi)
_SYM_RTOL = 1e-10
_MIN_WEIGHT_SUM = 1e-12


def symmetrize(P: np.ndarray) -> np.ndarray:
    """Return ``(P + P^T) / 2`` (over the last two axes)."""
    P = np.asarray(P, dtype=float)
    return 0.5 * (P + np.swapaxes(P, -1, -2))


def cholesky(P: np.ndarray, what: str = "covariance") -> np.ndarray:
    """Lower Cholesky factor of ``P``.

    Raises:
        CholeskyFailure: carrying the matrix dimension and the failing pivot.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    d = P.shape[0]
    if not np.all(np.isfinite(P)):
        raise CholeskyFailure(d, 0, what)
    L, info = lapack.dpotrf(P, lower=1, clean=1)
    if info != 0:
        raise CholeskyFailure(d, max(info - 1, 0), what)
    return L


def as_particles(points, dim: int | None = None) -> np.ndarray:
    """Coerce ``points`` into an ``(N, d)`` float array and validate it."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if dim in (None, 1) else X[None, :]
    if X.ndim != 2 or X.shape[0] < 1:
        raise DimensionError(f"expected a non-empty (N, d) particle array, got shape {X.shape}")
    if dim is not None and X.shape[1] != dim:
        raise DimensionError(f"particles have dimension {X.shape[1]}, expected {dim}")
    return X


def _as_batch(x, d: int) -> tuple[np.ndarray, bool]:
    """Reshape ``x`` to ``(N, d)``; flag whether it was a single point.

    For ``d == 1`` a 1-D array of length ``N > 1`` is read as ``N`` scalar points.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or (x.ndim == 1 and x.shape[0] == d):
        return x.reshape(1, d), True
    if x.ndim == 1 and d == 1:
        return x.reshape(-1, 1), False
    if x.ndim == 2 and x.shape[1] == d:
        return x, False
    raise DimensionError(f"points of shape {x.shape} do not match dimension {d}")


def _logpdf_chol(X: np.ndarray, mean: np.ndarray, L: np.ndarray) -> np.ndarray:
    d = L.shape[0]
    y = solve_triangular(L, (X - mean).T, lower=True, check_finite=False)
    # far-away points overflow to an infinite distance, i.e. zero density
    with np.errstate(over="ignore"):
        maha = np.sum(y * y, axis=0)
    half_logdet = np.sum(np.log(np.diag(L)))
    return -0.5 * (d * LOG_2PI + maha) - half_logdet


def gaussian_logpdf(x, mean, cov) -> float | np.ndarray:
    """Log of the Gaussian density ``N(x; mean, cov)``.

    ``x`` may be a single point ``(d,)`` or a batch ``(N, d)``; a batch returns
    an ``(N,)`` array.
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    d = mean.shape[0]
    cov = np.asarray(cov, dtype=float).reshape(d, d)
    X, single = _as_batch(x, d)
    out = _logpdf_chol(X, mean, cholesky(cov))
    return float(out[0]) if single else out


def gaussian_pdf(x, mean, cov) -> float | np.ndarray:
    return np.exp(gaussian_logpdf(x, mean, cov))


def repair_cov(P: np.ndarray, floor: float = 1e-10) -> np.ndarray:
    """Symmetrize and floor the eigenvalues of ``P`` at ``floor``.

    If rounding still defeats the factorization (large, badly scaled
    matrices), the floor is raised relative to the largest eigenvalue until
    a Cholesky factor exists.
    """
    P = symmetrize(P)
    vals, vecs = np.linalg.eigh(P)
    top = max(float(np.abs(vals).max()), floor)
    while True:
        R = symmetrize((vecs * np.maximum(vals, floor)) @ vecs.T)
        try:
            cholesky(R)
            return R
        except CholeskyFailure:
            floor = max(10.0 * floor, 1e-15 * top)


@dataclass(frozen=True, eq=False)
class GaussianComponent:
    """One weighted Gaussian mode."""

    weight: float
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float)).copy()
        d = mean.shape[0]
        cov = np.asarray(self.cov, dtype=float)
        if cov.size != d * d:
            raise DimensionError(f"cov has {cov.size} entries, expected {d}x{d}")
        cov = cov.reshape(d, d).copy()
        _check_symmetric(cov)
        cholesky(cov)
        if not self.weight >= 0.0:
            raise InvalidArgument(f"component weight must be >= 0, got {self.weight}")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "weight", float(self.weight))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def logpdf(self, x):
        return gaussian_logpdf(x, self.mean, self.cov)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def with_weight(self, weight: float) -> "GaussianComponent":
        return GaussianComponent(weight, self.mean, self.cov)


def _check_symmetric(P: np.ndarray) -> None:
    scale = max(np.max(np.abs(P)), 1e-300)
    asym = np.max(np.abs(P - np.swapaxes(P, -1, -2)))
    if asym > _SYM_RTOL * scale:
        raise InvalidArgument(f"covariance is not symmetric (max asymmetry {asym:.3e})")


class GaussianMixture:
    """Normalized weighted sum of Gaussians sharing one dimension.

    Weights are renormalized on construction and covariances symmetrized;
    every covariance must factor as SPD.  Instances are treated as immutable.
    """

    __slots__ = ("weights", "means", "covs", "_chol")

    def __init__(self, weights, means, covs):
        w = np.atleast_1d(np.asarray(weights, dtype=float)).copy()
        M = w.shape[0]
        if M == 0:
            raise InvalidArgument("a mixture needs at least one component")
        mu = np.asarray(means, dtype=float).reshape(M, -1).copy()
        d = mu.shape[1]
        P = np.asarray(covs, dtype=float)
        if P.size != M * d * d:
            raise DimensionError(f"covs have {P.size} entries, expected {M}x{d}x{d}")
        P = symmetrize(P.reshape(M, d, d))
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InvalidArgument(f"mixture weights must be finite and >= 0, got {w}")
        total = w.sum()
        if total < _MIN_WEIGHT_SUM:
            raise InvalidArgument(f"mixture weights sum to {total:.3e}; cannot normalize")
        w /= total
        chol = np.stack([cholesky(P[i]) for i in range(M)])
        for arr in (w, mu, P, chol):
            arr.setflags(write=False)
        self.weights = w
        self.means = mu
        self.covs = P
        self._chol = chol

    @classmethod
    def from_components(cls, components: Iterable[GaussianComponent]) -> "GaussianMixture":
        comps = list(components)
        if not comps:
            raise InvalidArgument("a mixture needs at least one component")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise DimensionError(f"components have mixed dimensions {sorted(dims)}")
        return cls([c.weight for c in comps], [c.mean for c in comps], [c.cov for c in comps])

    @classmethod
    def single(cls, mean, cov) -> "GaussianMixture":
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        return cls([1.0], mean[None, :], np.asarray(cov, dtype=float).reshape(1, mean.size, mean.size))

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    def __len__(self) -> int:
        return self.n_components

    @property
    def components(self) -> list[GaussianComponent]:
        return [GaussianComponent(self.weights[i], self.means[i], self.covs[i]) for i in range(len(self))]

    def component(self, i: int) -> GaussianComponent:
        return GaussianComponent(self.weights[i], self.means[i], self.covs[i])

    def component_logpdfs(self, x) -> np.ndarray:
        """``log N_i(x)`` for every component, shape ``(M, N)`` for a batch."""
        X, _ = _as_batch(x, self.dim)
        return np.stack([_logpdf_chol(X, self.means[i], self._chol[i]) for i in range(len(self))])

    def logpdf(self, x):
        X, single = _as_batch(x, self.dim)
        lp = np.stack([_logpdf_chol(X, self.means[i], self._chol[i]) for i in range(len(self))])
        with np.errstate(divide="ignore"):
            logw = np.log(self.weights)[:, None]
        out = _logsumexp(lp + logw, axis=0)
        return float(out[0]) if single else out

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def mean(self) -> np.ndarray:
        """Overall mixture mean."""
        return self.weights @ self.means

    def cov(self) -> np.ndarray:
        """Overall mixture covariance (moment matched)."""
        mu = self.mean()
        dev = self.means - mu
        P = np.einsum("i,ijk->jk", self.weights, self.covs) + np.einsum("i,ij,ik->jk", self.weights, dev, dev)
        return symmetrize(P)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return sample_mixture(self, n, rng)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "components": [
                {"weight": float(w), "mean": m.tolist(), "cov": P.tolist()}
                for w, m, P in zip(self.weights, self.means, self.covs)
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GaussianMixture":
        comps = doc["components"]
        gmm = cls([c["weight"] for c in comps], [c["mean"] for c in comps], [c["cov"] for c in comps])
        if gmm.dim != int(doc["dim"]):
            raise DimensionError(f"document declares dim={doc['dim']} but components have {gmm.dim}")
        return gmm

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "GaussianMixture":
        return cls.from_dict(json.loads(text))

    def __repr__(self) -> str:
        return f"GaussianMixture(M={self.n_components}, dim={self.dim}, weights={np.round(self.weights, 4).tolist()})"


def _logsumexp(a: np.ndarray, axis: int = 0) -> np.ndarray:
    amax = np.max(a, axis=axis, keepdims=True)
    amax = np.where(np.isfinite(amax), amax, 0.0)
    with np.errstate(divide="ignore"):
        return np.log(np.sum(np.exp(a - amax), axis=axis)) + np.squeeze(amax, axis=axis)


def mixture_logpdf(gmm: GaussianMixture, x):
    return gmm.logpdf(x)


def mixture_pdf(gmm: GaussianMixture, x):
    """Mixture density ``sum_i w_i N(x; mu_i, P_i)`` at a point or a batch."""
    return gmm.pdf(x)


def sample_mixture(gmm: GaussianMixture, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` points: categorical mode choice, then a Gaussian draw."""
    if n < 1:
        raise InvalidArgument(f"sample count must be >= 1, got {n}")
    labels = rng.choice(gmm.n_components, size=n, p=gmm.weights)
    z = rng.standard_normal((n, gmm.dim))
    L = gmm._chol[labels]
    return gmm.means[labels] + np.einsum("nij,nj->ni", L, z)


def _log_self_overlap(L: np.ndarray) -> float:
    # log |4 pi P|^{-1/2}
    d = L.shape[0]
    return -0.5 * d * math.log(4.0 * math.pi) - np.sum(np.log(np.diag(L)))


def similarity(ci: GaussianComponent, cj: GaussianComponent) -> float:
    """Normalized L2 distance between two (unweighted) Gaussian densities.

    Returns 0 for identical components and tends to 1 as they separate.
    """
    if ci.dim != cj.dim:
        raise DimensionError(f"components have dimensions {ci.dim} and {cj.dim}")
    return _similarity(ci.mean, ci.cov, cholesky(ci.cov), cj.mean, cj.cov, cholesky(cj.cov))


def _similarity(mi, Pi, Li, mj, Pj, Lj) -> float:
    si = _log_self_overlap(Li)
    sj = _log_self_overlap(Lj)
    cross = _logpdf_chol(np.asarray(mi)[None, :], mj, cholesky(Pi + Pj))[0]
    # divide through by the larger self-overlap so nothing overflows in high d
    ref = max(si, sj)
    a, b = math.exp(si - ref), math.exp(sj - ref)
    c = math.exp(cross - ref)
    D = (a + b - 2.0 * c) / (a + b)
    return float(min(max(D, 0.0), 1.0))


def pairwise_similarity(gmm: GaussianMixture) -> np.ndarray:
    """Symmetric ``(M, M)`` matrix of :func:`similarity` values."""
    M = gmm.n_components
    D = np.zeros((M, M))
    for i in range(M):
        for j in range(i + 1, M):
            D[i, j] = D[j, i] = _similarity(
                gmm.means[i], gmm.covs[i], gmm._chol[i], gmm.means[j], gmm.covs[j], gmm._chol[j]
            )
    return D


def merge_components(gmm: GaussianMixture, indices: Sequence[int]) -> GaussianComponent:
    """Moment-matched merge of the components at ``indices``.

    The merged weight is the sum of the (normalized) weights of the group.
    """
    idx = list(indices)
    if not idx:
        raise InvalidArgument("cannot merge an empty index set")
    if len(set(idx)) != len(idx):
        raise InvalidArgument(f"merge indices must be distinct, got {idx}")
    M = gmm.n_components
    if any(i < 0 or i >= M for i in idx):
        raise InvalidArgument(f"merge indices {idx} out of range for {M} components")
    if len(idx) == 1:
        return gmm.component(idx[0])
    w = gmm.weights[idx]
    wsum = w.sum()
    if wsum <= 0.0:
        # all-zero group: plain average keeps the result well defined
        w = np.full(len(idx), 1.0 / len(idx))
        frac = w
    else:
        frac = w / wsum
    mu = frac @ gmm.means[idx]
    dev = gmm.means[idx] - mu
    P = np.einsum("i,ijk->jk", frac, gmm.covs[idx]) + np.einsum("i,ij,ik->jk", frac, dev, dev)
    return GaussianComponent(wsum, mu, symmetrize(P))


def _groups(adjacency: np.ndarray) -> list[list[int]]:
    M = adjacency.shape[0]
    parent = list(range(M))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in zip(*np.nonzero(np.triu(adjacency, 1))):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(M):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def merge_pass(gmm: GaussianMixture, tol: float = 0.01, return_groups: bool = False):
    """Merge every connected group of components with pairwise similarity < ``tol``.

    Groups are the connected components of the graph with an edge wherever
    ``D(i, j) < tol``.  The pass repeats until no surviving pair is below
    ``tol``; output components are ordered by the lowest input index of
    their group.

    With ``return_groups=True`` also returns the list of input-index groups.
    """
    if not 0.0 < tol < 1.0:
        raise InvalidArgument(f"merge tolerance must lie in (0, 1), got {tol}")
    current = gmm
    membership = [[i] for i in range(gmm.n_components)]
    while current.n_components > 1:
        D = pairwise_similarity(current)
        adj = D < tol
        np.fill_diagonal(adj, False)
        if not adj.any():
            break
        groups = _groups(adj)
        merged = [merge_components(current, g) for g in groups]
        membership = [sorted(sum((membership[i] for i in g), [])) for g in groups]
        current = GaussianMixture.from_components(merged)
    return (current, membership) if return_groups else current
