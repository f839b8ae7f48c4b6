"""Unscented transform, Kalman-type mode updates and the UKF baselines."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.linalg import cho_solve

from ..errors import CholeskyFailure, InvalidArgument
from ..gaussmix import GaussianComponent, GaussianMixture, cholesky, gaussian_logpdf, repair_cov, symmetrize
from ..models import StateSpaceModel

log = logging.getLogger(__name__)

MeasureFn = Callable[[np.ndarray], np.ndarray]

@dataclass(frozen=True)
class UnscentedParams:
    """Scaled unscented transform parameters.

    ``lam`` is used directly as the sigma-point spread; ``alpha`` and ``beta``
    only enter the zeroth covariance weight ``lam/(d+lam) + 1 - alpha^2 + beta``.
    """

    alpha: float = 1.3
    beta: float = 1.5
    lam: float = 0.2

    def weights(self, d: int) -> tuple[np.ndarray, np.ndarray]:
        c = d + self.lam
        if c <= 0:
            raise InvalidArgument(f"d + lambda must be positive, got {c}")
        wm = np.full(2 * d + 1, 1.0 / (2.0 * c))
        wm[0] = self.lam / c
        wc = wm.copy()
        wc[0] += 1.0 - self.alpha**2 + self.beta
        return wm, wc

    def sigma_points(self, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
        """``2d + 1`` points: the mean, then ``mean +/- `` columns of ``sqrt((d + lam) P)``."""
        d = mean.shape[0]
        S = cholesky((d + self.lam) * cov)
        return np.vstack([mean, mean + S.T, mean - S.T])


TABLE_I_PARAMS = UnscentedParams(alpha=1.3, beta=1.5, lam=0.2)


class MeasurementStats(NamedTuple):
    """Predicted measurement ``zhat``, its covariance ``Pzz`` (noise included)
    and the ``m x d`` cross covariance ``Pzx``."""

    zhat: np.ndarray
    Pzz: np.ndarray
    Pzx: np.ndarray


def unscented_stats(comp: GaussianComponent, h: MeasureFn, R, params: UnscentedParams = TABLE_I_PARAMS) -> MeasurementStats:
    """Measurement moments of one Gaussian mode by the unscented transform."""
    mean, cov = np.asarray(comp.mean), np.asarray(comp.cov)
    d = mean.shape[0]
    wm, wc = params.weights(d)
    X = params.sigma_points(mean, cov)
    Z = np.asarray(h(X), dtype=float).reshape(X.shape[0], -1)
    zhat = wm @ Z
    dz = Z - zhat
    dx = X - mean
    Pzz = symmetrize((wc[:, None] * dz).T @ dz + np.atleast_2d(R))
    Pzx = (wc[:, None] * dz).T @ dx
    return MeasurementStats(zhat, Pzz, Pzx)


def particle_stats(
    cluster_particles, comp: GaussianComponent, h: MeasureFn, R, params: UnscentedParams = TABLE_I_PARAMS
) -> MeasurementStats:
    """Measurement moments of one cluster straight from its particles.

    The cross term is taken about the cluster mean ``comp.mean``.  Clusters
    with fewer than two particles fall back to :func:`unscented_stats`.
    """
    X = np.asarray(cluster_particles, dtype=float).reshape(-1, comp.dim)
    n = X.shape[0]
    if n < 2:
        log.info("cluster with %d particle(s); falling back to the unscented transform", n)
        return unscented_stats(comp, h, R, params)
    Z = np.asarray(h(X), dtype=float).reshape(n, -1)
    zhat = Z.mean(axis=0)
    dz = Z - zhat
    Pzz = symmetrize(dz.T @ dz / (n - 1) + np.atleast_2d(R))
    Pzx = dz.T @ (X - comp.mean) / (n - 1)
    return MeasurementStats(zhat, Pzz, Pzx)


def _kalman_update(mean, cov, stats: MeasurementStats, z) -> tuple[np.ndarray, np.ndarray, bool]:
    zhat, Pzz, Pzx = stats
    L = cholesky(Pzz, "innovation covariance")
    K = cho_solve((L, True), Pzx).T
    innov = np.asarray(z, dtype=float).reshape(-1) - zhat
    mu = mean + K @ innov
    P = symmetrize(cov - K @ Pzz @ K.T)
    try:
        cholesky(P)
        return mu, P, False
    except CholeskyFailure:
        log.info("posterior covariance lost definiteness; flooring eigenvalues")
        return mu, repair_cov(P), True


def kalman_component_update(comp: GaussianComponent, stats: MeasurementStats, z) -> GaussianComponent:
    """Linear-gain update of one mode: gain ``Pzx^T Pzz^{-1}``, weight unchanged."""
    mu, P, _ = _kalman_update(comp.mean, comp.cov, stats, z)
    return GaussianComponent(comp.weight, mu, P)


def normalize_log_weights(logw: np.ndarray) -> tuple[np.ndarray, bool]:
    """Exponentiate and normalize log weights; ``ok`` is False if all are -inf/NaN."""
    logw = np.asarray(logw, dtype=float)
    finite = np.isfinite(logw)
    if not finite.any():
        return np.full(logw.shape, np.nan), False
    top = np.max(logw[finite])
    w = np.where(finite, np.exp(logw - top), 0.0)
    return w / w.sum(), True


def mode_log_likelihoods(mode_stats: Sequence[MeasurementStats], z) -> np.ndarray:
    return np.array([gaussian_logpdf(z, s.zhat, s.Pzz) for s in mode_stats])


def mode_weight_update(prior_weights, mode_stats: Sequence[MeasurementStats], z) -> tuple[np.ndarray, bool]:
    """Posterior mode weights ``w_i l_i / sum_j w_j l_j`` computed in log space.

    ``l_i`` is the density of ``z`` under mode ``i``'s predicted measurement
    distribution.  If every likelihood underflows to zero the prior weights
    are returned unchanged with ``ok=False``.
    """
    w0 = np.asarray(prior_weights, dtype=float)
    loglik = mode_log_likelihoods(mode_stats, z)
    with np.errstate(divide="ignore"):
        logw = np.log(w0) + loglik
    w, ok = normalize_log_weights(logw)
    if not ok:
        log.warning("all mode likelihoods underflowed; keeping prior weights")
        return w0 / w0.sum(), False
    return w, True


# --- UKF / GM-UKF -------------------------------------------------------------------


def _ensure_spd(P: np.ndarray) -> tuple[np.ndarray, bool]:
    """Return ``P`` or its eigenvalue-floored repair.

    A matrix that factors but is within rounding of singular is repaired too,
    since the scaled sigma-point factorization would fail on it.
    """
    P = symmetrize(P)
    floor = max(1e-10, 1e-12 * float(np.trace(P)))
    if np.linalg.eigvalsh(P)[0] >= floor:
        return P, False
    log.info("UKF covariance repaired by eigenvalue flooring")
    return repair_cov(P, floor), True


def ukf_predict(mean, cov, model: StateSpaceModel, k: int, params: UnscentedParams) -> tuple[np.ndarray, np.ndarray, bool]:
    d = mean.shape[0]
    wm, wc = params.weights(d)
    cov, rep0 = _ensure_spd(cov)
    X = model.step_mean(params.sigma_points(mean, cov), k)
    mu = wm @ X
    dx = X - mu
    P, rep1 = _ensure_spd((wc[:, None] * dx).T @ dx + model.Q)
    return mu, P, rep0 or rep1


def ukf_update(mean, cov, z, model: StateSpaceModel, params: UnscentedParams):
    """Returns ``(mean, cov, stats, repaired)``."""
    cov, rep0 = _ensure_spd(cov)
    stats = unscented_stats(GaussianComponent(1.0, mean, cov), model.h, model.R, params)
    mu, P, rep1 = _kalman_update(mean, cov, stats, z)
    return mu, P, stats, rep0 or rep1


def ukf_step(state, z, model: StateSpaceModel, params: UnscentedParams, k: int):
    """Propagate ``(mean, cov)`` from step ``k`` to ``k + 1`` and update on ``z`` if given."""
    mean, cov = np.asarray(state[0], dtype=float), np.asarray(state[1], dtype=float)
    mean, cov, _ = ukf_predict(mean, cov, model, k, params)
    if z is not None:
        mean, cov, _, _ = ukf_update(mean, cov, z, model, params)
    return mean, cov


def gm_ukf_step(
    gmm: GaussianMixture, z, model: StateSpaceModel, params: UnscentedParams, k: int
) -> tuple[GaussianMixture, dict]:
    """One UKF per mode plus the mode-likelihood weight update (no merging)."""
    means, covs, stats = [], [], []
    repairs = 0
    for i in range(gmm.n_components):
        mu, P, rep = ukf_predict(gmm.means[i], gmm.covs[i], model, k, params)
        if z is not None:
            mu, P, s, rep2 = ukf_update(mu, P, z, model, params)
            stats.append(s)
            rep = rep or rep2
        repairs += int(rep)
        means.append(mu)
        covs.append(P)
    ok = True
    weights = gmm.weights
    if z is not None:
        weights, ok = mode_weight_update(gmm.weights, stats, z)
    return GaussianMixture(weights, means, covs), {"cov_repairs": repairs, "likelihood_underflow": not ok}
