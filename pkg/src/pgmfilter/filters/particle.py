"""Ensemble baselines: the SIR particle filter and the stochastic EnKF."""

from __future__ import annotations

import logging

import numpy as np
from scipy.linalg import cho_solve

from ..errors import InvalidArgument
from ..gaussmix import cholesky, gaussian_logpdf, symmetrize
from ..models import StateSpaceModel
from .kalman import normalize_log_weights

log = logging.getLogger(__name__)


def systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Indices drawn by systematic resampling (one uniform offset)."""
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    positions = (rng.random() + np.arange(n)) / n
    cdf = np.cumsum(w)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, positions, side="right").clip(max=n - 1)


def effective_sample_size(weights) -> float:
    w = np.asarray(weights, dtype=float)
    return float(1.0 / np.sum(w * w))


def measurement_loglik(model: StateSpaceModel, X: np.ndarray, z) -> np.ndarray:
    """``log N(z; h(x_i), R)`` for every particle."""
    resid = np.asarray(z, dtype=float).reshape(1, -1) - model.h(X)
    return gaussian_logpdf(resid, np.zeros(model.meas_dim), model.R).reshape(-1)


def sir_step(particles, weights, z, model: StateSpaceModel, rng: np.random.Generator, k: int):
    """Propagate a weighted ensemble ``k -> k + 1``; on ``z`` reweight and resample.

    Returns ``(particles, weights, degenerate)``.  ``degenerate`` is set when
    every likelihood underflowed, in which case the unweighted ensemble is
    resampled instead.
    """
    X = model.propagate(particles, k, rng)
    w = np.asarray(weights, dtype=float)
    if z is None:
        return X, w, False
    with np.errstate(divide="ignore"):
        logw = np.log(w) + measurement_loglik(model, X, z)
    post, ok = normalize_log_weights(logw)
    if not ok:
        log.warning("all particle likelihoods underflowed; resampling the unweighted ensemble")
        post = np.full(X.shape[0], 1.0 / X.shape[0])
    idx = systematic_resample(post, rng)
    n = X.shape[0]
    return X[idx], np.full(n, 1.0 / n), not ok


def importance_weights(particles, loglik_fn) -> np.ndarray:
    """Normalized weights ``l(x_i) / sum_j l(x_j)`` from a log-likelihood function."""
    w, ok = normalize_log_weights(loglik_fn(np.asarray(particles, dtype=float)))
    if not ok:
        raise InvalidArgument("every particle has zero likelihood")
    return w


def enkf_step(ensemble, z, model: StateSpaceModel, rng: np.random.Generator, k: int) -> np.ndarray:
    """Stochastic (perturbed-observation) EnKF step ``k -> k + 1``."""
    X = np.asarray(ensemble, dtype=float).reshape(-1, model.dim)
    n = X.shape[0]
    if n < 2:
        raise InvalidArgument(f"EnKF needs at least 2 members, got {n}")
    X = model.propagate(X, k, rng)
    if z is None:
        return X
    Z = model.h(X)
    dz = Z - Z.mean(axis=0)
    dx = X - X.mean(axis=0)
    Pzz = symmetrize(dz.T @ dz / (n - 1) + model.R)
    Pzx = dz.T @ dx / (n - 1)
    K = cho_solve((cholesky(Pzz, "innovation covariance"), True), Pzx).T
    eta = rng.standard_normal((n, model.meas_dim)) @ model.meas_sqrt.T
    innov = np.asarray(z, dtype=float).reshape(1, -1) + eta - Z
    return X + innov @ K.T
