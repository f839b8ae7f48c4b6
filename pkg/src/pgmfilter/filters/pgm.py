"""Particle Gaussian mixture (PGM) filter.

Each recursion samples the posterior mixture, pushes the samples through
the stochastic dynamics, clusters them into a Gaussian mixture, applies a
Kalman-type update to every mode, reweights the modes by their measurement
likelihoods and finally merges modes that became indistinguishable.

Between measurements the state stays an ensemble of particles; clustering
only happens when a measurement arrives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..clustering import DEFAULT_MAX_ITER, DEFAULT_RESTARTS, ClusterFit, fit_naive
from ..errors import InvalidArgument
from ..gaussmix import GaussianMixture, merge_pass, sample_mixture
from ..models import StateSpaceModel
from .kalman import TABLE_I_PARAMS, UnscentedParams, _kalman_update, mode_weight_update, particle_stats, unscented_stats

# modes whose posterior weight falls below this are dropped before merging
PRUNE_WEIGHT = 1e-10


@dataclass(frozen=True)
class PGMConfig:
    n_particles: int
    m_max: int = 2
    tol: float = 0.01
    variant: int = 1
    ut: UnscentedParams = TABLE_I_PARAMS
    kmeans_restarts: int = DEFAULT_RESTARTS
    kmeans_max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        if self.n_particles < 2:
            raise InvalidArgument(f"PGM needs at least 2 particles, got {self.n_particles}")
        if self.variant not in (1, 2):
            raise InvalidArgument(f"PGM variant must be 1 or 2, got {self.variant}")
        if self.m_max < 1:
            raise InvalidArgument(f"m_max must be >= 1, got {self.m_max}")


@dataclass
class PGMStepInfo:
    chosen_M: int = 0
    n_modes: int = 0
    merges: int = 0
    pruned: int = 0
    cov_repairs: int = 0
    likelihood_underflow: bool = False
    weights: np.ndarray = field(default_factory=lambda: np.ones(1))


def pgm_predict(state, model: StateSpaceModel, n_particles: int, rng: np.random.Generator, k: int) -> np.ndarray:
    """Sample ``state`` (a mixture, or particles carried from the last step) and propagate ``k -> k + 1``."""
    if n_particles < 2:
        raise InvalidArgument(f"PGM needs at least 2 particles, got {n_particles}")
    if isinstance(state, GaussianMixture):
        X = sample_mixture(state, n_particles, rng)
    else:
        X = np.asarray(state, dtype=float).reshape(-1, model.dim)
    return model.propagate(X, k, rng)


def pgm_update(
    particles: np.ndarray, z, model: StateSpaceModel, cfg: PGMConfig, rng: np.random.Generator
) -> tuple[GaussianMixture, PGMStepInfo]:
    """Cluster the predicted ensemble and update every mode with ``z``."""
    fit: ClusterFit = fit_naive(
        particles, cfg.m_max, rng, max_iter=cfg.kmeans_max_iter, restarts=cfg.kmeans_restarts
    )
    prior = fit.gmm
    labels = fit.assignment.labels
    info = PGMStepInfo(chosen_M=prior.n_components)
    stats, means, covs = [], [], []
    for i in range(prior.n_components):
        comp = prior.component(i)
        if cfg.variant == 1:
            s = unscented_stats(comp, model.h, model.R, cfg.ut)
        else:
            s = particle_stats(particles[labels == i], comp, model.h, model.R, cfg.ut)
        mu, P, repaired = _kalman_update(comp.mean, comp.cov, s, z)
        info.cov_repairs += int(repaired)
        stats.append(s)
        means.append(mu)
        covs.append(P)
    weights, ok = mode_weight_update(prior.weights, stats, z)
    info.likelihood_underflow = not ok
    keep = weights >= PRUNE_WEIGHT * weights.max()
    info.pruned = int((~keep).sum())
    post = GaussianMixture(weights[keep], np.asarray(means)[keep], np.asarray(covs)[keep])
    merged = merge_pass(post, cfg.tol)
    info.merges = post.n_components - merged.n_components
    info.n_modes = merged.n_components
    info.weights = merged.weights
    return merged, info


def pgm_step(state, z, model: StateSpaceModel, cfg: PGMConfig, rng: np.random.Generator, k: int):
    """One PGM recursion from step ``k`` to ``k + 1``.

    Returns ``(new_state, info)``: a :class:`GaussianMixture` after a
    measurement, otherwise the propagated particle array (``info`` is None).
    """
    X = pgm_predict(state, model, cfg.n_particles, rng, k)
    if z is None:
        return X, None
    return pgm_update(X, z, model, cfg, rng)
