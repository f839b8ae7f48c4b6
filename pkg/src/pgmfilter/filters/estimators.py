"""Stateful wrappers giving every filter the same recursive interface.

A filter is initialized from a prior mixture and then advanced one model
step at a time with :meth:`RecursiveFilter.advance`.  :meth:`posterior`
returns either a :class:`GaussianMixture` or an ``(N, d)`` particle array;
the metrics accept both.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

from ..errors import InvalidArgument
from ..gaussmix import GaussianMixture, sample_mixture
from ..models import StateSpaceModel
from .kalman import TABLE_I_PARAMS, UnscentedParams, gm_ukf_step, ukf_predict, ukf_update
from .particle import enkf_step, sir_step
from .pgm import PGMConfig, pgm_predict, pgm_update


class RecursiveFilter:
    kind = "base"

    def __init__(self, name: str, model: StateSpaceModel):
        self.name = name
        self.model = model
        self.flags: Counter = Counter()
        self.last_info: dict = {}

    def initialize(self, prior: GaussianMixture, rng: np.random.Generator) -> None:
        raise NotImplementedError

    def advance(self, k: int, z=None) -> None:
        """Move from step ``k`` to ``k + 1``, assimilating ``z`` (taken at ``k + 1``) if given."""
        raise NotImplementedError

    def posterior(self):
        raise NotImplementedError

    def n_modes(self) -> int:
        post = self.posterior()
        return post.n_components if isinstance(post, GaussianMixture) else 1


class PGMFilter(RecursiveFilter):
    kind = "pgm"

    def __init__(self, name: str, model: StateSpaceModel, cfg: PGMConfig):
        super().__init__(name, model)
        self.cfg = cfg
        self.state = None

    def initialize(self, prior, rng):
        self.rng = rng
        self.state = prior

    def advance(self, k, z=None):
        X = pgm_predict(self.state, self.model, self.cfg.n_particles, self.rng, k)
        if z is None:
            self.state = X
            self.last_info = {}
            return
        self.state, info = pgm_update(X, z, self.model, self.cfg, self.rng)
        self.last_info = {
            "chosen_M": info.chosen_M,
            "merges": info.merges,
            "weights": info.weights,
        }
        self.flags["cov_repair"] += info.cov_repairs
        self.flags["likelihood_underflow"] += int(info.likelihood_underflow)
        self.flags["pruned_modes"] += info.pruned

    def posterior(self):
        return self.state


class SIRFilter(RecursiveFilter):
    kind = "sir"

    def __init__(self, name: str, model: StateSpaceModel, n_particles: int):
        super().__init__(name, model)
        if n_particles < 1:
            raise InvalidArgument(f"SIR needs at least one particle, got {n_particles}")
        self.n_particles = n_particles

    def initialize(self, prior, rng):
        self.rng = rng
        self.particles = sample_mixture(prior, self.n_particles, rng)
        self.weights = np.full(self.n_particles, 1.0 / self.n_particles)

    def advance(self, k, z=None):
        self.particles, self.weights, degenerate = sir_step(self.particles, self.weights, z, self.model, self.rng, k)
        self.flags["degenerate_weights"] += int(degenerate)

    def posterior(self):
        return self.particles


class EnKFilter(RecursiveFilter):
    kind = "enkf"

    def __init__(self, name: str, model: StateSpaceModel, n_particles: int):
        super().__init__(name, model)
        if n_particles < 2:
            raise InvalidArgument(f"EnKF needs at least 2 members, got {n_particles}")
        self.n_particles = n_particles

    def initialize(self, prior, rng):
        self.rng = rng
        self.ensemble = sample_mixture(prior, self.n_particles, rng)

    def advance(self, k, z=None):
        self.ensemble = enkf_step(self.ensemble, z, self.model, self.rng, k)

    def posterior(self):
        return self.ensemble


class UKFilter(RecursiveFilter):
    """Single-Gaussian UKF; a mixture prior is collapsed to its first two moments."""

    kind = "ukf"

    def __init__(self, name: str, model: StateSpaceModel, params: UnscentedParams = TABLE_I_PARAMS):
        super().__init__(name, model)
        self.params = params

    def initialize(self, prior, rng):
        self.mean, self.cov = prior.mean(), prior.cov()

    def advance(self, k, z=None):
        self.mean, self.cov, rep = ukf_predict(self.mean, self.cov, self.model, k, self.params)
        if z is not None:
            self.mean, self.cov, _, rep2 = ukf_update(self.mean, self.cov, z, self.model, self.params)
            rep = rep or rep2
        self.flags["cov_repair"] += int(rep)

    def posterior(self):
        return GaussianMixture.single(self.mean, self.cov)


class GMUKFilter(RecursiveFilter):
    """Bank of UKFs, one per prior mode, with likelihood-driven mode weights."""

    kind = "gmukf"

    def __init__(self, name: str, model: StateSpaceModel, params: UnscentedParams = TABLE_I_PARAMS):
        super().__init__(name, model)
        self.params = params

    def initialize(self, prior, rng):
        self.gmm = prior

    def advance(self, k, z=None):
        self.gmm, info = gm_ukf_step(self.gmm, z, self.model, self.params, k)
        self.flags["cov_repair"] += info["cov_repairs"]
        self.flags["likelihood_underflow"] += int(info["likelihood_underflow"])

    def posterior(self):
        return self.gmm


FILTER_KINDS = ("pgm", "sir", "enkf", "ukf", "gmukf")


def make_filter(kind: str, name: str, model: StateSpaceModel, **settings) -> RecursiveFilter:
    """Build a filter from a kind string and its settings.

    Settings: ``particles`` (pgm/sir/enkf), ``m_max``, ``tol``, ``variant``
    (pgm), and ``alpha``/``beta``/``lam`` (pgm/ukf/gmukf).
    """
    ut = UnscentedParams(
        alpha=settings.get("alpha", TABLE_I_PARAMS.alpha),
        beta=settings.get("beta", TABLE_I_PARAMS.beta),
        lam=settings.get("lam", TABLE_I_PARAMS.lam),
    )
    if kind == "pgm":
        cfg = PGMConfig(
            n_particles=int(settings["particles"]),
            m_max=int(settings["m_max"]),
            tol=float(settings["tol"]),
            variant=int(settings["variant"]),
            ut=ut,
        )
        return PGMFilter(name, model, cfg)
    if kind == "sir":
        return SIRFilter(name, model, int(settings["particles"]))
    if kind == "enkf":
        return EnKFilter(name, model, int(settings["particles"]))
    if kind == "ukf":
        return UKFilter(name, model, ut)
    if kind == "gmukf":
        return GMUKFilter(name, model, ut)
    raise InvalidArgument(f"unknown filter kind {kind!r}; expected one of {FILTER_KINDS}")
