"""Illustrative demos: importance-weight collapse and emergence of bimodality."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..clustering import fit_naive
from ..filters import effective_sample_size
from ..gaussmix import gaussian_logpdf, sample_mixture
from ..models import DEMO_BIMODAL_PRIOR, demo_bimodal_model, scalar_benchmark_model

# prior N(11, 0.3) against likelihood N(15, 0.1); both values are variances
DEPLETION_PRIOR = (11.0, 0.3)
DEPLETION_LIKELIHOOD = (15.0, 0.1)
DEPLETION_PARTICLES = 400
DEPLETION_SWEEP = (0.3, 1.0, 2.0, 4.0, 8.0, 16.0)


@dataclass
class DepletionResult:
    particles: np.ndarray
    weights: np.ndarray
    max_weight: float
    n_eff: float
    sweep_vars: np.ndarray
    sweep_n_eff: np.ndarray


def _normalized_weights(x: np.ndarray, mean: float, var: float) -> np.ndarray:
    logw = gaussian_logpdf(x[:, None], np.array([mean]), np.array([[var]]))
    w = np.exp(logw - logw.max())
    return w / w.sum()


def demo_particle_depletion(
    seed: int = 0,
    n: int = DEPLETION_PARTICLES,
    prior=DEPLETION_PRIOR,
    likelihood=DEPLETION_LIKELIHOOD,
    sweep=DEPLETION_SWEEP,
    out_dir=None,
) -> DepletionResult:
    """Importance weights of prior samples under a sharply offset likelihood.

    The sweep reuses the same standard normal draws with wider prior
    variances, so only the prior width changes between its entries.
    """
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n)
    x = prior[0] + np.sqrt(prior[1]) * z
    w = _normalized_weights(x, *likelihood)
    sweep = np.asarray(sweep, dtype=float)
    n_effs = np.array([effective_sample_size(_normalized_weights(prior[0] + np.sqrt(v) * z, *likelihood)) for v in sweep])
    res = DepletionResult(x, w, float(w.max()), float(effective_sample_size(w)), sweep, n_effs)
    if out_dir is not None:
        _plot_depletion(res, Path(out_dir), likelihood)
    return res


def _plot_depletion(res: DepletionResult, out: Path, likelihood) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out.mkdir(parents=True, exist_ok=True)
    fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))
    a.hist(res.particles, bins=30, density=True, alpha=0.6, label="prior samples")
    grid = np.linspace(res.particles.min() - 1.0, likelihood[0] + 1.0, 400)
    lik = np.exp(-0.5 * (grid - likelihood[0]) ** 2 / likelihood[1]) / np.sqrt(2 * np.pi * likelihood[1])
    a.plot(grid, lik, label="likelihood")
    a2 = a.twinx()
    a2.vlines(res.particles, 0, res.weights, color="C3", linewidth=0.8)
    a2.set_ylabel("normalized weight")
    a.set_xlabel("x")
    a.legend(loc="upper left", fontsize="small")
    a.set_title(f"max w = {res.max_weight:.3f}, N_eff = {res.n_eff:.2f}")
    b.plot(res.sweep_vars, res.sweep_n_eff, "o-")
    b.set_xscale("log")
    b.set_xlabel("prior variance")
    b.set_ylabel("N_eff")
    fig.tight_layout()
    fig.savefig(out / "depletion.png", dpi=100, metadata={"Software": None})
    plt.close(fig)


@dataclass
class BimodalResult:
    seeds: int
    chosen: np.ndarray
    fraction_two: float
    final_particles: np.ndarray


def propagate_demo_system(n: int, t_final: float, rng: np.random.Generator, dt: float = 0.1) -> np.ndarray:
    """Push ``n`` prior samples of the two-state demo system to ``t_final``."""
    model = demo_bimodal_model(dt=dt)
    X = sample_mixture(DEMO_BIMODAL_PRIOR, n, rng)
    for k in range(int(round(t_final / dt))):
        X = model.propagate(X, k, rng)
    return X


def propagate_scalar_benchmark(n: int, steps: int, rng: np.random.Generator, var0: float = 5.0, Q: float = 10.0) -> np.ndarray:
    """Samples of N(0, var0) pushed ``steps`` times through the scalar growth model."""
    model = scalar_benchmark_model(Q, 1.0, 2)
    X = np.sqrt(var0) * rng.standard_normal((n, 1))
    for k in range(steps):
        X = model.propagate(X, k, rng)
    return X


def bimodality_trials(propagate, n_seeds: int = 100, m_max: int = 2, seed0: int = 0) -> BimodalResult:
    """Fraction of seeds for which model selection picks two modes.

    ``propagate(rng)`` returns the particle set for one seed.
    """
    chosen = np.zeros(n_seeds, dtype=int)
    X = None
    for s in range(n_seeds):
        rng = np.random.default_rng([seed0, s])
        X = propagate(rng)
        chosen[s] = fit_naive(X, m_max, rng).gmm.n_components
    return BimodalResult(n_seeds, chosen, float(np.mean(chosen == 2)), X)


def demo_bimodal(n_seeds: int = 100, n: int = 200, t_final: float = 10.0, steps: int = 5, seed0: int = 0, out_dir=None):
    """Two-mode detection for the demo system and for the scalar growth model.

    Returns ``(demo_system_result, scalar_result)``.
    """
    a = bimodality_trials(lambda rng: propagate_demo_system(n, t_final, rng), n_seeds, seed0=seed0)
    b = bimodality_trials(lambda rng: propagate_scalar_benchmark(n, steps, rng), n_seeds, seed0=seed0)
    if out_dir is not None:
        _plot_bimodal(a, b, Path(out_dir))
    return a, b


def _plot_bimodal(a: BimodalResult, b: BimodalResult, out: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out.mkdir(parents=True, exist_ok=True)
    fig, (p, q) = plt.subplots(1, 2, figsize=(10, 4))
    p.scatter(a.final_particles[:, 0], a.final_particles[:, 1], s=6)
    p.set_xlabel("x1")
    p.set_ylabel("x2")
    p.set_title(f"demo system: M*=2 in {100 * a.fraction_two:.0f}% of seeds")
    q.hist(b.final_particles[:, 0], bins=40)
    q.set_xlabel("x")
    q.set_title(f"scalar model: M*=2 in {100 * b.fraction_two:.0f}% of seeds")
    fig.tight_layout()
    fig.savefig(out / "bimodal.png", dpi=100, metadata={"Software": None})
    plt.close(fig)
