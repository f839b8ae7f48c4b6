"""
Filters on the scalar growth model
==================================

Run both particle Gaussian mixture variants against a particle filter and a
UKF on one truth stream, and compare the error of the mixture-mean estimate.
"""

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from pgmfilter.filters import make_filter
from pgmfilter.gaussmix import GaussianMixture
from pgmfilter.models import scalar_benchmark_model, simulate_truth

model = scalar_benchmark_model(10.0, 1.0, 2)
prior = GaussianMixture.single([0.0], [[2.0]])
truth = simulate_truth(model, prior.sample(1, np.random.default_rng(3))[0], 52, np.random.default_rng(4))

ut = dict(alpha=1.3, beta=1.5, lam=0.2)
filters = {
    "PGM1": make_filter("pgm", "PGM1", model, particles=50, m_max=2, tol=0.01, variant=1, **ut),
    "PGM2": make_filter("pgm", "PGM2", model, particles=50, m_max=2, tol=0.01, variant=2, **ut),
    "PF": make_filter("sir", "PF", model, particles=50),
    "UKF": make_filter("ukf", "UKF", model, **ut),
}

estimates = {}
for name, f in filters.items():
    f.initialize(prior, np.random.default_rng(5))
    est = []
    for k in range(truth.T):
        f.advance(k, truth.z(k + 1))
        post = f.posterior()
        est.append(post.mean()[0] if isinstance(post, GaussianMixture) else post.mean())
    estimates[name] = np.array(est)
    err = np.sqrt(np.mean((estimates[name] - truth.states[1:, 0]) ** 2))
    print(f"{name:5s} rms error {err:.3f}")

fig, ax = plt.subplots(figsize=(9, 4))
ax.plot(np.arange(1, truth.T + 1), truth.states[1:, 0], "k", lw=2, label="truth")
for name, est in estimates.items():
    ax.plot(np.arange(1, truth.T + 1), est, lw=1, label=name)
ax.legend()
ax.set_xlabel("step")
fig.savefig("filters.png", dpi=100)
