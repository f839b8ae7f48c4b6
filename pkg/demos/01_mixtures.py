"""
Gaussian mixtures: density, sampling and merging
================================================

Build a two-dimensional mixture, sample it, and merge near-duplicate modes.
"""

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from pgmfilter.gaussmix import GaussianMixture, merge_pass, mixture_pdf, pairwise_similarity

rng = np.random.default_rng(0)

# three modes; the first two sit almost on top of each other
g = GaussianMixture(
    [0.3, 0.3, 0.4],
    [[0.0, 0.0], [0.02, 0.0], [4.0, 2.0]],
    [np.eye(2), np.eye(2), [[1.0, 0.6], [0.6, 1.0]]],
)
print("mixture mean", g.mean())
print("mixture covariance\n", g.cov())
print("pairwise similarity\n", pairwise_similarity(g).round(4))

# merging keeps the overall mean and covariance
merged = merge_pass(g, tol=0.01)
print("components before/after merge:", g.n_components, merged.n_components)
print("mean change", np.abs(merged.mean() - g.mean()).max())
print("cov change", np.abs(merged.cov() - g.cov()).max())

X = g.sample(2000, rng)
xx, yy = np.meshgrid(np.linspace(-4, 8, 120), np.linspace(-4, 6, 100))
dens = mixture_pdf(merged, np.column_stack([xx.ravel(), yy.ravel()])).reshape(xx.shape)

fig, ax = plt.subplots(figsize=(6, 5))
ax.scatter(X[:, 0], X[:, 1], s=2, alpha=0.4)
ax.contour(xx, yy, dens, levels=8)
ax.set_title("samples and merged mixture density")
fig.savefig("mixtures.png", dpi=100)
