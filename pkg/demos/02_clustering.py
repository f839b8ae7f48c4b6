"""
Recovering a mixture from particles
===================================

Push a Gaussian cloud through the scalar growth model, then let k-means and
the likelihood agreement score choose how many modes to keep.
"""

import numpy as np

from pgmfilter.clustering import fit_naive, kmeans
from pgmfilter.models import scalar_benchmark_model

rng = np.random.default_rng(1)
model = scalar_benchmark_model(10.0, 1.0, 2)

X = np.sqrt(5.0) * rng.standard_normal((200, 1))
for k in range(5):
    X = model.propagate(X, k, rng)

a = kmeans(X, 2, rng)
print("centroids", a.centroids.ravel().round(2), "wcss", round(a.wcss, 1))

fit = fit_naive(X, 3, rng)
print("scores by cluster count", {m: round(s, 4) for m, s in fit.scores.items()})
print("chosen:", fit.M, "modes")
print("weights", fit.gmm.weights.round(3))
print("means", fit.gmm.means.ravel().round(2))
