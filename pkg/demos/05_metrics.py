"""
Consistency metrics
===================

The chi-square bound on Monte Carlo averaged NEES, NEES of a mixture, and the
weight consistency statistic on synthetic data.
"""

import numpy as np

from pgmfilter.gaussmix import GaussianMixture
from pgmfilter.metrics import chi2_upper_bound, nees_mixture, sw_statistic, v2sigma, weight_consistency_terms

for d in (1, 3, 40):
    print(f"99% bound on averaged NEES, d={d}, 50 runs: {chi2_upper_bound(d, 50, 0.99):.4f}")

g = GaussianMixture([0.7, 0.3], [[-2.0, 0.0], [2.0, 0.0]], [np.eye(2), 0.5 * np.eye(2)])
print("NEES at (2, 0.5) using the most likely mode:", nees_mixture([2.0, 0.5], g))
print("2-sigma volume proxy:", v2sigma(g))

# when mode memberships are drawn from the claimed weights the statistic is standard normal
rng = np.random.default_rng(6)
vals = []
for _ in range(500):
    terms = []
    for _ in range(50):
        w = rng.dirichlet(np.ones(3))
        v = np.eye(3)[rng.choice(3, p=w)]
        terms.append(weight_consistency_terms(w, v))
    vals.append(sw_statistic(terms)[0])
print(f"weight statistic over 500 trials: mean {np.mean(vals):+.3f}, variance {np.var(vals):.3f}")
