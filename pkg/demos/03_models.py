"""
Benchmark systems and truth streams
===================================

Simulate one truth trajectory for each benchmark and round-trip it through CSV.
"""

import tempfile
from pathlib import Path

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from pgmfilter.models import Trajectory, lorenz63_model, lorenz96_model, scalar_benchmark_model, simulate_truth

rng = np.random.default_rng(2)

scalar = simulate_truth(scalar_benchmark_model(10.0, 1.0, 2), [0.0], 52, rng)
l63 = simulate_truth(lorenz63_model(1.0, 1.0, 0.01, 10, noise_mode="per_step", full_state_noise=True), [-0.2, -0.2, 8.0], 1020, rng)
l96 = simulate_truth(lorenz96_model(40, 8.0, 0.01, 0.01, 0.05, 20, "per_step", "rk4"), np.full(40, 8.0) + 0.03 * rng.standard_normal(40), 200, rng)

for name, tr in (("scalar", scalar), ("lorenz63", l63), ("lorenz96", l96)):
    print(f"{name}: {tr.T} steps, {tr.has_meas.sum()} measurements, state dim {tr.states.shape[1]}")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "l63.csv"
    l63.to_csv(path)
    back = Trajectory.from_csv(path)
    print("CSV round trip exact:", np.array_equal(back.states, l63.states))

fig, axes = plt.subplots(1, 3, figsize=(14, 4))
axes[0].plot(scalar.states[:, 0])
axes[0].set_title("scalar growth model")
axes[1].plot(l63.states[:, 0], l63.states[:, 2], lw=0.6)
axes[1].set_title("Lorenz-63, x1 vs x3")
axes[2].imshow(l96.states.T, aspect="auto", cmap="RdBu_r")
axes[2].set_title("Lorenz-96, state vs step")
fig.tight_layout()
fig.savefig("models.png", dpi=100)
