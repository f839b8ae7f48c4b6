"""Benchmark state-space models and truth simulation.

Every model is discrete in time: ``transition(X, k)`` maps a batch of states
at step ``k`` to step ``k + 1`` without noise, and additive Gaussian process
noise with covariance ``Q`` is added by :meth:`StateSpaceModel.propagate`.
Continuous-time systems are discretized with Euler-Maruyama, one filter step
per integration step.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionError, InvalidArgument
from .gaussmix import GaussianMixture, symmetrize

Transition = Callable[[np.ndarray, int], np.ndarray]
Measurement = Callable[[np.ndarray], np.ndarray]


def _psd_sqrt(Q: np.ndarray) -> np.ndarray:
    """Square-root factor ``S`` with ``S S^T = Q`` for a PSD (possibly singular) ``Q``."""
    vals, vecs = np.linalg.eigh(symmetrize(Q))
    if vals.min() < -1e-12 * max(1.0, vals.max()):
        raise InvalidArgument(f"noise covariance has a negative eigenvalue {vals.min():.3e}")
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """A discrete-time model ``x' = f(x, k) + w``, ``z = h(x) + v``.

    ``transition`` and ``measure`` operate on batches of shape ``(N, d)``.
    ``Q`` and ``R`` need only be PSD: ``Q`` is singular when noise enters only
    some coordinates, and ``R = 0`` gives noise-free measurements.
    ``F``/``H`` are set when the corresponding map is linear.
    """

    name: str
    dim: int
    meas_dim: int
    transition: Transition
    measure: Measurement
    Q: np.ndarray
    R: np.ndarray
    meas_every: int = 1
    dt: float = 1.0
    F: np.ndarray | None = None
    H: np.ndarray | None = None
    _noise_sqrt: np.ndarray = field(init=False, repr=False)
    _meas_sqrt: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float).reshape(self.dim, self.dim)
        R = np.asarray(self.R, dtype=float).reshape(self.meas_dim, self.meas_dim)
        if self.meas_every < 1:
            raise InvalidArgument(f"meas_every must be >= 1, got {self.meas_every}")
        object.__setattr__(self, "Q", symmetrize(Q))
        object.__setattr__(self, "R", symmetrize(R))
        object.__setattr__(self, "_noise_sqrt", _psd_sqrt(Q))
        object.__setattr__(self, "_meas_sqrt", _psd_sqrt(R))

    @property
    def meas_sqrt(self) -> np.ndarray:
        """Square-root factor of ``R``."""
        return self._meas_sqrt

    def step_mean(self, X: np.ndarray, k: int) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.dim)
        return self.transition(X, k)

    def propagate(self, X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
        """Advance a batch of states from step ``k`` to ``k + 1`` with process noise."""
        X = np.asarray(X, dtype=float).reshape(-1, self.dim)
        noise = rng.standard_normal(X.shape) @ self._noise_sqrt.T
        return self.transition(X, k) + noise

    def h(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.dim)
        return self.measure(X).reshape(X.shape[0], self.meas_dim)

    def is_measured(self, k: int) -> bool:
        return k >= 1 and k % self.meas_every == 0


# --- Example 1: scalar growth model -------------------------------------------------


def scalar_benchmark_step(x, k: int, noise=0.0):
    """``x/2 + 25 x / (1 + x^2) + 8 cos(1.2 k) + noise``."""
    x = np.asarray(x, dtype=float)
    return x / 2.0 + 25.0 * x / (1.0 + x * x) + 8.0 * np.cos(1.2 * k) + noise


def scalar_benchmark_measure(x, noise=0.0):
    """``x^2 / 20 + noise``."""
    x = np.asarray(x, dtype=float)
    return x * x / 20.0 + noise


def scalar_benchmark_model(Q: float, R: float, meas_every: int) -> StateSpaceModel:
    return StateSpaceModel(
        name="scalar_benchmark",
        dim=1,
        meas_dim=1,
        transition=lambda X, k: scalar_benchmark_step(X, k),
        measure=scalar_benchmark_measure,
        Q=np.array([[Q]]),
        R=np.array([[R]]),
        meas_every=meas_every,
    )


# --- Continuous-time systems --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ContinuousModelConfig:
    """Drift, step size and diffusion of an SDE ``dx = f(x) dt + dW``.

    With ``noise_mode="intensity"`` the per-step noise covariance is
    ``diffusion_cov * dt``; with ``"per_step"`` it is ``diffusion_cov`` itself.
    The deterministic part of a step is an Euler step by default, or a
    classical RK4 step with ``integrator="rk4"``; noise is additive either way.
    """

    drift: Callable[[np.ndarray], np.ndarray]
    dt: float
    diffusion_cov: np.ndarray
    substeps_per_measurement: int = 1
    noise_mode: str = "intensity"
    integrator: str = "euler"

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidArgument(f"dt must be positive, got {self.dt}")
        if self.noise_mode not in ("intensity", "per_step"):
            raise InvalidArgument(f"noise_mode must be 'intensity' or 'per_step', got {self.noise_mode!r}")
        if self.integrator not in ("euler", "rk4"):
            raise InvalidArgument(f"integrator must be 'euler' or 'rk4', got {self.integrator!r}")
        object.__setattr__(self, "diffusion_cov", np.atleast_2d(np.asarray(self.diffusion_cov, dtype=float)))

    @property
    def step_cov(self) -> np.ndarray:
        if self.noise_mode == "intensity":
            return self.diffusion_cov * self.dt
        return self.diffusion_cov


def drift_step(cfg: ContinuousModelConfig, x) -> np.ndarray:
    """Noise-free step of length ``cfg.dt``."""
    x = np.asarray(x, dtype=float)
    f, h = cfg.drift, cfg.dt
    if cfg.integrator == "euler":
        return x + f(x) * h
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_step(cfg: ContinuousModelConfig, x, rng: np.random.Generator | None = None) -> np.ndarray:
    """One Euler-Maruyama step ``x + f(x) dt + w`` (RK4 drift if configured); ``rng=None`` drops the noise."""
    x = np.asarray(x, dtype=float)
    out = drift_step(cfg, x)
    if rng is not None:
        S = _psd_sqrt(cfg.step_cov)
        out = out + rng.standard_normal(x.shape) @ S.T
    return out


def continuous_model(
    name: str,
    cfg: ContinuousModelConfig,
    measure: Measurement,
    meas_dim: int,
    R: np.ndarray,
    H: np.ndarray | None = None,
) -> StateSpaceModel:
    dim = cfg.diffusion_cov.shape[0]
    return StateSpaceModel(
        name=name,
        dim=dim,
        meas_dim=meas_dim,
        transition=lambda X, k: drift_step(cfg, X),
        measure=measure,
        Q=cfg.step_cov,
        R=R,
        meas_every=cfg.substeps_per_measurement,
        dt=cfg.dt,
        H=H,
    )


LORENZ63_PARAMS = (10.0, 28.0, 8.0 / 3.0)


def lorenz63_drift(x, params=LORENZ63_PARAMS) -> np.ndarray:
    """Lorenz-63 vector field; ``x`` has shape ``(..., 3)``."""
    a, b, g = params
    x = np.asarray(x, dtype=float)
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    return np.stack([a * (x2 - x1), b * x1 - x2 - x1 * x3, -g * x3 + x1 * x2], axis=-1)


def range_measure(x) -> np.ndarray:
    """Euclidean norm of each state, shape ``(..., 1)``."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.sum(x * x, axis=-1, keepdims=True))


def lorenz63_model(
    q: float,
    r: float,
    dt: float,
    meas_every: int,
    noise_mode: str = "intensity",
    full_state_noise: bool = False,
    integrator: str = "euler",
) -> StateSpaceModel:
    """Lorenz-63 with a range measurement.

    Process noise drives only ``x3`` unless ``full_state_noise`` is set.
    """
    diffusion = q * np.eye(3) if full_state_noise else np.diag([0.0, 0.0, q])
    cfg = ContinuousModelConfig(lorenz63_drift, dt, diffusion, meas_every, noise_mode, integrator)
    return continuous_model("lorenz63", cfg, range_measure, 1, np.array([[r]]))


def lorenz96_drift(x, F: float = 8.0) -> np.ndarray:
    """Lorenz-96 vector field with cyclic indices along the last axis."""
    x = np.asarray(x, dtype=float)
    return (np.roll(x, -1, axis=-1) - np.roll(x, 2, axis=-1)) * np.roll(x, 1, axis=-1) - x + F


def lorenz96_H(dim: int = 40) -> np.ndarray:
    """Selection matrix observing the odd (1-based) coordinates."""
    m = dim // 2
    H = np.zeros((m, dim))
    H[np.arange(m), 2 * np.arange(m)] = 1.0
    return H


def lorenz96_model(
    dim: int,
    F: float,
    q: float,
    r: float,
    dt: float,
    meas_every: int,
    noise_mode: str = "intensity",
    integrator: str = "euler",
) -> StateSpaceModel:
    H = lorenz96_H(dim)
    cfg = ContinuousModelConfig(lambda x: lorenz96_drift(x, F), dt, q * np.eye(dim), meas_every, noise_mode, integrator)
    return continuous_model("lorenz96", cfg, lambda X: X @ H.T, H.shape[0], r * np.eye(H.shape[0]), H=H)


def demo_bimodal_drift(x) -> np.ndarray:
    """``(-x1/2, sin(x2/2))``; splits an ensemble straddling ``x2 = 0`` in two."""
    x = np.asarray(x, dtype=float)
    return np.stack([-x[..., 0] / 2.0, np.sin(x[..., 1] / 2.0)], axis=-1)


DEMO_BIMODAL_PRIOR = GaussianMixture.single([-12.0, 0.0], np.diag([0.2, 1.0]))


def demo_bimodal_model(dt: float = 0.1, q: float = 1e-2) -> StateSpaceModel:
    cfg = ContinuousModelConfig(demo_bimodal_drift, dt, q * np.eye(2), 1)
    return continuous_model("demo_bimodal", cfg, lambda X: X.copy(), 2, np.eye(2), H=np.eye(2))


def linear_model(F, H, Q, R, meas_every: int = 1, name: str = "linear") -> StateSpaceModel:
    F = np.atleast_2d(np.asarray(F, dtype=float))
    H = np.atleast_2d(np.asarray(H, dtype=float))
    return StateSpaceModel(
        name=name,
        dim=F.shape[0],
        meas_dim=H.shape[0],
        transition=lambda X, k: X @ F.T,
        measure=lambda X: X @ H.T,
        Q=Q,
        R=R,
        meas_every=meas_every,
        F=F,
        H=H,
    )


def linear_oracle_model() -> StateSpaceModel:
    """Stable 2-state rotation-decay system observed through its first coordinate."""
    th = 0.3
    F = 0.95 * np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    return linear_model(F, [[1.0, 0.0]], 0.1 * np.eye(2), [[0.5]], name="linear_oracle")


LINEAR_ORACLE_PRIOR = GaussianMixture.single([1.0, -1.0], np.eye(2))


# --- truth simulation ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Truth states for steps ``0..T`` and the measurement stream.

    ``measurements[k]`` is NaN wherever ``has_meas[k]`` is false.
    """

    states: np.ndarray
    has_meas: np.ndarray
    measurements: np.ndarray
    dt: float = 1.0

    @property
    def T(self) -> int:
        return self.states.shape[0] - 1

    def z(self, k: int) -> np.ndarray | None:
        return self.measurements[k] if self.has_meas[k] else None

    def to_csv(self, path) -> None:
        d = self.states.shape[1]
        m = self.measurements.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "time"] + [f"x_{i + 1}" for i in range(d)] + ["has_meas"] + [f"z_{i + 1}" for i in range(m)])
            for k in range(self.T + 1):
                z = [repr(float(v)) for v in self.measurements[k]] if self.has_meas[k] else [""] * m
                w.writerow([k, repr(k * self.dt)] + [repr(float(v)) for v in self.states[k]] + [int(self.has_meas[k])] + z)

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        xcols = [i for i, c in enumerate(header) if c.startswith("x_")]
        zcols = [i for i, c in enumerate(header) if c.startswith("z_")]
        if "has_meas" not in header or not xcols:
            raise DimensionError(f"{path}: missing x_*/has_meas columns")
        hcol = header.index("has_meas")
        states = np.array([[float(r[i]) for i in xcols] for r in body])
        has = np.array([r[hcol] == "1" for r in body])
        meas = np.array([[float(r[i]) if r[i] != "" else np.nan for i in zcols] for r in body]).reshape(len(body), len(zcols))
        times = [float(r[1]) for r in body]
        dt = times[1] - times[0] if len(times) > 1 else 1.0
        return cls(states, has, meas, dt)


def simulate_truth(
    model: StateSpaceModel,
    x0,
    T: int,
    rng: np.random.Generator,
    meas_rng: np.random.Generator | None = None,
) -> Trajectory:
    """Simulate ``T`` steps from ``x0``; measure at every ``meas_every``-th step (k >= 1).

    ``rng`` drives process noise, ``meas_rng`` (default: ``rng``) measurement noise.
    """
    if T < 1:
        raise InvalidArgument(f"T must be >= 1, got {T}")
    meas_rng = rng if meas_rng is None else meas_rng
    d, m = model.dim, model.meas_dim
    states = np.zeros((T + 1, d))
    states[0] = np.asarray(x0, dtype=float).reshape(d)
    has = np.zeros(T + 1, dtype=bool)
    meas = np.full((T + 1, m), np.nan)
    for k in range(T):
        states[k + 1] = model.propagate(states[k][None, :], k, rng)[0]
        if model.is_measured(k + 1):
            has[k + 1] = True
            meas[k + 1] = model.h(states[k + 1])[0] + model.meas_sqrt @ meas_rng.standard_normal(m)
    return Trajectory(states, has, meas, model.dt)
