import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pgmfilter.errors import InvalidArgument
from pgmfilter.gaussmix import sample_mixture
from pgmfilter.models import (
    DEMO_BIMODAL_PRIOR,
    ContinuousModelConfig,
    Trajectory,
    demo_bimodal_drift,
    demo_bimodal_model,
    integrate_step,
    linear_model,
    linear_oracle_model,
    lorenz63_drift,
    lorenz63_model,
    lorenz96_drift,
    lorenz96_H,
    lorenz96_model,
    range_measure,
    scalar_benchmark_measure,
    scalar_benchmark_model,
    scalar_benchmark_step,
    simulate_truth,
)

from oracles import lorenz63_rhs, rk4_trajectory


def test_scalar_step_at_origin():
    assert scalar_benchmark_step(0.0, 0) == 8.0


def test_scalar_fixed_point_without_forcing():
    x = 7.0
    assert x / 2 + 25 * x / (1 + x * x) == pytest.approx(7.0)
    k = math.pi / 2 / 1.2  # cos(1.2 k) = 0
    assert scalar_benchmark_step(7.0, k) == pytest.approx(7.0, abs=1e-12)


def test_scalar_measurement():
    assert scalar_benchmark_measure(10.0) == 5.0


def test_lorenz63_drift_values():
    np.testing.assert_array_equal(lorenz63_drift(np.zeros(3)), np.zeros(3))
    np.testing.assert_allclose(lorenz63_drift(np.ones(3)), [0.0, 26.0, -5.0 / 3.0])


def test_range_measurement():
    assert range_measure(np.array([3.0, 4.0, 12.0]))[0] == pytest.approx(13.0)


def test_lorenz96_equilibrium():
    np.testing.assert_allclose(lorenz96_drift(np.full(40, 8.0)), 0.0, atol=1e-12)


def test_lorenz96_stencil_locality():
    x = np.full(40, 8.0)
    j = 17
    x[j] += 1e-3
    nz = set(np.flatnonzero(np.abs(lorenz96_drift(x)) > 1e-15))
    assert nz <= {(j + o) % 40 for o in (-2, -1, 0, 1, 2)}
    assert j in nz


def test_lorenz96_selection():
    H = lorenz96_H(40)
    np.testing.assert_array_equal(H @ np.arange(1.0, 41.0), np.arange(1.0, 40.0, 2.0))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), shift=st.integers(1, 39))
def test_lorenz96_rotation_equivariance(seed, shift):
    x = np.random.default_rng(seed).normal(0, 5, 40)
    np.testing.assert_allclose(np.roll(lorenz96_drift(x), shift), lorenz96_drift(np.roll(x, shift)), rtol=1e-12, atol=1e-12)


def test_demo_drift_values():
    np.testing.assert_array_equal(demo_bimodal_drift(np.zeros(2)), np.zeros(2))
    np.testing.assert_allclose(demo_bimodal_drift(np.array([-12.0, math.pi])), [6.0, 1.0])


def test_integrate_step_zero_drift_identity():
    cfg = ContinuousModelConfig(lambda x: np.zeros_like(x), 0.1, np.zeros((2, 2)))
    x = np.array([1.5, -2.0])
    np.testing.assert_array_equal(integrate_step(cfg, x), x)


def test_integrate_step_linear_decay():
    cfg = ContinuousModelConfig(lambda x: -x, 0.01, np.zeros((1, 1)))
    assert integrate_step(cfg, np.array([1.0]))[0] == pytest.approx(0.99)


def _euler_to(x0, dt, t_end):
    cfg = ContinuousModelConfig(lorenz63_drift, dt, np.zeros((3, 3)))
    x = np.array(x0, dtype=float)
    for _ in range(int(round(t_end / dt))):
        x = integrate_step(cfg, x)
    return x


def test_lorenz63_euler_tracks_reference_to_t1():
    # 1000 Euler steps reach t=1 at dt=0.001; the reference is RK4 at the same step
    x0 = np.array([-0.2, -0.2, 8.0])
    ref = rk4_trajectory(lorenz63_rhs, x0, 0.001, 1000)[-1]
    x = _euler_to(x0, 0.001, 1.0)
    assert np.linalg.norm(x - ref) / np.linalg.norm(ref) < 0.10


@pytest.mark.parametrize("x0", [[1.0, 1.0, 20.0], [-0.2, -0.2, 8.0], [5.0, 5.0, 25.0]])
def test_lorenz63_euler_is_first_order(x0):
    ref = rk4_trajectory(lorenz63_rhs, x0, 0.0001, 10000)[-1]
    e1 = np.linalg.norm(_euler_to(x0, 0.01, 1.0) - ref)
    e2 = np.linalg.norm(_euler_to(x0, 0.001, 1.0) - ref)
    assert 5.0 < e1 / e2 < 20.0


def test_rk4_option_matches_fine_reference():
    cfg = ContinuousModelConfig(lorenz63_drift, 0.01, np.zeros((3, 3)), integrator="rk4")
    x0 = np.array([1.0, 1.0, 20.0])
    x = x0.copy()
    for _ in range(100):
        x = integrate_step(cfg, x)
    ref = rk4_trajectory(lorenz63_rhs, x0, 0.001, 1000)[-1]
    assert np.linalg.norm(x - ref) / np.linalg.norm(ref) < 1e-4


def test_lorenz96_rk4_stays_bounded_at_coarse_step():
    rng = np.random.default_rng(0)
    model = lorenz96_model(40, 8.0, 0.01, 0.01, 0.05, 20, "per_step", "rk4")
    x = 8.0 + np.sqrt(1e-3) * rng.standard_normal((1, 40))
    for k in range(200):
        x = model.propagate(x, k, rng)
    assert np.all(np.isfinite(x)) and np.abs(x).max() < 30


def test_noise_modes():
    a = ContinuousModelConfig(lorenz63_drift, 0.01, np.eye(3))
    b = ContinuousModelConfig(lorenz63_drift, 0.01, np.eye(3), noise_mode="per_step")
    np.testing.assert_allclose(a.step_cov, 0.01 * np.eye(3))
    np.testing.assert_allclose(b.step_cov, np.eye(3))
    with pytest.raises(InvalidArgument):
        ContinuousModelConfig(lorenz63_drift, 0.01, np.eye(3), noise_mode="other")
    with pytest.raises(InvalidArgument):
        ContinuousModelConfig(lorenz63_drift, 0.01, np.eye(3), integrator="midpoint")


def test_lorenz63_noise_only_on_third_coordinate_by_default():
    m = lorenz63_model(1.0, 1.0, 0.01, 10)
    np.testing.assert_allclose(m.Q, np.diag([0.0, 0.0, 0.01]))
    rng = np.random.default_rng(0)
    X = np.tile([1.0, 2.0, 3.0], (100, 1))
    Y = m.propagate(X, 0, rng)
    np.testing.assert_allclose(Y[:, :2], m.step_mean(X, 0)[:, :2])
    assert np.std(Y[:, 2]) > 0
    full = lorenz63_model(1.0, 1.0, 0.01, 10, full_state_noise=True)
    np.testing.assert_allclose(full.Q, 0.01 * np.eye(3))


def test_propagate_is_pure_given_seed():
    m = scalar_benchmark_model(10.0, 1.0, 2)
    X = np.linspace(-3, 3, 11)[:, None]
    a = m.propagate(X, 4, np.random.default_rng(3))
    b = m.propagate(X, 4, np.random.default_rng(3))
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(X, np.linspace(-3, 3, 11)[:, None])


def test_simulate_truth_measurement_count():
    tr = simulate_truth(scalar_benchmark_model(10.0, 1.0, 2), [0.0], 52, np.random.default_rng(0))
    assert tr.has_meas.sum() == 26
    assert tr.has_meas[2] and not tr.has_meas[1] and not tr.has_meas[0]
    assert np.all(np.isnan(tr.measurements[~tr.has_meas]))


def test_simulate_truth_noise_free_identity_measurement():
    m = linear_model([[0.9]], [[1.0]], [[0.5]], [[0.0]])
    tr = simulate_truth(m, [1.0], 20, np.random.default_rng(1))
    np.testing.assert_array_equal(tr.measurements[1:, 0], tr.states[1:, 0])


def test_simulate_truth_deterministic():
    m = lorenz63_model(1.0, 1.0, 0.01, 10)
    a = simulate_truth(m, [0.1, 0.2, 8.0], 100, np.random.default_rng(5), np.random.default_rng(6))
    b = simulate_truth(m, [0.1, 0.2, 8.0], 100, np.random.default_rng(5), np.random.default_rng(6))
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.measurements, b.measurements)


def test_trajectory_csv_round_trip(tmp_path):
    tr = simulate_truth(lorenz63_model(1.0, 1.0, 0.01, 10), [0.1, 0.2, 8.0], 30, np.random.default_rng(2))
    p = tmp_path / "t.csv"
    tr.to_csv(p)
    back = Trajectory.from_csv(p)
    np.testing.assert_array_equal(back.states, tr.states)
    np.testing.assert_array_equal(back.has_meas, tr.has_meas)
    np.testing.assert_array_equal(back.measurements[tr.has_meas], tr.measurements[tr.has_meas])
    assert back.dt == pytest.approx(0.01)


def test_demo_system_splits_in_second_coordinate():
    rng = np.random.default_rng(0)
    model = demo_bimodal_model()
    X = sample_mixture(DEMO_BIMODAL_PRIOR, 2000, rng)
    for k in range(100):
        X = model.propagate(X, k, rng)
    frac_pos = np.mean(X[:, 1] > 0)
    assert 0.2 <= frac_pos <= 0.8
    assert np.min(np.abs(X[:, 1])) > 0.0


def test_linear_oracle_is_stable():
    m = linear_oracle_model()
    assert np.max(np.abs(np.linalg.eigvals(m.F))) < 1
    np.testing.assert_array_equal(m.H, [[1.0, 0.0]])


def test_negative_noise_rejected():
    with pytest.raises(InvalidArgument):
        linear_model([[1.0]], [[1.0]], [[-1.0]], [[1.0]])
