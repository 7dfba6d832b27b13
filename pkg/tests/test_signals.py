import numpy as np
import pytest

from diffkf.excitation import normalized_gram
from diffkf.harness import fig1_config
from diffkf.signals import (
    NoiseSpec,
    ObservationRecord,
    ParameterProcess,
    RegressorGenerator,
    SensorObservation,
    SignalConfigError,
    SignalSimulator,
    observe,
    stack,
    stream,
)


def fig1_generator(sensor: int, seed=1) -> RegressorGenerator:
    cfg = fig1_config()
    return RegressorGenerator(
        cfg.A[sensor], cfg.B[sensor], cfg.C[sensor], cfg.x0[sensor], cfg.xi_cov[sensor],
        stream(seed, 0, 1 + sensor),
    )


class TestParameterProcess:
    def test_zero_increments_keep_parameter_constant(self):
        proc = ParameterProcess([1.0, 2.0], np.zeros((2, 2)), stream(0, 0, 0))
        for _ in range(50):
            theta, delta = proc.step()
        np.testing.assert_array_equal(theta, [1.0, 2.0])
        np.testing.assert_array_equal(delta, 0.0)

    def test_random_walk_increment_covariance(self):
        # Increments should be i.i.d. Gaussian with covariance 0.3 I.
        proc = ParameterProcess(np.ones(3), 0.3 * np.eye(3), stream(3, 0, 0))
        deltas = np.stack([proc.step()[1] for _ in range(20000)])
        cov = np.cov(deltas.T)
        np.testing.assert_allclose(cov, 0.3 * np.eye(3), atol=0.02)
        np.testing.assert_allclose(proc.theta, 1.0 + deltas.sum(axis=0), rtol=1e-12)

    def test_identical_seeds_identical_trajectories(self):
        a = ParameterProcess(np.zeros(2), 0.5 * np.eye(2), stream(9, 4, 0))
        b = ParameterProcess(np.zeros(2), 0.5 * np.eye(2), stream(9, 4, 0))
        for _ in range(100):
            ta, da = a.step()
            tb, db = b.step()
            np.testing.assert_array_equal(ta, tb)
            np.testing.assert_array_equal(da, db)

    def test_rejects_asymmetric_covariance(self):
        with pytest.raises(SignalConfigError):
            ParameterProcess(np.zeros(2), [[1.0, 0.5], [0.0, 1.0]], stream(0, 0, 0))


class TestRegressorGenerator:
    def test_first_sensor_outputs_touch_only_first_coordinate(self):
        gen = fig1_generator(0)
        for _ in range(200):
            phi = gen.step()
            assert phi[1] == 0.0 and phi[2] == 0.0

    def test_zero_input_zero_state_stays_zero(self):
        gen = RegressorGenerator(
            0.5 * np.eye(3), np.zeros((3, 1)), np.eye(3), np.zeros(3), [[0.3]], stream(0, 0, 1)
        )
        for _ in range(20):
            np.testing.assert_array_equal(gen.step(), 0.0)

    def test_memoryless_generator_reproduces_innovations(self):
        # With A = 0, B = e1, C = I the regressor is (xi_k, 0, 0).
        rng = stream(5, 0, 1)
        gen = RegressorGenerator(np.zeros((3, 3)), [[1.0], [0.0], [0.0]], np.eye(3), np.ones(3), [[0.3]], rng)
        expected_rng = stream(5, 0, 1)
        factor = np.sqrt(0.3)
        for _ in range(100):
            phi = gen.step()
            xi = factor * expected_rng.standard_normal(1)
            np.testing.assert_allclose(phi, [xi[0], 0.0, 0.0], rtol=0, atol=0)

    def test_dimension_mismatch_raises(self):
        with pytest.raises(SignalConfigError):
            RegressorGenerator(np.eye(3), np.zeros((2, 1)), np.eye(3), np.ones(3), [[0.3]], stream(0, 0, 1))

    def test_clone_freezes_state_without_advancing_original(self):
        gen = fig1_generator(2)
        for _ in range(10):
            gen.advance()
        snapshot = gen.x.copy()
        clone = gen.clone(stream(99, 0, 0))
        clone.step()
        np.testing.assert_array_equal(gen.x, snapshot)


class TestObserve:
    def test_noiseless_inner_product(self):
        spec = NoiseSpec(variance=0.0)
        assert observe([1.0, 2.0], [3.0, 4.0], spec, stream(0, 0, 2)) == 11.0

    def test_zero_regressor_returns_pure_noise(self):
        spec = NoiseSpec(variance=0.5)
        rng = stream(1, 0, 2)
        expected = NoiseSpec(variance=0.5).draw(stream(1, 0, 2))
        assert observe(np.ones(3), np.zeros(3), spec, rng) == expected

    def test_empirical_noise_variance(self):
        spec = NoiseSpec(variance=0.3)
        rng = stream(2, 0, 2)
        theta = np.array([1.0, -2.0, 0.5])
        phi = np.array([0.3, 1.1, -0.7])
        residuals = np.array([observe(theta, phi, spec, rng) - phi @ theta for _ in range(100000)])
        assert residuals.var() == pytest.approx(0.3, abs=0.01)

    def test_dimension_mismatch(self):
        with pytest.raises(SignalConfigError):
            observe(np.ones(3), np.ones(2), NoiseSpec(), stream(0, 0, 2))

    def test_negative_variance_rejected(self):
        with pytest.raises(SignalConfigError):
            NoiseSpec(variance=-1.0)


class TestStack:
    def test_single_sensor_identity_stacking(self):
        record = ObservationRecord(k=0, y=np.array([2.0]), phi=np.array([[1.0, 3.0]]))
        views = stack(record)
        np.testing.assert_array_equal(views.Phi[:, 0], [1.0, 3.0])
        assert views.Phi.shape == (2, 1)

    def test_two_sensor_scalar_block_diagonal(self):
        record = ObservationRecord(k=0, y=np.array([1.0, 1.0]), phi=np.array([[2.0], [3.0]]))
        np.testing.assert_array_equal(stack(record).Phi, [[2.0, 0.0], [0.0, 3.0]])

    def test_construction_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n, m = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            theta = rng.normal(0, 3, m)
            phi = rng.normal(0, 2, (n, m))
            v = rng.normal(0, 1, n)
            y = phi @ theta + v
            record = ObservationRecord(k=0, y=y, phi=phi, theta=theta, v=v)
            views = stack(record)
            residual = views.Y - views.Phi.T @ views.Theta - views.V
            scale = max(1.0, np.abs(y).max())
            assert np.abs(residual).max() <= 1e-15 * scale

    def test_mismatched_time_indices_rejected(self):
        obs = [
            SensorObservation(k=0, y=1.0, phi=np.ones(2)),
            SensorObservation(k=1, y=2.0, phi=np.ones(2)),
        ]
        with pytest.raises(SignalConfigError, match="time"):
            ObservationRecord.from_sensor_observations(obs)


class TestSimulatorProperties:
    def build(self, seed):
        cfg = fig1_config()
        parameter = ParameterProcess(cfg.theta0, cfg.delta_cov, stream(seed, 0, 0))
        gens = [
            RegressorGenerator(cfg.A[i], cfg.B[i], cfg.C[i], cfg.x0[i], cfg.xi_cov[i], stream(seed, 0, 1 + i))
            for i in range(3)
        ]
        noises = [NoiseSpec(variance=float(cfg.noise_var[i])) for i in range(3)]
        return SignalSimulator(parameter, gens, noises, stream(seed, 0, 4))

    def test_bitwise_reproducibility(self):
        sim_a, sim_b = self.build(11), self.build(11)
        for _ in range(200):
            ra, rb = sim_a.step(), sim_b.step()
            np.testing.assert_array_equal(ra.y, rb.y)
            np.testing.assert_array_equal(ra.phi, rb.phi)
            np.testing.assert_array_equal(ra.delta_next, rb.delta_next)

    def test_records_satisfy_model_identity(self):
        sim = self.build(12)
        for _ in range(100):
            record = sim.step()
            residual = record.y - record.phi @ record.theta - record.v
            scale = max(1.0, np.abs(record.y).max())
            assert np.abs(residual).max() <= 1e-15 * scale

    def test_per_sensor_gram_matrices_are_singular(self):
        # Each reference sensor excites a strict subspace: coordinate 1,
        # coordinate 2, and span{(0, 1, 1)} respectively.
        sim = self.build(13)
        phis = np.stack([sim.step().phi for _ in range(400)])  # (K, n, m)
        for i in range(3):
            gram = normalized_gram(phis[:, i, :])
            assert np.linalg.eigvalsh(gram).min() < 1e-12
