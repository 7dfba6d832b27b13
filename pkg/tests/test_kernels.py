import numpy as np
import pytest
from dataclasses import replace

from diffkf import kernels
from diffkf._accel import NUMBA_ENABLED
from diffkf.harness import (
    NumericalAbort,
    fig1_config,
    prepare_run_noise,
    reference_run,
    simulate_one,
)


def kernel_args(config, run_index, distributed):
    delta_seq, xi_seq, v_seq = prepare_run_noise(config, run_index)
    ks = config.record_ks()
    record_at = np.full(config.horizon + 1, -1, dtype=np.int64)
    record_at[ks] = np.arange(ks.size)
    return [
        distributed,
        config.adjacency, config.A, config.B, config.C,
        config.x0, config.theta0, config.theta_hat0, config.P0,
        config.Q, config.r,
        delta_seq, xi_seq, v_seq,
        record_at, ks.size,
    ]


@pytest.fixture(scope="module")
def small_config():
    return replace(fig1_config(runs=1, horizon=300), record_stride=25)


class TestKernelAgainstModules:
    @pytest.mark.parametrize("distributed", [True, False])
    def test_matches_module_level_replay(self, small_config, distributed):
        err_kernel = simulate_one(small_config, 0, distributed)
        traj = reference_run(small_config, 0, distributed)
        err_modules = traj.squared_errors()[small_config.record_ks()]
        np.testing.assert_allclose(err_kernel, err_modules, rtol=0, atol=1e-11)

    def test_same_noise_drives_both_modes(self, small_config):
        # The comparison uses one signal realization per run: regressors
        # and true parameter paths must match across modes.
        a = reference_run(small_config, 0, True)
        b = reference_run(small_config, 0, False)
        np.testing.assert_array_equal(a.phi, b.phi)
        np.testing.assert_array_equal(a.theta, b.theta)
        np.testing.assert_array_equal(a.y, b.y)


@pytest.mark.skipif(not NUMBA_ENABLED, reason="numba disabled")
class TestCompiledVsInterpreted:
    def test_paths_agree(self, small_config):
        args = kernel_args(small_config, 0, True)
        err_c, status_c, _ = kernels.simulate_run(*args)
        err_i, status_i, _ = kernels.simulate_run.py_func(*args)
        assert status_c == status_i == kernels.STATUS_OK
        np.testing.assert_allclose(err_c, err_i, rtol=0, atol=1e-10)


class TestStatusCodes:
    def test_poisoned_innovations_abort_with_step(self, small_config):
        args = kernel_args(small_config, 0, True)
        args[12] = args[12].copy()
        args[12][40] = np.nan  # xi_seq: regressor state goes non-finite
        _, status, step = kernels.simulate_run(*args)
        assert status == kernels.STATUS_NOT_FINITE
        assert step == 41  # the poisoned state enters the regressor one step later

    def test_numerical_abort_carries_context(self, monkeypatch, small_config):
        def broken(*args, **kwargs):
            return np.zeros((1, 3)), kernels.STATUS_NOT_FINITE, 17

        monkeypatch.setattr(kernels, "simulate_run", broken)
        with pytest.raises(NumericalAbort) as exc:
            simulate_one(small_config, 4, True)
        assert exc.value.run_index == 4
        assert exc.value.step == 17


class TestDeterminism:
    def test_repeated_calls_bitwise_identical(self, small_config):
        a = simulate_one(small_config, 3, True)
        b = simulate_one(small_config, 3, True)
        np.testing.assert_array_equal(a, b)

    def test_distinct_runs_differ(self, small_config):
        a = simulate_one(small_config, 0, True)
        b = simulate_one(small_config, 1, True)
        assert (a != b).any()
