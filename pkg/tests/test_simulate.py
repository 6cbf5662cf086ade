import numpy as np
import pytest

from geodrive.operators import KET_0
from geodrive.schedules import ControlSchedule
from geodrive.simulate import (NoiseModel, _max_workers,
                               infidelity_scaling_exponent, overlap_fidelity,
                               relaxation_channels, run_lindblad,
                               run_schrodinger, sweep_delta)

GAMMA_NV = 0.002  # 2 kHz in rad/us


def quiet_schedule(duration=1.0, n=501):
    t = np.linspace(0, duration, n)
    z = np.zeros(n)
    return ControlSchedule(time=t, omega=z, delta=z.copy(), phi=z.copy())


class TestSchrodinger:
    def test_geometric_ideal_transfer(self, scaled_schedule):
        result = run_schrodinger(scaled_schedule)
        assert result.final_fidelity >= 1 - 1e-6
        assert result.trace_defect <= 1e-9

    def test_populations_sum_to_one(self, scaled_schedule):
        result = run_schrodinger(scaled_schedule, NoiseModel(delta=0.3))
        sums = result.populations.sum(axis=1)
        assert np.max(np.abs(sums - 1)) <= 1e-6

    def test_center_mode_returns_home(self, scaled_schedule):
        # theta(T) = pi maps the middle dynamical mode back onto |0>
        result = run_schrodinger(scaled_schedule, initial=KET_0)
        assert result.populations[-1, 1] >= 1 - 1e-6

    def test_rejects_relaxation(self, scaled_schedule):
        with pytest.raises(ValueError):
            run_schrodinger(scaled_schedule, NoiseModel(gamma=0.001))


class TestLindblad:
    def test_channels_connect_center_level_only(self):
        for op in relaxation_channels():
            assert op[0, 2] == 0 and op[2, 0] == 0  # no direct -1 <-> +1 jumps

    def test_matches_schrodinger_without_relaxation(self, scaled_schedule):
        noise = NoiseModel(delta=0.4)
        tight = dict(n_samples=201, rtol=1e-11, atol=1e-13)
        pure = run_schrodinger(scaled_schedule, noise, **tight)
        mixed = run_lindblad(scaled_schedule, noise, **tight)
        assert np.max(np.abs(pure.populations - mixed.populations)) <= 1e-8

    def test_trace_preserved_under_relaxation(self):
        result = run_lindblad(quiet_schedule(300.0), NoiseModel(gamma=GAMMA_NV))
        assert result.trace_defect <= 1e-8

    def test_relaxation_drives_toward_uniformity(self):
        # slowest relaxation mode decays at rate Gamma: run ~5 time constants
        result = run_lindblad(quiet_schedule(2500.0), NoiseModel(gamma=GAMMA_NV))
        assert np.allclose(result.populations[-1], 1 / 3, atol=0.05)
        # monotone decay out of the initial level
        assert np.all(np.diff(result.p_minus1) <= 1e-12)

    def test_uniform_state_is_stationary(self):
        rho0 = np.eye(3, dtype=complex) / 3
        result = run_lindblad(quiet_schedule(50.0), NoiseModel(gamma=GAMMA_NV),
                              initial=rho0)
        assert np.max(np.abs(result.populations - 1 / 3)) <= 1e-9

    def test_positivity_and_hermiticity_reported(self, scaled_schedule):
        result = run_lindblad(scaled_schedule, NoiseModel(delta=0.5, gamma=GAMMA_NV))
        assert result.metadata["min_eigenvalue"] >= -1e-8
        assert result.metadata["hermiticity_defect"] <= 1e-8

    def test_noisy_transfer_stays_high(self, scaled_schedule):
        result = run_lindblad(scaled_schedule, NoiseModel(delta=0.5, gamma=GAMMA_NV))
        assert result.final_fidelity >= 0.98

    def test_negative_gamma_rejected(self):
        with pytest.raises(ValueError):
            NoiseModel(gamma=-0.1)

    def test_invalid_initial_density_rejected(self):
        bad = np.diag([0.7, 0.7, 0.0]).astype(complex)  # trace 1.4
        with pytest.raises(ValueError, match="density"):
            run_lindblad(quiet_schedule(1.0), NoiseModel(gamma=GAMMA_NV), initial=bad)

    def test_scheme_label_recorded(self, scaled_schedule):
        result = run_schrodinger(scaled_schedule, n_samples=51, label="geometric")
        assert result.metadata["scheme"] == "geometric"

    def test_runs_are_deterministic(self, scaled_schedule):
        noise = NoiseModel(delta=0.21, gamma=GAMMA_NV)
        first = run_lindblad(scaled_schedule, noise, n_samples=101)
        second = run_lindblad(scaled_schedule, noise, n_samples=101)
        assert np.array_equal(first.populations, second.populations)


class TestSweep:
    def test_zero_row_matches_single_run(self, scaled_schedule):
        rows = sweep_delta(scaled_schedule, [0.0], gamma=GAMMA_NV, n_samples=101)
        single = run_lindblad(scaled_schedule, NoiseModel(gamma=GAMMA_NV),
                              n_samples=101)
        assert rows[0, 1] == single.final_fidelity

    def test_robustness_curve_nearly_symmetric(self, scaled_schedule):
        deltas = np.array([-0.4, -0.2, 0.2, 0.4])
        rows = sweep_delta(scaled_schedule, deltas, gamma=0.0, n_samples=101)
        assert abs(rows[0, 1] - rows[3, 1]) <= 2e-3
        assert abs(rows[1, 1] - rows[2, 1]) <= 2e-3

    def test_geometric_dominates_baselines(self, scaled_schedule, sta, srt):
        # ordering claim away from delta = 0, where all schemes are
        # relaxation-limited and essentially tie
        deltas = np.array([-0.5, -0.25, 0.25, 0.5])
        geo = sweep_delta(scaled_schedule, deltas, gamma=GAMMA_NV, n_samples=201)
        sta_rows = sweep_delta(sta, deltas, gamma=GAMMA_NV, n_samples=201)
        srt_rows = sweep_delta(srt, deltas, gamma=GAMMA_NV, n_samples=201)
        assert np.all(geo[:, 1] >= sta_rows[:, 1])
        assert np.all(geo[:, 1] >= srt_rows[:, 1])

    def test_empty_grid_rejected(self, sta):
        with pytest.raises(ValueError):
            sweep_delta(sta, [])

    def test_thread_cap_env(self, monkeypatch):
        monkeypatch.setenv("GEODRIVE_THREADS", "2")
        assert _max_workers() == 2
        monkeypatch.setenv("GEODRIVE_THREADS", "not-a-number")
        assert _max_workers() >= 1
        monkeypatch.delenv("GEODRIVE_THREADS")
        assert _max_workers() >= 1


class TestScalingExponents:
    def test_geometric_quartic_suppression(self, scaled_schedule):
        exponent = infidelity_scaling_exponent(scaled_schedule, 0.01, 0.1)
        assert exponent >= 3.8

    def test_sta_quadratic(self, sta):
        assert infidelity_scaling_exponent(sta, 0.01, 0.1) == pytest.approx(2.0, abs=0.2)

    def test_srt_quadratic(self, srt):
        assert infidelity_scaling_exponent(srt, 0.01, 0.1) == pytest.approx(2.0, abs=0.3)

    def test_floor_exclusion_error(self, scaled_schedule):
        # far below the numerical floor every point is discarded
        with pytest.raises(Exception, match="floor|fewer"):
            infidelity_scaling_exponent(scaled_schedule, 1e-9, 3e-9, n=5)

    def test_bad_range_rejected(self, sta):
        with pytest.raises(ValueError):
            infidelity_scaling_exponent(sta, 0.1, 0.01)

    def test_overlap_equals_population_for_exact_transfer(self, scaled_schedule):
        pop = run_schrodinger(scaled_schedule, NoiseModel(delta=0.05),
                              rtol=1e-12, atol=1e-14).final_fidelity
        ovl = overlap_fidelity(scaled_schedule, 0.05)
        assert ovl == pytest.approx(pop, abs=1e-8)
