import numpy as np
import pytest
from scipy.linalg import expm

from geodrive.operators import (K_X, K_Y, K_Z, KET_MINUS1, KET_0, KET_PLUS1,
                                IntegrationFailure, commutator, hamiltonian,
                                norm_defect, propagate_piecewise,
                                propagate_operator, scaled_frobenius_norm,
                                spin1_generators, unitarity_defect)

SQRT2 = np.sqrt(2.0)


def random_unitary(rng):
    z = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


class TestGenerators:
    def test_kz_is_diagonal(self):
        kx, ky, kz = spin1_generators()
        assert np.array_equal(kz, np.diag([1.0, 0.0, -1.0]))

    def test_explicit_entries(self):
        kx, ky, kz = spin1_generators()
        assert np.allclose(kx, np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]]) / SQRT2)
        assert np.allclose(ky, np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]]) / SQRT2)

    @pytest.mark.parametrize("a, b, c", [(K_X, K_Y, K_Z), (K_Y, K_Z, K_X), (K_Z, K_X, K_Y)])
    def test_commutation_relations(self, a, b, c):
        assert np.allclose(commutator(a, b), 1j * c, atol=1e-15, rtol=0)

    def test_self_commutator_vanishes(self):
        assert np.all(commutator(K_X, K_X) == 0)

    def test_kx_couples_center_state(self):
        out = K_X @ KET_0
        assert np.allclose(out, (KET_MINUS1 + KET_PLUS1) / SQRT2, atol=1e-15)


class TestHamiltonian:
    def test_zero_fields(self):
        assert np.all(hamiltonian(0.0, 0.0, 0.0) == 0)

    def test_resonant_x_drive(self):
        assert np.allclose(hamiltonian(1.0, 0.0, 0.0), K_X, atol=1e-15)

    def test_explicit_matrix_entries(self):
        h = hamiltonian(1.0, 2.0, np.pi / 2)
        assert h[0, 0] == pytest.approx(2.0)
        assert h[0, 1] == pytest.approx(-1j / SQRT2, abs=1e-15)

    def test_expansion_matches_explicit_matrix(self, rng):
        # the K-operator expansion and the explicit tridiagonal form must agree
        for _ in range(25):
            om = rng.uniform(0, 5)
            de = rng.uniform(-5, 5)
            ph = rng.uniform(-2 * np.pi, 2 * np.pi)
            explicit = np.array([
                [de, om / SQRT2 * np.exp(-1j * ph), 0],
                [om / SQRT2 * np.exp(1j * ph), 0, om / SQRT2 * np.exp(-1j * ph)],
                [0, om / SQRT2 * np.exp(1j * ph), -de],
            ])
            assert np.allclose(hamiltonian(om, de, ph), explicit, atol=1e-14)

    def test_always_hermitian(self, rng):
        for _ in range(25):
            h = hamiltonian(rng.uniform(0, 10), rng.uniform(-10, 10),
                            rng.uniform(-7, 7))
            assert np.linalg.norm(h - h.conj().T) < 1e-12

    def test_negative_omega_rejected(self):
        with pytest.raises(ValueError):
            hamiltonian(-0.1, 0.0, 0.0)


class TestScaledFrobeniusNorm:
    def test_generators_are_unit_norm(self):
        assert scaled_frobenius_norm(K_Z) == pytest.approx(1.0)
        assert scaled_frobenius_norm(K_X) == pytest.approx(1.0)
        assert scaled_frobenius_norm(K_Y) == pytest.approx(1.0)

    def test_zero_matrix(self):
        assert scaled_frobenius_norm(np.zeros((3, 3))) == 0.0

    def test_unitary_invariance(self, rng):
        m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        base = scaled_frobenius_norm(m)
        for _ in range(10):
            v = random_unitary(rng)
            assert scaled_frobenius_norm(v.conj().T @ m @ v) == pytest.approx(base, abs=1e-12)


class _ConstantDrive:
    """Minimal schedule stand-in: constant H over [0, duration]."""

    def __init__(self, h, duration):
        self._h = h
        self.time_span = (0.0, duration)

    def hamiltonian(self, t):
        return self._h


class TestPropagation:
    def test_pi_pulse_matches_closed_form(self):
        omega = 1.3
        drive = _ConstantDrive(omega * K_X, np.pi / omega)
        out = propagate_piecewise(drive, KET_MINUS1, 0.0, np.pi / omega)
        exact = expm(-1j * np.pi * K_X) @ KET_MINUS1
        assert np.allclose(out, exact, atol=1e-9)
        # complete transfer up to a global phase
        assert abs(out[2]) ** 2 == pytest.approx(1.0, abs=1e-9)

    def test_zero_schedule_is_identity(self):
        drive = _ConstantDrive(np.zeros((3, 3), dtype=complex), 1.0)
        psi = np.array([0.6, 0.8j, 0.0])
        out = propagate_piecewise(drive, psi, 0.0, 1.0)
        assert np.allclose(out, psi, atol=1e-12)

    def test_norm_is_preserved(self):
        drive = _ConstantDrive(hamiltonian(2.0, 0.7, 0.3), 3.0)
        out = propagate_piecewise(drive, KET_MINUS1, 0.0, 3.0)
        assert norm_defect(out) <= 1e-9

    def test_propagator_unitarity(self, scaled_schedule):
        u = propagate_operator(scaled_schedule, np.array([0.0, 2.0]))[-1]
        assert unitarity_defect(u) <= 1e-9

    def test_partial_interval(self):
        omega = 0.9
        drive = _ConstantDrive(omega * K_X, 4.0)
        out = propagate_piecewise(drive, KET_MINUS1, 0.5, 2.5)
        exact = expm(-2j * omega * K_X) @ KET_MINUS1
        assert np.allclose(out, exact, atol=1e-9)

    def test_invalid_interval_rejected(self):
        drive = _ConstantDrive(K_X, 1.0)
        with pytest.raises(ValueError):
            propagate_piecewise(drive, KET_MINUS1, 0.5, 0.5)
        with pytest.raises(ValueError):
            propagate_piecewise(drive, KET_MINUS1, 0.0, 2.0)  # outside support

    def test_integration_failure_carries_time(self):
        class Singular:
            time_span = (0.0, 1.0)

            @staticmethod
            def hamiltonian(t):
                return K_X / (0.5 - t)

        with pytest.raises(IntegrationFailure) as err:
            propagate_piecewise(Singular, KET_MINUS1, 0.0, 1.0)
        assert 0.0 <= err.value.time <= 1.0
