"""Ideal and noisy propagation of the three-level system.

Noise enters two ways: a quasistatic frequency error delta * K_z added to
the Hamiltonian (constant within a run), and longitudinal relaxation between
|0> and |+-1| at a common rate Gamma through the quantum master equation.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .operators import (K_Z, KET_MINUS1, _integrate, density_matrix_defects,
                        norm_defect, propagate_state)

THREADS_ENV = "GEODRIVE_THREADS"


@dataclass
class NoiseModel:
    """Quasistatic frequency-error strength and common relaxation rate (rad/us)."""

    delta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")


@dataclass
class SimulationResult:
    time_grid: np.ndarray
    populations: np.ndarray          # shape (n, 3): P_-1, P_0, P_+1
    final_fidelity: float            # P_+1 at the final time
    trace_defect: float
    metadata: dict = field(default_factory=dict)

    @property
    def p_minus1(self):
        return self.populations[:, 0]

    @property
    def p_0(self):
        return self.populations[:, 1]

    @property
    def p_plus1(self):
        return self.populations[:, 2]


def relaxation_channels():
    """Jump operators |k><j| for the four relaxation channels j -> k.

    Channels: (+1 -> 0), (0 -> +1), (-1 -> 0), (0 -> -1); basis order is
    (|-1>, |0>, |+1>), so index 0 is m_s = -1.
    """
    pairs = [(2, 1), (1, 2), (0, 1), (1, 0)]  # (j, k) in basis indices
    ops = []
    for j, k in pairs:
        op = np.zeros((3, 3), dtype=complex)
        op[k, j] = 1.0
        ops.append(op)
    return ops


_CHANNELS = relaxation_channels()
_CHANNEL_PROJECTORS = [op.conj().T @ op for op in _CHANNELS]


def _grid(schedule, n_samples):
    t0, t1 = schedule.time_span
    return np.linspace(t0, t1, n_samples)


def run_schrodinger(schedule, noise: NoiseModel = None, initial=None,
                    n_samples: int = 1001, rtol: float = 1e-10,
                    atol: float = 1e-12, label: str = None) -> SimulationResult:
    """Pure-state propagation under H(t) + delta K_z (requires gamma = 0)."""
    noise = noise or NoiseModel()
    if noise.gamma != 0:
        raise ValueError("run_schrodinger handles gamma = 0 only; use run_lindblad")
    psi0 = np.asarray(KET_MINUS1 if initial is None else initial, dtype=complex)
    times = _grid(schedule, n_samples)
    shift = noise.delta * K_Z

    def rhs(t, y):
        return -1j * ((schedule.hamiltonian(t) + shift) @ y)

    sol = _integrate(rhs, psi0.copy(), times[0], times[-1], rtol, atol, t_eval=times)
    states = sol.y.T
    populations = np.abs(states) ** 2
    return SimulationResult(
        time_grid=times,
        populations=populations,
        final_fidelity=float(populations[-1, 2]),
        trace_defect=norm_defect(states[-1]),
        metadata={"solver": "schrodinger", "scheme": label,
                  "noise": {"delta": noise.delta, "gamma": 0.0},
                  "rtol": rtol, "atol": atol},
    )


def run_lindblad(schedule, noise: NoiseModel = None, initial=None,
                 n_samples: int = 1001, rtol: float = 1e-10,
                 atol: float = 1e-12, label: str = None) -> SimulationResult:
    """Density-matrix propagation with the four relaxation channels.

    ``initial`` may be a state vector or a density matrix.  Sampled density
    matrices are re-symmetrized, with the worst Hermiticity defect recorded
    in the metadata rather than hidden.
    """
    noise = noise or NoiseModel()
    if initial is None:
        initial = KET_MINUS1
    initial = np.asarray(initial, dtype=complex)
    rho0 = np.outer(initial, initial.conj()) if initial.ndim == 1 else initial.copy()
    herm0, trace0, eig0 = density_matrix_defects(rho0)
    if herm0 > 1e-10 or trace0 > 1e-8 or eig0 < -1e-8:
        raise ValueError("initial density matrix must be Hermitian, unit trace, "
                         f"and positive (defects: {herm0:.1e}, {trace0:.1e}, {eig0:.1e})")
    times = _grid(schedule, n_samples)
    shift = noise.delta * K_Z
    gamma = noise.gamma

    def rhs(t, y):
        rho = y.reshape(3, 3)
        h = schedule.hamiltonian(t) + shift
        drho = -1j * (h @ rho - rho @ h)
        if gamma:
            for jump, proj in zip(_CHANNELS, _CHANNEL_PROJECTORS):
                drho += gamma * (jump @ rho @ jump.conj().T
                                 - 0.5 * (proj @ rho + rho @ proj))
        return drho.ravel()

    sol = _integrate(rhs, rho0.ravel(), times[0], times[-1], rtol, atol, t_eval=times)
    rhos = sol.y.T.reshape(-1, 3, 3)
    herm_defect = float(np.max(np.linalg.norm(rhos - rhos.conj().transpose(0, 2, 1),
                                              axis=(1, 2))))
    rhos = 0.5 * (rhos + rhos.conj().transpose(0, 2, 1))
    populations = np.real(np.diagonal(rhos, axis1=1, axis2=2))
    _, trace_defect, min_eig = density_matrix_defects(rhos[-1])
    return SimulationResult(
        time_grid=times,
        populations=populations,
        final_fidelity=float(populations[-1, 2]),
        trace_defect=trace_defect,
        metadata={"solver": "lindblad", "scheme": label,
                  "noise": {"delta": noise.delta, "gamma": noise.gamma},
                  "rtol": rtol, "atol": atol,
                  "hermiticity_defect": herm_defect,
                  "min_eigenvalue": min_eig},
    )


def _max_workers():
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return min(4, os.cpu_count() or 1)


def sweep_delta(schedule, deltas, gamma: float = 0.0, n_samples: int = 401,
                rtol: float = 1e-10, atol: float = 1e-12):
    """Final P_+1 for each quasistatic error strength; rows (delta, P_+1).

    Runs are independent and execute on a small thread pool (capped by the
    GEODRIVE_THREADS environment variable); results keep input order.
    """
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    if deltas.size == 0:
        raise ValueError("deltas must be non-empty")

    def one(delta):
        result = run_lindblad(schedule, NoiseModel(delta=float(delta), gamma=gamma),
                              n_samples=n_samples, rtol=rtol, atol=atol)
        return result.final_fidelity

    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        fidelities = list(pool.map(one, deltas))
    return np.column_stack([deltas, fidelities])


class _ShiftedSchedule:
    """Schedule view with a constant delta * K_z frequency-error term."""

    def __init__(self, schedule, delta):
        self._schedule = schedule
        self._shift = delta * K_Z
        self.time_span = schedule.time_span

    def hamiltonian(self, t):
        return self._schedule.hamiltonian(t) + self._shift


def overlap_fidelity(schedule, delta: float, rtol: float = 1e-12,
                     atol: float = 1e-14) -> float:
    """|<psi(T; 0)|psi(T; delta)>|^2: fidelity against the unperturbed run.

    For schemes with exact ideal transfer this equals the final P_+1; for
    approximate ones (SRT) it isolates the noise-induced infidelity from the
    scheme's own ideal error floor.
    """
    ends = np.array(schedule.time_span)
    psi_ref = propagate_state(schedule, KET_MINUS1, ends, rtol=rtol, atol=atol)[-1]
    psi_per = propagate_state(_ShiftedSchedule(schedule, delta), KET_MINUS1, ends,
                              rtol=rtol, atol=atol)[-1]
    return float(abs(np.vdot(psi_ref, psi_per)) ** 2)


def infidelity_scaling_exponent(schedule, delta_lo: float, delta_hi: float,
                                n: int = 7, rtol: float = 1e-12,
                                atol: float = 1e-14,
                                floor: float = 1e-12) -> float:
    """Least-squares slope of log(1 - F) against log(delta), gamma = 0.

    F is the overlap fidelity against the unperturbed evolution.
    Infidelities at or below ``floor`` are dropped as numerical noise;
    fewer than 3 surviving points is an error.
    """
    if not (0 < delta_lo < delta_hi):
        raise ValueError("need 0 < delta_lo < delta_hi")
    if n < 5:
        raise ValueError("need at least 5 sample points")
    deltas = np.geomspace(delta_lo, delta_hi, n)
    infidelities = np.array([1.0 - overlap_fidelity(schedule, d, rtol, atol)
                             for d in deltas])
    keep = infidelities > floor
    if np.count_nonzero(keep) < 3:
        raise ValueError("fewer than 3 infidelity points above the numerical floor")
    slope = np.polyfit(np.log(deltas[keep]), np.log(infidelities[keep]), 1)[0]
    return float(slope)
