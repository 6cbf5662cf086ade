"""Complex linear algebra for the driven three-level system.

Everything lives in the basis {|-1>, |0>, |+1>} (in that order).  States are
plain complex ndarrays of shape (3,), operators of shape (3, 3).  Angular
frequencies are rad/us, times are us.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

SQRT2 = np.sqrt(2.0)

K_X = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / SQRT2
K_Y = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex) / SQRT2
K_Z = np.array([[1, 0, 0], [0, 0, 0], [0, 0, -1]], dtype=complex)
for _k in (K_X, K_Y, K_Z):
    _k.flags.writeable = False

IDENTITY3 = np.eye(3, dtype=complex)
IDENTITY3.flags.writeable = False

#: basis kets
KET_MINUS1 = np.array([1, 0, 0], dtype=complex)
KET_0 = np.array([0, 1, 0], dtype=complex)
KET_PLUS1 = np.array([0, 0, 1], dtype=complex)
for _k in (KET_MINUS1, KET_0, KET_PLUS1):
    _k.flags.writeable = False


class IntegrationFailure(RuntimeError):
    """Adaptive integration could not continue (e.g. step-size underflow)."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (at t = {time:.6g} us)")
        self.time = time


def spin1_generators():
    """The three spin-1 angular momentum matrices (K_x, K_y, K_z)."""
    return K_X, K_Y, K_Z


def hamiltonian(omega: float, delta: float, phi: float) -> np.ndarray:
    """Driving Hamiltonian Omega*cos(phi)*K_x + Omega*sin(phi)*K_y + Delta*K_z.

    ``omega`` is the reduced Rabi frequency (lab-frame envelopes are
    sqrt(2) * omega); must be non-negative.
    """
    if omega < 0:
        raise ValueError(f"omega must be non-negative, got {omega}")
    return omega * np.cos(phi) * K_X + omega * np.sin(phi) * K_Y + delta * K_Z


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def scaled_frobenius_norm(m: np.ndarray) -> float:
    """sqrt(sum |m_ij|^2) / sqrt(2); unitarily invariant.

    Under this normalization each of K_x, K_y, K_z has norm 1, so the norm of
    a combination v . (K_x, K_y, K_z) equals the Euclidean length of v.
    """
    return float(np.linalg.norm(m) / SQRT2)


def norm_defect(psi: np.ndarray) -> float:
    """Deviation of the 2-norm from 1 (reported, never silently repaired)."""
    return abs(float(np.linalg.norm(psi)) - 1.0)


def hermiticity_defect(m: np.ndarray) -> float:
    return float(np.linalg.norm(m - dagger(m)))


def unitarity_defect(u: np.ndarray) -> float:
    return float(np.linalg.norm(dagger(u) @ u - IDENTITY3))


def density_matrix_defects(rho: np.ndarray):
    """(hermiticity, trace, min-eigenvalue) diagnostics for a density matrix."""
    herm = hermiticity_defect(rho)
    tr = abs(float(np.trace(rho).real) - 1.0)
    sym = 0.5 * (rho + dagger(rho))
    min_eig = float(np.linalg.eigvalsh(sym).min())
    return herm, tr, min_eig


def _hamiltonian_fn(schedule_or_fn):
    """Accept either a schedule object or a plain callable H(t)."""
    if callable(schedule_or_fn) and not hasattr(schedule_or_fn, "hamiltonian"):
        return schedule_or_fn
    return schedule_or_fn.hamiltonian


def _check_span(schedule_or_fn, t0, t1):
    if t1 <= t0:
        raise ValueError(f"need t0 < t1, got [{t0}, {t1}]")
    span = getattr(schedule_or_fn, "time_span", None)
    if span is not None and (t0 < span[0] - 1e-12 or t1 > span[1] + 1e-12):
        raise ValueError(f"[{t0}, {t1}] outside schedule support {span}")


def _integrate(rhs, y0, t0, t1, rtol, atol, t_eval=None):
    sol = solve_ivp(rhs, (t0, t1), y0, method="DOP853", rtol=rtol, atol=atol,
                    t_eval=t_eval)
    if not sol.success:
        raise IntegrationFailure(sol.message, float(sol.t[-1]) if sol.t.size else t0)
    return sol


def propagate_piecewise(schedule, state: np.ndarray, t0: float, t1: float,
                        tol: float = 1e-10) -> np.ndarray:
    """Propagate a state under i d|psi>/dt = H(t)|psi> from t0 to t1.

    Adaptive high-order explicit Runge-Kutta with local relative tolerance
    ``tol``.  The returned amplitudes are not renormalized; use
    :func:`norm_defect` to inspect the drift.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    _check_span(schedule, t0, t1)
    hfun = _hamiltonian_fn(schedule)

    def rhs(t, y):
        return -1j * (hfun(t) @ y)

    sol = _integrate(rhs, np.asarray(state, dtype=complex), t0, t1,
                     rtol=tol, atol=max(tol * 1e-2, 1e-14))
    return sol.y[:, -1]


def propagate_state(schedule, state, times, rtol=1e-10, atol=1e-12):
    """State samples at the given times (times[0] is the start)."""
    times = np.asarray(times, dtype=float)
    _check_span(schedule, times[0], times[-1])
    hfun = _hamiltonian_fn(schedule)

    def rhs(t, y):
        return -1j * (hfun(t) @ y)

    sol = _integrate(rhs, np.asarray(state, dtype=complex), times[0], times[-1],
                     rtol, atol, t_eval=times)
    return sol.y.T.copy()


def propagate_operator(schedule, times, rtol=1e-10, atol=1e-12):
    """Propagator samples U(t, times[0]) as an (n, 3, 3) array."""
    times = np.asarray(times, dtype=float)
    _check_span(schedule, times[0], times[-1])
    hfun = _hamiltonian_fn(schedule)

    def rhs(t, y):
        return (-1j * hfun(t) @ y.reshape(3, 3)).ravel()

    sol = _integrate(rhs, IDENTITY3.ravel().copy(), times[0], times[-1],
                     rtol, atol, t_eval=times)
    return np.ascontiguousarray(sol.y.T.reshape(-1, 3, 3))


def propagator(schedule, t0=None, t1=None, rtol=1e-10, atol=1e-12):
    """Full-interval propagator U(t1, t0) (defaults to the schedule span)."""
    span = getattr(schedule, "time_span", None)
    if t0 is None:
        t0 = span[0] if span else 0.0
    if t1 is None:
        t1 = span[1]
    return propagate_operator(schedule, np.array([t0, t1]), rtol, atol)[-1]
