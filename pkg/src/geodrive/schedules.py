"""Driving-field schedules and the curve <-> pulse maps.

The forward map turns sampled curve geometry into (Omega, Delta, phi); the
inverse map integrates the propagator, accumulates the noise integral
m(t) = int U^dag K_z U dt', and reads the curve back out of its spin-1
expansion.  The inverse map is the roundtrip oracle for the forward one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import PchipInterpolator

from . import curves as _curves
from .operators import K_X, K_Y, K_Z, SQRT2, hamiltonian, propagate_operator

PHASE_MODE = "phase"
DETUNING_MODE = "detuning"

MIN_GRID = 501


def _uniform(time):
    steps = np.diff(time)
    if steps.size == 0 or np.any(steps <= 0):
        raise ValueError("time grid must be strictly increasing")
    if np.max(np.abs(steps - steps[0])) > 1e-9 * max(steps[0], 1e-30):
        raise ValueError("time grid must be uniform")


class _InterpolatedFields:
    """Shared plumbing: cached PCHIP interpolants plus range checking."""

    def _interp(self, name):
        cache = self.__dict__.setdefault("_interp_cache", {})
        if name not in cache:
            cache[name] = PchipInterpolator(self.time, getattr(self, name))
        return cache[name]

    def _check_range(self, t):
        t0, t1 = self.time_span
        if np.any(np.asarray(t) < t0 - 1e-12) or np.any(np.asarray(t) > t1 + 1e-12):
            raise ValueError(f"t = {t} outside schedule support [{t0}, {t1}]")

    @property
    def time_span(self):
        return float(self.time[0]), float(self.time[-1])

    @property
    def duration(self):
        t0, t1 = self.time_span
        return t1 - t0


@dataclass
class ControlSchedule(_InterpolatedFields):
    """Sampled common-envelope driving fields (Omega, Delta, phi).

    Units: time us, omega/delta rad/us, phi rad.  ``omega`` is the reduced
    Rabi frequency; the lab-frame pump/Stokes envelopes are sqrt(2)*omega
    with phases +-phi and detunings +-delta.  Values between grid points are
    piecewise-cubic Hermite (PCHIP) interpolated; evaluation outside the
    grid raises.
    """

    time: np.ndarray
    omega: np.ndarray
    delta: np.ndarray
    phi: np.ndarray
    mode: str = PHASE_MODE
    warnings: tuple = ()

    def __post_init__(self):
        self.time = np.asarray(self.time, dtype=float)
        self.omega = np.asarray(self.omega, dtype=float)
        self.delta = np.asarray(self.delta, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        n = self.time.size
        if n < MIN_GRID:
            raise ValueError(f"schedule grid needs at least {MIN_GRID} points, got {n}")
        _uniform(self.time)
        for name in ("omega", "delta", "phi"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must match the time grid")
        if np.min(self.omega) < -1e-12:
            raise ValueError("omega must be non-negative")
        self.omega = np.maximum(self.omega, 0.0)
        if self.mode == PHASE_MODE and np.max(np.abs(self.delta)) > 1e-12:
            raise ValueError("phase-mode schedules must have delta == 0")
        if self.mode == DETUNING_MODE and np.ptp(self.phi) > 1e-12:
            raise ValueError("detuning-mode schedules must have constant phi")

    def values(self, t):
        self._check_range(t)
        return self._interp("omega")(t), self._interp("delta")(t), self._interp("phi")(t)

    def hamiltonian(self, t):
        om, de, ph = self.values(t)
        return hamiltonian(max(float(om), 0.0), float(de), float(ph))

    def hamiltonians(self, times):
        """Vectorized Hamiltonian samples, shape (n, 3, 3)."""
        om, de, ph = self.values(np.asarray(times, dtype=float))
        om = np.maximum(om, 0.0)
        return (np.multiply.outer(om * np.cos(ph), K_X)
                + np.multiply.outer(om * np.sin(ph), K_Y)
                + np.multiply.outer(de, K_Z))

    def rescaled(self, new_duration: float) -> "ControlSchedule":
        """Uniform time rescaling t -> s t with Omega, Delta scaled by 1/s.

        Phase values are carried over pointwise (phi-dot picks up the 1/s
        automatically), so the underlying curve shape is unchanged.
        """
        if new_duration <= 0:
            raise ValueError("duration must be positive")
        s = new_duration / self.duration
        return replace(self, time=self.time * s, omega=self.omega / s,
                       delta=self.delta / s)

    def with_phase_offset(self, offset: float) -> "ControlSchedule":
        return replace(self, phi=self.phi + offset)


@dataclass
class TwoToneSchedule(_InterpolatedFields):
    """Generalized schedule with independent pump and Stokes tones.

    The pump tone couples |-1> <-> |0>, the Stokes tone |0> <-> |+1>.
    Amplitudes are reduced (lab envelope / sqrt(2)), so a TwoToneSchedule
    with equal tones and opposite detunings/phases is exactly a
    ControlSchedule.  Used by the STIRAP and SRT baselines.
    """

    time: np.ndarray
    pump_omega: np.ndarray
    stokes_omega: np.ndarray
    pump_delta: np.ndarray
    stokes_delta: np.ndarray
    pump_phi: np.ndarray
    stokes_phi: np.ndarray
    warnings: tuple = ()

    _FIELDS = ("pump_omega", "stokes_omega", "pump_delta", "stokes_delta",
               "pump_phi", "stokes_phi")

    def __post_init__(self):
        self.time = np.asarray(self.time, dtype=float)
        n = self.time.size
        if n < MIN_GRID:
            raise ValueError(f"schedule grid needs at least {MIN_GRID} points, got {n}")
        _uniform(self.time)
        for name in self._FIELDS:
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"{name} must match the time grid")
            setattr(self, name, arr)
        if min(np.min(self.pump_omega), np.min(self.stokes_omega)) < -1e-12:
            raise ValueError("envelopes must be non-negative")

    def values(self, t):
        self._check_range(t)
        return tuple(self._interp(name)(t) for name in self._FIELDS)

    def hamiltonian(self, t):
        om_p, om_s, de_p, de_s, ph_p, ph_s = (float(v) for v in self.values(t))
        h = np.zeros((3, 3), dtype=complex)
        h[0, 0] = de_p
        h[2, 2] = de_s
        h[0, 1] = om_p / SQRT2 * np.exp(-1j * ph_p)
        h[1, 0] = np.conj(h[0, 1])
        h[1, 2] = om_s / SQRT2 * np.exp(1j * ph_s)
        h[2, 1] = np.conj(h[1, 2])
        return h

    def hamiltonians(self, times):
        """Vectorized Hamiltonian samples, shape (n, 3, 3)."""
        times = np.asarray(times, dtype=float)
        om_p, om_s, de_p, de_s, ph_p, ph_s = self.values(times)
        h = np.zeros(times.shape + (3, 3), dtype=complex)
        h[..., 0, 0] = de_p
        h[..., 2, 2] = de_s
        h[..., 0, 1] = om_p / SQRT2 * np.exp(-1j * ph_p)
        h[..., 1, 0] = np.conj(h[..., 0, 1])
        h[..., 1, 2] = om_s / SQRT2 * np.exp(1j * ph_s)
        h[..., 2, 1] = np.conj(h[..., 1, 2])
        return h

    def lab_envelopes(self, t):
        """Lab-frame (pump, Stokes) Rabi envelopes sqrt(2) * reduced."""
        om_p, om_s = self.values(t)[:2]
        return SQRT2 * om_p, SQRT2 * om_s


def as_two_tone(schedule: ControlSchedule) -> TwoToneSchedule:
    """Expand a common-envelope schedule into per-tone arrays."""
    return TwoToneSchedule(
        time=schedule.time,
        pump_omega=schedule.omega, stokes_omega=schedule.omega,
        pump_delta=schedule.delta, stokes_delta=-schedule.delta,
        pump_phi=schedule.phi, stokes_phi=-schedule.phi,
        warnings=schedule.warnings,
    )


# ---------------------------------------------------------------------------
# forward map: geometry -> schedule
# ---------------------------------------------------------------------------

def synthesize(geometry: "_curves.CurveGeometry", mode: str = PHASE_MODE) -> ControlSchedule:
    """Turn sampled (kappa, tau) into a driving schedule.

    Omega(t) = kappa(t) in both modes.  Phase mode integrates the torsion,
    phi(t) = int_0^t tau (Simpson, phi(0) = 0) with Delta = 0; detuning mode
    sets Delta(t) = -tau(t) with phi = 0.  Either split realizes
    phi-dot - Delta = tau.
    """
    grid = np.asarray(geometry.time_grid, dtype=float)
    _uniform(grid)
    warnings = ()
    if geometry.flagged_count:
        warnings = (f"{geometry.flagged_count} torsion samples were flagged "
                    "(curvature below threshold); phase continued through them",)
    if mode == PHASE_MODE:
        phi = cumulative_simpson(geometry.torsion, x=grid, initial=0.0)
        return ControlSchedule(time=grid, omega=geometry.curvature.copy(),
                               delta=np.zeros_like(grid), phi=phi,
                               mode=PHASE_MODE, warnings=warnings)
    if mode == DETUNING_MODE:
        return ControlSchedule(time=grid, omega=geometry.curvature.copy(),
                               delta=-geometry.torsion, phi=np.zeros_like(grid),
                               mode=DETUNING_MODE, warnings=warnings)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# inverse map: schedule -> curve (verification oracle)
# ---------------------------------------------------------------------------

def _noise_integral_samples(schedule, n_samples=None, rtol=1e-10, atol=1e-12):
    """Tangent and position samples of the curve traced by m(t)."""
    if n_samples is None:
        n_samples = max(schedule.time.size, MIN_GRID)
    t0, t1 = schedule.time_span
    grid = np.linspace(t0, t1, n_samples)
    props = propagate_operator(schedule, grid, rtol=rtol, atol=atol)
    mdot = np.einsum("nji,jk,nkl->nil", props.conj(), K_Z, props)
    tangents = np.stack([
        0.5 * np.einsum("ij,nji->n", k, mdot).real for k in (K_X, K_Y, K_Z)
    ], axis=1)
    positions = cumulative_simpson(tangents, x=grid, initial=0.0, axis=0)
    return grid - t0, positions, tangents


def reconstruct_curve(schedule, tol: float = 1e-10,
                      n_samples: int = None) -> "_curves.ArcLengthCurve":
    """Recover r(t) from a schedule via the spin-1 expansion of m(t).

    The components are x = Tr(K_x m)/2 etc., accumulated by Simpson
    quadrature over the propagator samples.  The result is automatically
    unit-speed and starts at the origin with tangent +z; its azimuthal
    orientation is set by the schedule's initial phase.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    grid, positions, tangents = _noise_integral_samples(
        schedule, n_samples=n_samples, rtol=tol, atol=max(tol * 1e-2, 1e-14))
    return _curves.from_samples(grid, positions, tangents,
                                name=f"reconstructed({getattr(schedule, 'mode', 'schedule')})")


def noise_term(schedule) -> float:
    """Scaled Frobenius norm of m(T): the length |r(T)| of the traced curve.

    Zero (up to numerics) exactly when the schedule suppresses quasistatic
    K_z noise to second order.
    """
    _, positions, _ = _noise_integral_samples(schedule)
    return float(np.linalg.norm(positions[-1]))


def _initial_normal(arc, n_probe=7):
    """First well-defined unit normal of an arc-length curve."""
    probes = np.linspace(0.0, arc.total_length * 1e-3, n_probe)
    seconds = arc.second_derivative(probes)
    norms = np.linalg.norm(seconds, axis=1)
    for vec, mag in zip(seconds, norms):
        if mag > 1e-9:
            return vec / mag
    raise ValueError("curve has vanishing curvature near t = 0")


def roundtrip_deviation(arc, schedule, n_samples: int = 1001) -> float:
    """Max |R_z(gamma) r(t) - r_rec(t)| between a curve and its reconstruction.

    A schedule with phi(0) = 0 reconstructs the curve with its initial
    normal rotated onto +y; gamma removes exactly that global z-rotation
    (the constant-phase gauge of the driving fields) before comparing.
    """
    rec = reconstruct_curve(schedule)
    normal = _initial_normal(arc)
    rec_normal = _initial_normal(rec)
    gamma = np.arctan2(rec_normal[1], rec_normal[0]) - np.arctan2(normal[1], normal[0])
    c, s = np.cos(gamma), np.sin(gamma)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    grid = np.linspace(0.0, min(arc.total_length, rec.total_length), n_samples)
    reference = arc.position(grid) @ rot.T
    return float(np.max(np.linalg.norm(reference - rec.position(grid), axis=1)))


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def write_schedule_csv(schedule, path, sidecar_path=None, provenance=None):
    """Schedule CSV (t,omega,delta,phi per row) plus a JSON sidecar.

    Two-tone schedules get the per-tone column layout instead; the sidecar
    records which one was written.
    """
    two_tone = isinstance(schedule, TwoToneSchedule)
    with open(path, "w", newline="") as fh:
        if two_tone:
            fh.write("t,pump_omega,stokes_omega,pump_delta,stokes_delta,pump_phi,stokes_phi\n")
            cols = [schedule.time] + [getattr(schedule, f) for f in TwoToneSchedule._FIELDS]
        else:
            fh.write("t,omega,delta,phi\n")
            cols = [schedule.time, schedule.omega, schedule.delta, schedule.phi]
        for row in zip(*cols):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    if sidecar_path is not None:
        meta = {
            "layout": "two-tone" if two_tone else "common-envelope",
            "mode": getattr(schedule, "mode", None),
            "duration_us": schedule.duration,
            "grid_size": int(schedule.time.size),
            "warnings": list(schedule.warnings),
        }
        meta.update(provenance or {})
        with open(sidecar_path, "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def read_schedule_csv(path, mode=PHASE_MODE):
    """Read back a common-envelope schedule CSV."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    names = data.dtype.names
    if names[:4] != ("t", "omega", "delta", "phi"):
        raise ValueError(f"{path}: expected columns t,omega,delta,phi")
    return ControlSchedule(time=data["t"], omega=data["omega"],
                           delta=data["delta"], phi=data["phi"], mode=mode)
