"""Scenario files: JSON descriptions of a transfer experiment.

A scenario selects a scheme (or the full comparison bundle), the curve and
mode for the geometric scheme, the noise model, and optional sweep settings.
All frequency-like numbers are interpreted under the active convention
(angular by default) when the scenario is loaded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines, curves
from .config import ANGULAR, CONVENTIONS, to_angular
from .schedules import DETUNING_MODE, PHASE_MODE, synthesize
from .simulate import NoiseModel

SCHEMES = ("geometric", "srt", "stirap", "sta")
NATURAL = "natural"


class ScenarioError(ValueError):
    """Malformed scenario input; carries the offending field path."""

    def __init__(self, field_path, message):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path


@dataclass
class SweepSpec:
    start: float = -1.0
    stop: float = 1.0
    count: int = 101
    scaling_lo: float = 0.01
    scaling_hi: float = 0.1
    scaling_n: int = 7

    def grid(self):
        return np.linspace(self.start, self.stop, self.count)


@dataclass
class Scenario:
    name: str
    scheme: str                      # one of SCHEMES or "all"
    curve: object = None             # ParametricCurve, iff geometric involved
    curve_label: str = ""
    mode: str = PHASE_MODE
    duration: object = NATURAL       # us, or "natural" = arc length
    noise: NoiseModel = field(default_factory=NoiseModel)
    sweep: SweepSpec = None
    srt: baselines.SrtParams = field(default_factory=baselines.SrtParams)
    stirap: baselines.StirapParams = field(default_factory=baselines.StirapParams)
    sta: baselines.StaParams = field(default_factory=baselines.StaParams)
    output_dir: str = "out"
    convention: str = ANGULAR

    def schemes(self):
        return list(SCHEMES) if self.scheme == "all" else [self.scheme]


def _require(mapping, key, kind, where, default=None, required=False):
    if key not in mapping:
        if required:
            raise ScenarioError(f"{where}.{key}", "missing required field")
        return default
    value = mapping[key]
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind is str and isinstance(value, str):
        return value
    if kind is dict and isinstance(value, dict):
        return value
    raise ScenarioError(f"{where}.{key}", f"expected {kind.__name__}, got {type(value).__name__}")


def _load_curve(spec, base_dir, convention):
    if isinstance(spec, str):
        if spec == "reference":
            return curves.reference_curve(), "reference"
        raise ScenarioError("curve", f"unknown builtin curve {spec!r}")
    if isinstance(spec, dict):
        if "table" in spec:
            path = Path(base_dir) / spec["table"]
            try:
                return curves.read_curve_table(path), f"table:{spec['table']}"
            except (OSError, ValueError) as exc:
                raise ScenarioError("curve.table", str(exc)) from exc
        if {"x", "y", "z"} <= set(spec):
            try:
                curve = curves.curve_from_expressions(spec["x"], spec["y"], spec["z"])
            except curves.CurveExpressionError as exc:
                raise ScenarioError(f"curve.{exc.component}", str(exc)) from exc
            return curve, "expression"
        raise ScenarioError("curve", "need either 'table' or all of 'x', 'y', 'z'")
    raise ScenarioError("curve", f"expected string or object, got {type(spec).__name__}")


def _baseline_params(raw, convention):
    srt_raw = _require(raw, "srt", dict, "scenario", default={})
    stirap_raw = _require(raw, "stirap", dict, "scenario", default={})
    sta_raw = _require(raw, "sta", dict, "scenario", default={})

    def conv(mapping, key, where, freq=False):
        value = _require(mapping, key, float, where)
        if value is None:
            return None
        return to_angular(value, convention) if freq else value

    srt_kwargs = {}
    for key, freq in (("rabi", True), ("detuning", True), ("duration", False)):
        value = conv(srt_raw, key, "scenario.srt", freq)
        if value is not None:
            srt_kwargs[key] = value
    stirap_kwargs = {}
    for key, freq in (("peak", True), ("separation", False), ("width", False),
                      ("window", False)):
        value = conv(stirap_raw, key, "scenario.stirap", freq)
        if value is not None:
            stirap_kwargs[key] = value
    sta_kwargs = {}
    for key, freq in (("rabi", True), ("phase", False), ("duration", False)):
        value = conv(sta_raw, key, "scenario.sta", freq)
        if value is not None:
            sta_kwargs[key] = value
    try:
        return (baselines.SrtParams(**srt_kwargs),
                baselines.StirapParams(**stirap_kwargs),
                baselines.StaParams(**sta_kwargs))
    except ValueError as exc:
        raise ScenarioError("scenario baselines", str(exc)) from exc


def load_scenario(path, convention: str = ANGULAR) -> Scenario:
    """Parse and validate a scenario JSON file."""
    if convention not in CONVENTIONS:
        raise ScenarioError("convention", f"must be one of {CONVENTIONS}")
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError(str(path), f"cannot read scenario: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(str(path), f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError(str(path), "scenario must be a JSON object")

    version = raw.get("version")
    if version != 1:
        raise ScenarioError("version", f"unsupported scenario version {version!r} (expected 1)")
    name = _require(raw, "name", str, "scenario", default=path.stem)
    scheme = _require(raw, "scheme", str, "scenario", required=True)
    if scheme not in SCHEMES + ("all",):
        raise ScenarioError("scheme", f"must be one of {SCHEMES + ('all',)}, got {scheme!r}")

    needs_curve = scheme in ("geometric", "all")
    curve = None
    curve_label = ""
    if "curve" in raw:
        if not needs_curve:
            raise ScenarioError("curve", f"curve given but scheme is {scheme!r}")
        curve, curve_label = _load_curve(raw["curve"], path.parent, convention)
    elif needs_curve:
        raise ScenarioError("curve", f"scheme {scheme!r} requires a curve")

    mode = _require(raw, "mode", str, "scenario", default=PHASE_MODE)
    if mode not in (PHASE_MODE, DETUNING_MODE):
        raise ScenarioError("mode", f"must be {PHASE_MODE!r} or {DETUNING_MODE!r}")

    duration = raw.get("duration", NATURAL)
    if duration != NATURAL:
        if not isinstance(duration, (int, float)) or isinstance(duration, bool) or duration <= 0:
            raise ScenarioError("duration", "must be a positive number or 'natural'")
        duration = float(duration)

    noise_raw = _require(raw, "noise", dict, "scenario", default={})
    delta = _require(noise_raw, "delta", float, "scenario.noise", default=0.0)
    gamma = _require(noise_raw, "gamma", float, "scenario.noise", default=0.0)
    try:
        noise = NoiseModel(delta=to_angular(delta, convention),
                           gamma=to_angular(gamma, convention))
    except ValueError as exc:
        raise ScenarioError("scenario.noise", str(exc)) from exc

    sweep = None
    if "sweep" in raw:
        sweep_raw = _require(raw, "sweep", dict, "scenario")
        scaling = _require(sweep_raw, "scaling", dict, "scenario.sweep", default={})
        sweep = SweepSpec(
            start=to_angular(_require(sweep_raw, "start", float, "scenario.sweep", default=-1.0), convention),
            stop=to_angular(_require(sweep_raw, "stop", float, "scenario.sweep", default=1.0), convention),
            count=_require(sweep_raw, "count", int, "scenario.sweep", default=101),
            scaling_lo=to_angular(_require(scaling, "lo", float, "scenario.sweep.scaling", default=0.01), convention),
            scaling_hi=to_angular(_require(scaling, "hi", float, "scenario.sweep.scaling", default=0.1), convention),
            scaling_n=_require(scaling, "n", int, "scenario.sweep.scaling", default=7),
        )
        if sweep.count < 1:
            raise ScenarioError("scenario.sweep.count", "must be at least 1")

    srt, stirap, sta = _baseline_params(raw, convention)
    return Scenario(name=name, scheme=scheme, curve=curve, curve_label=curve_label,
                    mode=mode, duration=duration, noise=noise, sweep=sweep,
                    srt=srt, stirap=stirap, sta=sta,
                    output_dir=_require(raw, "output_dir", str, "scenario", default="out"),
                    convention=convention)


def geometric_pipeline(scenario: Scenario, n_samples: int = 2001, tol: float = 1e-6):
    """Curve -> arc-length form -> geometry -> schedule for a scenario.

    Returns (arc, geometry, boundary_report, schedule); the schedule is
    rescaled to the requested duration when one is given.
    """
    arc = curves.reparametrize_by_arclength(scenario.curve)
    report = curves.check_boundary_conditions(arc, tol=tol)
    geometry = curves.curvature_torsion(arc, n_samples=n_samples)
    schedule = synthesize(geometry, mode=scenario.mode)
    if scenario.duration != NATURAL:
        schedule = schedule.rescaled(scenario.duration)
    return arc, geometry, report, schedule


def build_schedule(scenario: Scenario, scheme: str):
    """Schedule for one scheme of a scenario."""
    if scheme == "geometric":
        return geometric_pipeline(scenario)[3]
    if scheme == "srt":
        return baselines.srt_schedule(scenario.srt)
    if scheme == "stirap":
        return baselines.stirap_schedule(scenario.stirap)
    if scheme == "sta":
        return baselines.sta_schedule(scenario.sta)
    raise ScenarioError("scheme", f"unknown scheme {scheme!r}")
