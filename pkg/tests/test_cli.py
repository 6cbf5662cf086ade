import json

import numpy as np
import pytest

from geodrive.cli import main
from geodrive.scenarios import ScenarioError, load_scenario

REFERENCE = {
    "version": 1,
    "name": "demo",
    "scheme": "geometric",
    "curve": "reference",
    "mode": "phase",
    "duration": 2.0,
    "noise": {"delta": 0.5, "gamma": 0.002},
}


def write_scenario(tmp_path, payload, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def read_csv(path):
    return np.genfromtxt(path, delimiter=",", names=True)


class TestScenarioLoading:
    def test_minimal_geometric(self, tmp_path):
        scenario = load_scenario(write_scenario(tmp_path, REFERENCE))
        assert scenario.scheme == "geometric"
        assert scenario.noise.delta == 0.5

    def test_bad_json_reports_position(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"version": 1,')
        with pytest.raises(ScenarioError, match="line"):
            load_scenario(path)

    def test_unknown_scheme(self, tmp_path):
        with pytest.raises(ScenarioError, match="scheme"):
            load_scenario(write_scenario(tmp_path, {**REFERENCE, "scheme": "magic"}))

    def test_curve_required_for_geometric(self, tmp_path):
        payload = {k: v for k, v in REFERENCE.items() if k != "curve"}
        with pytest.raises(ScenarioError, match="curve"):
            load_scenario(write_scenario(tmp_path, payload))

    def test_curve_forbidden_for_baselines(self, tmp_path):
        payload = {**REFERENCE, "scheme": "sta"}
        with pytest.raises(ScenarioError, match="curve"):
            load_scenario(write_scenario(tmp_path, payload))

    def test_expression_curve(self, tmp_path):
        payload = {**REFERENCE,
                   "curve": {"x": "cos(2*pi*d)", "y": "sin(2*pi*d)", "z": "0"}}
        scenario = load_scenario(write_scenario(tmp_path, payload))
        assert scenario.curve_label == "expression"

    def test_cyclic_convention_scales_frequencies(self, tmp_path):
        path = write_scenario(tmp_path, REFERENCE)
        angular = load_scenario(path, convention="angular")
        cyclic = load_scenario(path, convention="cyclic")
        assert cyclic.noise.delta == pytest.approx(2 * np.pi * angular.noise.delta)

    def test_version_required(self, tmp_path):
        payload = {k: v for k, v in REFERENCE.items() if k != "version"}
        with pytest.raises(ScenarioError, match="version"):
            load_scenario(write_scenario(tmp_path, payload))


class TestValidateCurveCommand:
    def test_reference_passes(self, tmp_path, capsys):
        path = write_scenario(tmp_path, REFERENCE)
        code = main(["validate-curve", "--scenario", str(path)])
        payload = json.loads(capsys.readouterr().out)
        assert code == 0
        assert payload["arc_length"] == pytest.approx(2.116, abs=5e-3)
        assert payload["passed"] is True
        assert payload["flagged_samples"] == 0

    def test_open_segment_fails(self, tmp_path, capsys):
        payload = {**REFERENCE, "curve": {"x": "0", "y": "0", "z": "3*d"}}
        code = main(["validate-curve", "--scenario", str(write_scenario(tmp_path, payload))])
        out = json.loads(capsys.readouterr().out)
        assert code == 1
        assert out["closed"] is False

    def test_circle_fails_tangents(self, tmp_path, capsys):
        payload = {**REFERENCE,
                   "curve": {"x": "cos(2*pi*d)", "y": "sin(2*pi*d)", "z": "0"}}
        code = main(["validate-curve", "--scenario", str(write_scenario(tmp_path, payload))])
        out = json.loads(capsys.readouterr().out)
        assert code == 1
        assert out["closed"] is True
        assert out["start_tangent_ok"] is False

    def test_malformed_expression_is_input_error(self, tmp_path):
        payload = {**REFERENCE, "curve": {"x": "frob(d)", "y": "0", "z": "d"}}
        code = main(["validate-curve", "--scenario", str(write_scenario(tmp_path, payload))])
        assert code == 2

    def test_baseline_scenario_is_input_error(self, tmp_path):
        payload = {"version": 1, "scheme": "sta"}
        code = main(["validate-curve", "--scenario", str(write_scenario(tmp_path, payload))])
        assert code == 2


class TestSynthesizeCommand:
    def test_outputs_and_reproducibility(self, tmp_path, capsys):
        path = write_scenario(tmp_path, REFERENCE)
        out = tmp_path / "out"
        assert main(["synthesize", "--scenario", str(path), "--out", str(out)]) == 0
        capsys.readouterr()
        sidecar = json.loads((out / "schedule.json").read_text())
        assert sidecar["roundtrip_residual"] <= 1e-4
        assert sidecar["noise_term"] <= 1e-4
        assert sidecar["mode"] == "phase"
        first = (out / "schedule.csv").read_bytes()
        geometry_first = (out / "geometry.csv").read_bytes()
        assert main(["synthesize", "--scenario", str(path), "--out", str(out)]) == 0
        assert (out / "schedule.csv").read_bytes() == first
        assert (out / "geometry.csv").read_bytes() == geometry_first

    def test_failing_curve_aborts(self, tmp_path, capsys):
        payload = {**REFERENCE, "curve": {"x": "0", "y": "0", "z": "3*d"}}
        path = write_scenario(tmp_path, payload)
        code = main(["synthesize", "--scenario", str(path), "--out", str(tmp_path / "x")])
        assert code == 1

    def test_plot_script_emitted(self, tmp_path, capsys):
        path = write_scenario(tmp_path, REFERENCE)
        out = tmp_path / "plots"
        assert main(["synthesize", "--scenario", str(path), "--out", str(out),
                     "--plot-script"]) == 0
        capsys.readouterr()
        assert "plot" in (out / "schedule.gp").read_text()


class TestRunCommand:
    def test_single_scheme_outputs(self, tmp_path, capsys):
        payload = {"version": 1, "name": "sta-only", "scheme": "sta",
                   "noise": {"delta": 0.5, "gamma": 0.002}}
        path = write_scenario(tmp_path, payload)
        out = tmp_path / "run"
        assert main(["run", "--scenario", str(path), "--out", str(out)]) == 0
        capsys.readouterr()
        ideal = read_csv(out / "sta_ideal.csv")
        noisy = read_csv(out / "sta_noisy.csv")
        assert ideal["p_plus1"][-1] >= 1 - 1e-6
        assert noisy["p_plus1"][-1] <= 0.95
        sums = noisy["p_minus1"] + noisy["p_0"] + noisy["p_plus1"]
        assert np.max(np.abs(sums - 1)) <= 1e-6
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["schemes"]["sta"]["ideal_final_p_plus1"] >= 1 - 1e-6

    def test_bundle_produces_eight_csvs(self, tmp_path, capsys):
        payload = {**REFERENCE, "scheme": "all", "name": "fig5"}
        path = write_scenario(tmp_path, payload)
        out = tmp_path / "fig5"
        assert main(["run", "--scenario", str(path), "--out", str(out)]) == 0
        capsys.readouterr()
        csvs = sorted(p.name for p in out.glob("*_*.csv"))
        assert csvs == sorted(f"{s}_{kind}.csv" for s in ("geometric", "srt", "stirap", "sta")
                              for kind in ("ideal", "noisy"))
        manifest = json.loads((out / "manifest.json").read_text())
        geo = manifest["schemes"]["geometric"]
        assert geo["ideal_final_p_plus1"] >= 1 - 1e-6
        assert geo["noisy_final_p_plus1"] >= 0.98


class TestSweepCommand:
    def test_requires_sweep_block(self, tmp_path):
        path = write_scenario(tmp_path, {"version": 1, "scheme": "sta"})
        assert main(["sweep", "--scenario", str(path), "--out", str(tmp_path / "s")]) == 2

    def test_sta_sweep_outputs(self, tmp_path, capsys):
        payload = {"version": 1, "scheme": "sta", "noise": {"gamma": 0.0},
                   "sweep": {"start": -0.2, "stop": 0.2, "count": 5,
                             "scaling": {"lo": 0.02, "hi": 0.1, "n": 5}}}
        path = write_scenario(tmp_path, payload)
        out = tmp_path / "sweep"
        assert main(["sweep", "--scenario", str(path), "--out", str(out),
                     "--plot-script"]) == 0
        capsys.readouterr()
        rows = read_csv(out / "sta_sweep.csv")
        assert rows["delta"].size == 5
        # delta = 0 column equals the ideal-run fidelity
        mid = rows["p_plus1_final"][2]
        assert mid >= 1 - 1e-6
        report = json.loads((out / "sweep_report.json").read_text())
        assert report["infidelity_exponents"]["sta"] == pytest.approx(2.0, abs=0.2)
        ordering = (out / "ordering.csv").read_text().splitlines()
        assert ordering[0] == "delta,p_sta,dominant"
        assert (out / "sweep.gp").exists()
