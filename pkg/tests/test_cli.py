"""
Test CLI

End-to-end runs of the treespec commands on small configurations.
"""

import json

import numpy as np
import pandas as pd
import pytest

from src.cli import main
from src.geometry import validate_geometry
from src.spectral import tree_spectrum_report

EQUILATERAL = {"geometry": {"edges": [[1.0, 4]]}, "analysis": {"count": 50}}
FIBONACCI = {
    "geometry": {
        "kind": "substitution",
        "symbols": {"A": [1.0, 2], "B": [2.0, 2]},
        "rules": {"A": "AB", "B": "A"},
    },
    "analysis": {"count": 100},
}


def write_config(tmp_path, data, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


class TestCommands:
    """Successful runs and their reports."""

    def test_validate(self, tmp_path, capsys):
        config = write_config(tmp_path, EQUILATERAL)
        assert main(["validate", "--config", config]) == 0
        captured = capsys.readouterr()
        report = json.loads(captured.out)
        assert report["schema"] == "treespec/1"
        assert report["gamma"] == 1.0
        assert report["min_branching"] == 4.0
        assert "valid explicit geometry" in captured.err

    def test_bands_csv(self, tmp_path):
        data = {"geometry": {"edges": [[1.0, 4]]}, "analysis": {"e_max": 7.0, "grid": 500}}
        config = write_config(tmp_path, data)
        output = tmp_path / "bands"
        assert main(["bands", "--config", config, "--output", str(output), "--format", "csv"]) == 0
        frame = pd.read_csv(tmp_path / "bands.csv")
        assert list(frame.columns) == ["band", "e_low", "e_high"]
        assert frame["e_low"][0] == pytest.approx(0.41409, abs=1e-5)
        assert frame["e_high"][0] == pytest.approx(6.24046, abs=1e-5)

    def test_periodicity(self, tmp_path, capsys):
        config = write_config(tmp_path, {"edges": [[1.0, 2], [2.0, 2]]})
        assert main(["periodicity", "--config", config, "--count", "100"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert (report["preperiod"], report["period"]) == (0, 2)
        assert report["window_relative"] is True

    def test_m_on_free_line(self, tmp_path, capsys):
        config = write_config(tmp_path, {"kind": "free"})
        assert main(["m", "--config", config, "--z", "1.0+0.001i"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["m"] == pytest.approx([-0.0005, 1.0], abs=1e-6)
        assert report["method"] == "tail"
        assert report["converged"] is True

    def test_emit_normalized_round_trip(self, tmp_path, capsys):
        config = write_config(tmp_path, FIBONACCI)
        normalized = tmp_path / "normalized.json"
        assert main(["validate", "--config", config, "--emit-normalized", "--output", str(normalized)]) == 0
        capsys.readouterr()
        assert main(["validate", "--config", str(normalized), "--emit-normalized"]) == 0
        assert capsys.readouterr().out == normalized.read_text(encoding="utf-8")

    def test_reports_are_deterministic(self, tmp_path):
        config = write_config(tmp_path, EQUILATERAL)
        for name in ("first", "second"):
            output = str(tmp_path / name)
            argv = ["sigma-ac", "--config", config, "--grid", "6", "--e-max", "7", "--output", output]
            assert main(argv + ["--format", "both", "--threads", "2"]) == 0
        for suffix in (".json", ".csv"):
            first = (tmp_path / f"first{suffix}").read_bytes()
            assert first == (tmp_path / f"second{suffix}").read_bytes()

    def test_sigma_ac_classifies_band_and_gap(self, tmp_path):
        config = write_config(tmp_path, EQUILATERAL)
        output = tmp_path / "sigma"
        argv = ["sigma-ac", "--config", config, "--e-min", "2", "--e-max", "7", "--grid", "2", "--output", str(output)]
        assert main(argv) == 0
        report = json.loads((tmp_path / "sigma.json").read_text(encoding="utf-8"))
        assert report["schema"] == "treespec/1"
        assert report["kind"] == "sigma-ac"

    def test_decompose(self, tmp_path, capsys):
        config = write_config(tmp_path, EQUILATERAL)
        assert main(["decompose", "--config", config, "--generations", "3"]) == 0
        captured = capsys.readouterr()
        assert "multiplicities 1, 3, 12, 48" in captured.err

    def test_pieces(self, tmp_path, capsys):
        config = write_config(tmp_path, FIBONACCI)
        assert main(["pieces", "--config", config, "--ell", "4"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["fdp"]["success"] is True
        assert report["sfdp"]["holds"] is True
        assert report["certified"] is True

    def test_reflectionless(self, tmp_path, capsys):
        config = write_config(tmp_path, EQUILATERAL)
        argv = ["reflectionless", "--config", config, "--e-min", "1", "--e-max", "3", "--grid", "3", "--cells", "8"]
        assert main(argv) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["kind"] == "reflectionless"

    def test_tree_report(self, tmp_path, capsys):
        config = write_config(tmp_path, EQUILATERAL)
        argv = ["tree-report", "--config", config, "--generations", "1", "--grid", "3", "--e-max", "7"]
        assert main(argv) == 0
        assert "2 generations" in capsys.readouterr().err

    def test_tree_report_matches_library(self, tmp_path, capsys):
        config = write_config(tmp_path, EQUILATERAL)
        argv = ["tree-report", "--config", config, "--generations", "1", "--grid", "3"]
        argv += ["--e-min", "0.5", "--e-max", "7", "--y-ladder", "1e-1,1e-2"]
        assert main(argv) == 0
        report = json.loads(capsys.readouterr().out)
        expected = tree_spectrum_report(
            validate_geometry(EQUILATERAL["geometry"]), 1, np.linspace(0.5, 7.0, 3), (1e-1, 1e-2), count=50
        )
        assert report["union"] == expected.union
        assert [g["classes"] for g in report["generations"]] == [
            g.report.classifications() for g in expected.generations
        ]

    def test_toml_config(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text('edges = [[1.0, 4]]\n\n[analysis]\ncount = 20\n', encoding="utf-8")
        assert main(["validate", "--config", str(path), "--output", str(tmp_path / "report")]) == 0
        assert (tmp_path / "report.json").exists()


class TestExitCodes:
    """Errors map to exit codes and a JSON record on stderr."""

    def error_record(self, capsys):
        return json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"]

    def test_malformed_json(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{\n  \"edges\": [[1.0, 4]],\n}\n", encoding="utf-8")
        assert main(["validate", "--config", str(path)]) == 1
        record = self.error_record(capsys)
        assert record["code"] == "parse-error"
        assert record["context"]["line"] == 3

    def test_unknown_flag(self, tmp_path, capsys):
        config = write_config(tmp_path, EQUILATERAL)
        assert main(["validate", "--config", config, "--bogus"]) == 1
        assert self.error_record(capsys)["code"] == "usage-error"

    def test_validation_error(self, tmp_path, capsys):
        config = write_config(tmp_path, {"edges": [[0.0, 4]]})
        assert main(["validate", "--config", config]) == 2
        record = self.error_record(capsys)
        assert record["code"] == "validation-error"
        assert record["context"]["assumption"] == "edge-length-bound"

    def test_parameter_error(self, tmp_path, capsys):
        config = write_config(tmp_path, FIBONACCI)
        assert main(["bands", "--config", config]) == 2
        assert self.error_record(capsys)["code"] == "parameter-error"

    def test_non_convergence(self, tmp_path, capsys):
        config = write_config(tmp_path, {"kind": "free"})
        argv = ["m", "--config", config, "--method", "weyl", "--b-max", "3", "--z", "1+0.01i"]
        assert main(argv) == 3
        report = json.loads(capsys.readouterr().out)
        assert report["converged"] is False

    def test_missing_command(self, capsys):
        assert main([]) == 1
        assert self.error_record(capsys)["code"] == "usage-error"

    def test_z_without_imaginary_unit(self, tmp_path, capsys):
        config = write_config(tmp_path, {"kind": "free"})
        assert main(["m", "--config", config, "--z", "1.0+0.001"]) == 1
        assert self.error_record(capsys)["code"] == "parse-error"

    def test_real_z_rejected(self, tmp_path):
        config = write_config(tmp_path, {"kind": "free"})
        assert main(["m", "--config", config, "--z", "2.0"]) == 2
