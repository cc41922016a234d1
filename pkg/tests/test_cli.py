import json
import re

import pytest

from iontomo import BenchmarkReport, DistributionStudy
from iontomo.cli import main


def parse_error_line(line):
    match = re.fullmatch(r"k0=(\d+) p10=([0-9.eE+-]+) p01=([0-9.eE+-]+)", line.strip())
    assert match, f"unexpected output: {line!r}"
    return int(match.group(1)), float(match.group(2)), float(match.group(3))


class TestErrorsCommand:
    def test_defaults_reproduce_reference_point(self, capsys):
        assert main(["errors"]) == 0
        k0, p10, p01 = parse_error_line(capsys.readouterr().out)
        assert k0 == 8
        assert p10 == pytest.approx(2.292e-5, rel=5e-4)
        assert p01 == pytest.approx(6.878e-4, rel=5e-4)

    def test_explicit_flags_match_defaults(self, capsys):
        assert main(["errors", "--t", "1", "--lambda", "0.001",
                     "--lambda-d", "0.2", "--lambda-b", "25"]) == 0
        first = capsys.readouterr().out
        assert main(["errors"]) == 0
        assert capsys.readouterr().out == first

    def test_digits_flag(self, capsys):
        assert main(["errors", "--digits", "3"]) == 0
        out = capsys.readouterr().out
        assert "p10=2.29e-05" in out

    def test_json_output(self, tmp_path, capsys):
        out = tmp_path / "errors.json"
        assert main(["errors", "--output", str(out), "--no-plot"]) == 0
        capsys.readouterr()
        payload = json.loads(out.read_text())
        assert payload["k0"] == 8
        assert payload["params"]["lambda_b"] == 25.0

    def test_invalid_parameter_is_single_line_error(self, capsys):
        assert main(["errors", "--lambda-b", "0"]) == 2
        err = capsys.readouterr().err
        assert err.startswith("error: ")
        assert len(err.strip().splitlines()) == 1

    def test_unknown_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["errors", "--frobnicate"])
        assert exc.value.code == 2


class TestDistributionsCommand:
    def test_json_report_with_figure(self, tmp_path, capsys):
        out = tmp_path / "dist.json"
        assert main(["distributions", "--t", "1", "--lambda", "0.05",
                     "--lambda-d", "0.05", "--lambda-b", "3",
                     "--output", str(out)]) == 0
        capsys.readouterr()
        study = DistributionStudy.from_dict(json.loads(out.read_text()))
        assert study.k0 == 1
        png = out.with_suffix(".png")
        assert png.exists()
        assert png.read_bytes()[:4] == b"\x89PNG"

    def test_csv_format(self, tmp_path, capsys):
        out = tmp_path / "dist.csv"
        assert main(["distributions", "--format", "csv", "--output", str(out),
                     "--no-plot"]) == 0
        capsys.readouterr()
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "k,p_bright,p_dark"
        k, p_bright, p_dark = lines[1].split(",")
        assert k == "0"
        assert 0.0 <= float(p_bright) <= 1.0
        assert not out.with_suffix(".png").exists()

    def test_stdout_summary(self, capsys):
        assert main(["distributions"]) == 0
        k0, _, _ = parse_error_line(capsys.readouterr().out)
        assert k0 == 8


class TestBenchmarkCommand:
    ARGS = ["benchmark", "--qubits", "2", "--states", "2", "--shots", "90000",
            "--p10", "0.1", "--p01", "0.1", "--seed", "7"]

    def test_report_files_and_round_trip(self, tmp_path, capsys):
        out = tmp_path / "bench.json"
        assert main(self.ARGS + ["--output", str(out)]) == 0
        stdout = capsys.readouterr().out
        assert "ratio=" in stdout
        report = BenchmarkReport.load(out)
        assert report.summary["ratio"] > 0
        assert len(report.states) == 2
        assert out.with_suffix(".csv").exists()
        assert out.with_suffix(".png").read_bytes()[:4] == b"\x89PNG"
        assert "generated_at" not in json.loads(out.read_text())

    def test_idempotent_outputs(self, tmp_path, capsys):
        out_a = tmp_path / "a" / "bench.json"
        out_b = tmp_path / "b" / "bench.json"
        assert main(self.ARGS + ["--output", str(out_a)]) == 0
        assert main(self.ARGS + ["--output", str(out_b)]) == 0
        capsys.readouterr()
        assert out_a.read_bytes() == out_b.read_bytes()
        assert out_a.with_suffix(".csv").read_bytes() == out_b.with_suffix(".csv").read_bytes()

    def test_timestamp_opt_in(self, tmp_path, capsys):
        out = tmp_path / "bench.json"
        assert main(self.ARGS + ["--output", str(out), "--timestamp", "--no-plot"]) == 0
        capsys.readouterr()
        assert "generated_at" in json.loads(out.read_text())

    def test_error_model_from_fluorescence_flags(self, capsys):
        assert main(["benchmark", "--qubits", "1", "--states", "1", "--shots", "3000",
                     "--t", "1", "--lambda", "0.05", "--lambda-d", "0.05",
                     "--lambda-b", "3", "--seed", "1"]) == 0
        assert "ratio=" in capsys.readouterr().out

    def test_output_dir_env(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("IONTOMO_OUTPUT_DIR", str(tmp_path))
        assert main(self.ARGS + ["--output", "nested/bench.json", "--no-plot"]) == 0
        capsys.readouterr()
        assert (tmp_path / "nested" / "bench.json").exists()

    def test_invalid_shots(self, capsys):
        assert main(["benchmark", "--qubits", "2", "--states", "1", "--shots", "4",
                     "--p10", "0.1", "--p01", "0.1"]) == 2
        assert capsys.readouterr().err.startswith("error: ")
