"""
Integration Tests for the ec3lab Command Line
Tests subcommand output, written tables and manifests, and exit codes
"""

import json
import math
import argparse
import sys
from pathlib import Path

import pandas as pd
import pytest

ROOT = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(ROOT))

from ec3lab.cli import _angle, _int_range, main
from ec3lab.config import reset_config_manager
from ec3lab.problem import Ec3Instance, to_document

ALL_TRIPLES = Ec3Instance(n_bits=4, clauses=((1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)))


@pytest.fixture(autouse=True)
def isolated_config(monkeypatch, tmp_path):
    """Fresh configuration writing into the test directory"""
    monkeypatch.setenv("EC3LAB_OUTPUT_DIR", str(tmp_path))
    monkeypatch.delenv("EC3LAB_CONFIG_FILE", raising=False)
    reset_config_manager()
    yield
    reset_config_manager()


def run_cli(*args):
    return main(["--jobs", "1", *args])


class TestSolve:
    """Test the brute-force solver command"""

    def test_reference_instance(self, capsys):
        assert run_cli("solve", "@reference") == 0
        assert capsys.readouterr().out == "energy=0\n0100\n"

    def test_builtin_alias(self, capsys):
        assert run_cli("solve", "@paper") == 0
        assert capsys.readouterr().out == "energy=0\n0100\n"

    def test_instance_option(self, capsys):
        assert run_cli("solve", "--instance", "@reference") == 0
        assert "0100" in capsys.readouterr().out

    def test_unsatisfiable_instance(self, tmp_path, capsys):
        path = tmp_path / "triples.ec3"
        path.write_text(to_document(ALL_TRIPLES))
        assert run_cli("solve", str(path)) == 1
        assert capsys.readouterr().out.splitlines() == ["energy=1", "0001", "0010", "0100", "1000"]

    def test_missing_file(self, tmp_path):
        assert run_cli("solve", str(tmp_path / "absent.ec3")) == 2

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "broken.ec3"
        path.write_text('{"n": 4, "clauses": [[1, 2, 9]]}')
        assert run_cli("solve", str(path)) == 2

    def test_missing_instance(self):
        assert run_cli("solve") == 2


class TestDumpHamiltonian:
    """Test the Pauli table printout"""

    def test_sections(self, capsys):
        assert run_cli("dump-hamiltonian", "@reference") == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "# H_P"
        assert "Z2 -3/8" in lines
        hb = lines[lines.index("# H_B") + 1:]
        assert "I 9/2" in hb
        assert "X2 -3/2" in hb

    def test_builtin_alias(self, capsys):
        assert run_cli("dump-hamiltonian", "@paper") == 0
        lines = capsys.readouterr().out.splitlines()
        assert "I 15/8" in lines
        assert "Z1Z2Z3 3/8" in lines

    def test_unit_weights(self, capsys):
        assert run_cli("dump-hamiltonian", "@reference", "--hb-weights", "unit") == 0
        assert "I 2" in capsys.readouterr().out.splitlines()


class TestEvolve:
    """Test the dressed evolution command"""

    def test_writes_trace_and_manifest(self, tmp_path, capsys):
        out = tmp_path / "pulse.csv"
        code = run_cli("evolve", "@reference", "--T", "2", "--steps", "200",
                       "--signal", "pulse:s=2,delta=0.08,duty=0.5", "--record-every", "10", "--out", str(out))
        assert code == 0
        assert capsys.readouterr().out.startswith("final_fidelity=")

        frame = pd.read_csv(out)
        assert list(frame.columns) == ["t_over_T", "fidelity", "coefficient"]
        assert len(frame) == 21
        assert frame["t_over_T"].iloc[-1] == 1.0
        assert set(frame["coefficient"].round(12)) <= {1.0, 3.0}

        manifest = json.loads(Path(str(out) + ".manifest.json").read_text())
        assert manifest["command"] == "evolve"
        assert manifest["parameters"]["signal"] == "pulse:s=2,delta=0.08,duty=0.5"
        assert manifest["results"]["final_fidelity"] == pytest.approx(frame["fidelity"].iloc[-1])
        assert json.loads(manifest["instance"]["document"])["n"] == 4

    def test_default_output_directory(self, tmp_path):
        assert run_cli("evolve", "@reference", "--T", "1") == 0
        assert (tmp_path / "evolve.csv").exists()

    def test_default_steps_are_refined(self, tmp_path):
        out = tmp_path / "auto.csv"
        assert run_cli("evolve", "@reference", "--T", "1", "--out", str(out)) == 0
        manifest = json.loads(Path(str(out) + ".manifest.json").read_text())
        assert manifest["results"]["steps_used"] >= 200
        assert len(pd.read_csv(out)) == 101

    @pytest.mark.parametrize("extra,refined", [([], False), (["--converge"], True)])
    def test_explicit_steps(self, tmp_path, extra, refined):
        out = tmp_path / "fixed.csv"
        assert run_cli("evolve", "@reference", "--T", "1", "--steps", "100", "--out", str(out), *extra) == 0
        steps_used = json.loads(Path(str(out) + ".manifest.json").read_text())["results"]["steps_used"]
        assert (steps_used > 100) == refined

    def test_bad_signal(self):
        assert run_cli("evolve", "@reference", "--T", "2", "--signal", "square:s=1") == 2

    def test_step_too_coarse_for_pulse(self):
        assert run_cli("evolve", "@reference", "--T", "2", "--steps", "10", "--signal", "pulse:s=2,delta=0.08") == 2


class TestRtf:
    """Test the randomized Trotter command"""

    def test_seeded_runs_are_byte_identical(self, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for path in paths:
            assert run_cli("rtf", "@reference", "--T", "5", "--k", "50", "--rule", "uniform:lo=2,hi=3",
                           "--seed", "3", "--out", str(path)) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()
        assert len(pd.read_csv(paths[0])) == 51

    def test_seed_average(self, tmp_path, capsys):
        out = tmp_path / "avg.csv"
        assert run_cli("rtf", "@reference", "--T", "3", "--k", "30", "--rule", "uniform:lo=1,hi=2",
                       "--seeds", "3", "--out", str(out)) == 0
        assert "seeds=3" in capsys.readouterr().out
        manifest = json.loads(Path(str(out) + ".manifest.json").read_text())
        assert len(manifest["results"]["seed_values"]) == 3

    def test_bad_rule(self):
        assert run_cli("rtf", "@reference", "--T", "3", "--k", "30", "--rule", "gaussian") == 2


class TestSweep:
    """Test strength sweeps and runtime search"""

    def test_fixed_runtime(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert run_cli("sweep", "@reference", "--family", "pulse:delta=0.04", "--strengths", "0,1",
                       "--T", "2", "--out", str(out)) == 0
        frame = pd.read_csv(out)
        assert list(frame.columns) == ["s", "final_fidelity"]
        assert frame["s"].tolist() == [0.0, 1.0]
        assert frame["final_fidelity"].between(0.0, 1.0).all()

    def test_unreachable_threshold(self, tmp_path, capsys):
        out = tmp_path / "threshold.csv"
        code = run_cli("sweep", "@reference", "--family", "pulse:delta=0.04", "--strengths", "0",
                       "--threshold", "0.9999", "--t-range", "0.1,0.5", "--out", str(out))
        assert code == 1
        assert "unreachable" in capsys.readouterr().out
        assert not pd.read_csv(out)["found"].any()

    def test_needs_a_mode(self):
        assert run_cli("sweep", "@reference", "--family", "zero", "--strengths", "0") == 2


class TestVerificationCommands:
    """Test scale-check, ms-verify and compile"""

    def test_scale_check_identity(self, capsys):
        assert run_cli("scale-check", "@reference", "--J", "1", "--T0", "2", "--steps", "100",
                       "--scaled-steps", "100") == 0
        assert "max_deviation=0.000e+00" in capsys.readouterr().out

    def test_scale_check_samples_must_align(self):
        assert run_cli("scale-check", "@reference", "--J", "2", "--T0", "2", "--steps", "100",
                       "--sample-every", "3") == 2

    def test_ms_verify(self, capsys):
        assert run_cli("ms-verify", "--n", "1-2", "--phi", "0.3,pi/2") == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "n phi global_dev subspace_dev passing"
        assert len(lines) == 5
        assert all(line.endswith("subspace") for line in lines[1:])

    def test_compile_with_verification(self, capsys):
        assert run_cli("compile", "@reference", "--j", "5", "--k", "10", "--T", "1", "--verify") == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[-1].startswith("# deviation=")
        assert sum(line.startswith("MS ") for line in lines) == 26
        assert sum(line.startswith("PHASE ") for line in lines) == 2

    def test_compile_slice_out_of_range(self):
        assert run_cli("compile", "@reference", "--j", "12", "--k", "10") == 2


class TestConfigFile:
    """Test how the command line reacts to the JSON config overlay"""

    def _use_config(self, monkeypatch, tmp_path, overlay):
        path = tmp_path / "lab.json"
        path.write_text(json.dumps(overlay))
        monkeypatch.setenv("EC3LAB_CONFIG_FILE", str(path))
        reset_config_manager()

    def test_string_values_are_accepted(self, monkeypatch, tmp_path):
        self._use_config(monkeypatch, tmp_path, {"runtime": {"jobs": "4"}})
        assert run_cli("solve", "@paper") == 0

    def test_bad_value_is_a_usage_error(self, monkeypatch, tmp_path):
        self._use_config(monkeypatch, tmp_path, {"runtime": {"jobs": "many"}})
        assert run_cli("solve", "@paper") == 2


class TestArgumentParsing:
    """Test argument converters"""

    @pytest.mark.parametrize("text,value", [
        ("pi/2", math.pi / 2), ("-0.5pi", -math.pi / 2), ("2*pi", 2 * math.pi), ("-pi", -math.pi), ("0.3", 0.3),
    ])
    def test_angle(self, text, value):
        assert _angle(text) == pytest.approx(value)

    def test_bad_angle(self):
        with pytest.raises(argparse.ArgumentTypeError):
            _angle("half")

    def test_int_range(self):
        assert _int_range("1-5") == [1, 2, 3, 4, 5]
        assert _int_range("2,4") == [2, 4]

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["--version"])
        assert excinfo.value.code == 0
        assert capsys.readouterr().out.startswith("ec3lab ")
