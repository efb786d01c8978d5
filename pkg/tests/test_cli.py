# Copyright (C) 2025 Zhipeng Qu
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.

"""Integration tests for main.py CLI"""

import json
import logging
import subprocess

import pandas as pd
import pytest

from harmonic_torsion.main import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, run


@pytest.fixture
def out_dir(tmp_path):
    return tmp_path / "results"


def run_command(command, config, out_dir, *extra):
    return run([command, "--config", str(config), "--out", str(out_dir), *extra])


def test_help_lists_subcommands():
    """Test the installed console script prints usage."""
    result = subprocess.run(
        ["harmonic-torsion", "--help"], capture_output=True, text=True
    )
    assert result.returncode == 0
    for name in ("geodesic", "solve", "decompose", "verify", "spectrum", "energy"):
        assert name in result.stdout


def test_geodesic(problem_toml, out_dir, capsys, caplog):
    with caplog.at_level(logging.INFO):
        code = run_command("geodesic", problem_toml, out_dir)
    assert code == EXIT_OK
    assert "Running geodesic" in caplog.text
    assert "geodesic finished" in caplog.text
    assert capsys.readouterr().out.startswith("geodesic: 51 samples")

    df = pd.read_csv(out_dir / "trajectory.csv")
    assert list(df.columns) == [
        "s",
        "gamma_1",
        "gamma_2",
        "gammaprime_1",
        "gammaprime_2",
        "speed_sq",
    ]
    assert len(df) == 51
    summary = json.loads((out_dir / "geodesic.json").read_text())
    assert summary["truncated"] is False
    assert summary["speed_drift"] < 1e-8


def test_solve(problem_toml, out_dir, capsys):
    assert run_command("solve", problem_toml, out_dir) == EXIT_OK
    assert capsys.readouterr().out.startswith("solve: ")
    report = json.loads((out_dir / "report.json").read_text())
    assert report["seed"] == 7
    assert report["solver"]["method"] == "fixed_point"
    history = report["report"]["residual_history"]
    assert len(history) == report["report"]["iterations"]
    document = json.loads((out_dir / "map.json").read_text())
    assert document["chart"] == "sphere2"
    assert len(document["values"]) == 8 * 8 * 2
    assert len(pd.read_csv(out_dir / "map.csv")) == 64


def test_solve_is_reproducible(problem_toml, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    assert run_command("solve", problem_toml, first) == EXIT_OK
    assert run_command("solve", problem_toml, second, "--threads", "2") == EXIT_OK
    assert (first / "map.csv").read_bytes() == (second / "map.csv").read_bytes()


def test_decompose(problem_toml, out_dir):
    assert run_command("decompose", problem_toml, out_dir) == EXIT_OK
    document = json.loads((out_dir / "decompose.json").read_text())
    assert document["kind"] == "zero"
    assert document["reconstruction_residual"] == 0.0


def test_spectrum(problem_toml, out_dir):
    assert run_command("spectrum", problem_toml, out_dir) == EXIT_OK
    document = json.loads((out_dir / "spectrum.json").read_text())
    assert set(document) == {"levi_civita", "torsion_connection"}
    for form in document.values():
        assert len(form["eigenvalues"]) == 3
        assert set(form["eigenvalues"][0]) == {"re", "im"}


def test_energy(problem_toml, out_dir):
    assert run_command("energy", problem_toml, out_dir) == EXIT_OK
    document = json.loads((out_dir / "energy.json").read_text())
    assert document["energy"] > 0
    assert document["radii"] == [0.5, 1.0]
    assert "gradient_check" in document


def test_verify_without_config(out_dir, capsys):
    assert run(["verify", "--out", str(out_dir), "--quiet"]) == EXIT_OK
    reports = json.loads((out_dir / "verify.json").read_text())
    assert all(r["verdict"] == "pass" for r in reports)
    assert "passed" in capsys.readouterr().out


def test_config_required(out_dir, caplog):
    assert run(["solve", "--out", str(out_dir)]) == EXIT_CONFIG
    assert "solve requires --config" in caplog.text


def test_missing_config_file(tmp_path, out_dir):
    assert run_command("energy", tmp_path / "absent.toml", out_dir) == EXIT_CONFIG


def test_invalid_config(tmp_path, out_dir, caplog):
    config = tmp_path / "bad.toml"
    config.write_text("[torsion]\nV2 = [1.0, 0.0]\n")
    assert run_command("geodesic", config, out_dir) == EXIT_CONFIG
    assert "Invalid configuration: torsion.V2" in caplog.text
    assert not out_dir.exists()


def test_numerical_failure(tmp_path, out_dir, caplog):
    config = tmp_path / "outside.toml"
    config.write_text(
        '[chart]\nname = "hyperbolic2"\n'
        "[geodesic]\nposition = [0.0, -1.0]\nvelocity = [1.0, 0.0]\n"
    )
    assert run_command("geodesic", config, out_dir) == EXIT_NUMERICAL
    assert "geodesic failed" in caplog.text


@pytest.mark.parametrize(
    "argv",
    [["verify", "--threads", "0"], ["unknown"], ["verify", "--quiet", "--verbose"]],
)
def test_bad_arguments(argv):
    assert run(argv) == EXIT_CONFIG
