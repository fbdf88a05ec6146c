"""Command-line interface: outputs, determinism, and error paths."""

import json
import subprocess
import sys

import pytest

from hbeam.cli import main

TINY = ["--set", "atoms_per_line=60", "--set", "detuning_points=11"]


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ------------------------------------------------------------------
# budget
# ------------------------------------------------------------------

def test_budget_prints_laser_linewidth(capsys):
    code, out, err = run_cli(["budget", "550", "775"], capsys)
    assert code == 0
    assert out.strip() == "56.25 Hz"
    assert err == ""


def test_budget_writes_summary(tmp_path, capsys):
    code, _, _ = run_cli(["budget", "550", "775", "--out", str(tmp_path)],
                         capsys)
    assert code == 0
    summary = json.loads((tmp_path / "budget_summary.json").read_text())
    assert summary["laser_linewidth_hz"] == pytest.approx(56.25)


def test_budget_rejects_inconsistent_widths(capsys):
    code, out, err = run_cli(["budget", "600", "550"], capsys)
    assert code == 1
    assert err.startswith("error:")


# ------------------------------------------------------------------
# configuration echo and overrides
# ------------------------------------------------------------------

def test_line_echoes_configuration_and_derived_speeds(tmp_path, capsys):
    code, out, _ = run_cli(["line", "--out", str(tmp_path)] + TINY, capsys)
    assert code == 0
    assert "# effective configuration" in out
    assert "atoms_per_line = 60" in out
    # 5 K most probable speed and the 1210 us gate cutoff
    assert "most probable speed 287.2 m/s" in out
    assert "gate cutoff speed 124.0 m/s" in out
    assert (tmp_path / "config_echo.txt").read_text().startswith(
        "power_per_direction_w")


def test_zero_delay_reports_unbounded_gate(tmp_path, capsys):
    code, out, _ = run_cli(["line", "--out", str(tmp_path),
                            "--set", "detection_delay_us=0"] + TINY, capsys)
    assert code == 0
    assert "gate cutoff speed unbounded" in out


def test_unknown_override_fails_cleanly(tmp_path, capsys):
    code, _, err = run_cli(["line", "--out", str(tmp_path),
                            "--set", "bogus_key=1"], capsys)
    assert code == 1
    assert err.startswith("error:")
    assert "bogus_key" in err


def test_config_file_and_override_precedence(tmp_path, capsys):
    config = tmp_path / "run.cfg"
    config.write_text("atoms_per_line = 60\ndetuning_points = 11\nseed = 4\n")
    code, out, _ = run_cli(["line", "--config", str(config),
                            "--out", str(tmp_path),
                            "--set", "seed=9"], capsys)
    assert code == 0
    assert "seed = 9" in out
    summary = json.loads((tmp_path / "line_summary.json").read_text())
    assert summary["rng_seed"] == 9


# ------------------------------------------------------------------
# line
# ------------------------------------------------------------------

def test_line_outputs_are_byte_identical_across_runs(tmp_path, capsys):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for directory in dirs:
        code, _, _ = run_cli(["line", "--out", str(directory), "--seed", "7"]
                             + TINY, capsys)
        assert code == 0
    first = (dirs[0] / "line.csv").read_bytes()
    second = (dirs[1] / "line.csv").read_bytes()
    assert first == second
    assert (dirs[0] / "line_summary.json").read_bytes() == \
           (dirs[1] / "line_summary.json").read_bytes()


def test_line_seed_changes_output(tmp_path, capsys):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for directory, seed in zip(dirs, ("7", "8")):
        run_cli(["line", "--out", str(directory), "--seed", seed] + TINY,
                capsys)
    assert (dirs[0] / "line.csv").read_bytes() != \
           (dirs[1] / "line.csv").read_bytes()


def test_line_csv_header_and_sidecar(tmp_path, capsys):
    run_cli(["line", "--out", str(tmp_path), "--seed", "3"] + TINY, capsys)
    rows = (tmp_path / "line.csv").read_text().splitlines()
    assert rows[0] == "detuning_hz,signal,atoms_used"
    assert len(rows) == 12
    sidecar = json.loads((tmp_path / "line.json").read_text())
    assert sidecar["rng_seed"] == 3
    summary = json.loads((tmp_path / "line_summary.json").read_text())
    assert summary["atoms_used"] == 60
    assert summary["config_fingerprint"] == sidecar["config_fingerprint"]


# ------------------------------------------------------------------
# studies
# ------------------------------------------------------------------

def test_rect_pulse_outputs(tmp_path, capsys):
    code, out, _ = run_cli(["rect-pulse", "--out", str(tmp_path),
                            "--duration", "3e-4",
                            "--set", "detuning_points=21"], capsys)
    assert code == 0
    assert (tmp_path / "rect_ion1.csv").exists()
    assert (tmp_path / "rect_ion0.csv").exists()
    summary = json.loads((tmp_path / "rect_summary.json").read_text())
    assert summary["broadening_ratio"] >= 1.0
    assert "rect-pulse [ion1]" in out


def test_power_scan_outputs(tmp_path, capsys):
    code, out, _ = run_cli(["power-scan", "--out", str(tmp_path),
                            "--powers", "0.1,0.2,0.35,0.5",
                            "--set", "atoms_per_line=50",
                            "--set", "detuning_points=11"], capsys)
    assert code == 0
    assert "power-scan [ion1_ac1]" in out
    rows = (tmp_path / "scan.csv").read_text().splitlines()
    assert len(rows) == 5
    assert (tmp_path / "line_100.csv").exists()
    assert (tmp_path / "scan_summary.json").exists()


def test_doppler_study_outputs(tmp_path, capsys):
    code, out, _ = run_cli(["doppler-study", "--out", str(tmp_path),
                            "--set", "atoms_per_line=200",
                            "--set", "detuning_points=11"], capsys)
    assert code == 0
    assert "doppler-study:" in out
    rows = (tmp_path / "doppler.csv").read_text().splitlines()
    assert rows[0] == "velocity_exponent,mean_doppler_shift_hz"
    assert json.loads((tmp_path / "doppler_summary.json").read_text())


def test_frozen_nozzle_outputs(tmp_path, capsys):
    code, out, _ = run_cli(["frozen-nozzle", "--out", str(tmp_path),
                            "--powers", "0.1,0.2,0.35,0.5", "--scans", "2",
                            "--set", "atoms_per_line=40",
                            "--set", "detuning_points=11"], capsys)
    assert code == 0
    assert "frozen-nozzle:" in out
    summary = json.loads((tmp_path / "nozzle_summary.json").read_text())
    assert summary["n_scans"] == 2
    rows = (tmp_path / "nozzle.csv").read_text().splitlines()
    assert len(rows) == 5  # header + 2 scans x 2 arms


# ------------------------------------------------------------------
# installed entry point
# ------------------------------------------------------------------

def test_console_script_runs():
    result = subprocess.run([sys.executable, "-m", "hbeam.cli", "budget",
                             "550", "775"], capture_output=True, text=True)
    assert result.returncode == 0
    assert result.stdout.strip() == "56.25 Hz"
