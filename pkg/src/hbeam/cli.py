"""Command-line front end.

Parses a flat key = value configuration, dispatches one of the studies,
and writes plot-ready CSV files plus JSON summaries.  Identical command
line and seed produce byte-identical output files; every command echoes
the effective configuration (and writes it to the output directory) so a
result can always be traced back to its parameters.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .beamline import cutoff_speed
from .bloch import IntegrationError, rect_pulse_response
from .config import ConfigError, Configuration, apply_overrides, format_config, parse_config
from .constants import most_probable_speed
from .ensemble import simulate_line, write_spectrum
from .experiments import (
    DEFAULT_POWERS,
    doppler_exponent_study,
    frozen_nozzle_study,
    linewidth_budget,
    power_scan,
    scenario_matrix,
    write_doppler_study,
    write_frozen_nozzle,
    write_power_scan,
    write_scenario_matrix,
)
from .fitting import fit_lorentzian, half_maximum_width

_COMMANDS = ("line", "rect-pulse", "power-scan", "scenario-matrix",
             "doppler-study", "frozen-nozzle", "budget")


def _load_configuration(args: argparse.Namespace) -> Configuration:
    cfg = parse_config(args.config) if args.config else Configuration()
    if args.overrides:
        cfg = apply_overrides(cfg, args.overrides)
    if args.seed is not None:
        cfg = replace(cfg, run=replace(cfg.run, rng_seed=args.seed))
    return cfg


def _echo(cfg: Configuration, out_dir: Path) -> None:
    text = format_config(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config_echo.txt").write_text(text)
    print("# effective configuration")
    print(text, end="")
    v0 = most_probable_speed(cfg.run.temperature)
    v_max = cutoff_speed(cfg.geometry.interaction_length,
                         cfg.run.detection_delay)
    cutoff = "unbounded" if v_max == float("inf") else f"{v_max:.1f} m/s"
    print(f"# derived: most probable speed {v0:.1f} m/s, "
          f"gate cutoff speed {cutoff}")


def _print_json(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _parse_powers(text: str | None) -> np.ndarray:
    if text is None:
        return np.asarray(DEFAULT_POWERS)
    try:
        powers = np.array([float(part) for part in text.split(",")])
    except ValueError as error:
        raise ConfigError(f"bad --powers value: {error}") from None
    return powers


def _cmd_line(cfg: Configuration, args: argparse.Namespace) -> None:
    spectrum = simulate_line(cfg)
    out = Path(args.out)
    write_spectrum(spectrum, out / "line.csv", cfg.run.rng_seed)
    fit = fit_lorentzian(spectrum.detunings, spectrum.signal)
    summary = {
        "center_hz": float(f"{fit.center:.6g}"),
        "fwhm_hz": float(f"{fit.fwhm:.6g}"),
        "amplitude": float(f"{fit.amplitude:.6g}"),
        "offset": float(f"{fit.offset:.6g}"),
        "converged": fit.converged,
        "atoms_used": spectrum.atoms_used,
        "rng_seed": cfg.run.rng_seed,
        "config_fingerprint": spectrum.config_fingerprint,
    }
    (out / "line_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"line: center {fit.center:.6g} Hz, fwhm {fit.fwhm:.6g} Hz, "
          f"amplitude {fit.amplitude:.6g}")
    _print_json(summary)


def _cmd_rect_pulse(cfg: Configuration, args: argparse.Namespace) -> None:
    out = Path(args.out)
    grid = cfg.grid()
    widths = {}
    for ionization_on in (True, False):
        switches = replace(cfg.scenario, ionization_on=ionization_on)
        spectrum = rect_pulse_response(args.intensity, args.duration, grid,
                                       switches, cfg.coefficients,
                                       cfg.run.integrator_rtol,
                                       cfg.run.integrator_atol)
        tag = "ion1" if ionization_on else "ion0"
        write_spectrum(spectrum, out / f"rect_{tag}.csv", cfg.run.rng_seed,
                       sidecar=False)
        widths[tag] = half_maximum_width(grid, spectrum.signal)
        print(f"rect-pulse [{tag}]: fwhm {widths[tag]:.6g} Hz")
    summary = {
        "intensity_w_m2": float(f"{args.intensity:.6g}"),
        "duration_s": float(f"{args.duration:.6g}"),
        "fwhm_ionization_on_hz": float(f"{widths['ion1']:.6g}"),
        "fwhm_ionization_off_hz": float(f"{widths['ion0']:.6g}"),
        "broadening_ratio": float(f"{widths['ion1'] / widths['ion0']:.6g}"),
    }
    (out / "rect_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _print_json(summary)


def _scan_line(tag: str, result) -> str:
    return (f"power-scan [{tag}]: k_shift {result.k_shift:.6g} Hz/mW, "
            f"k_broad {result.k_broad:.6g} Hz/mW, "
            f"center intercept {result.center_intercept:.6g} Hz, "
            f"width intercept {result.width_intercept:.6g} Hz")


def _cmd_power_scan(cfg: Configuration, args: argparse.Namespace) -> None:
    powers = _parse_powers(args.powers)
    result = power_scan(powers, cfg)
    write_power_scan(result, args.out, cfg.run.rng_seed)
    print(_scan_line(result.scenario.tag(), result))
    _print_json(json.loads(
        (Path(args.out) / "scan_summary.json").read_text()))


def _cmd_scenario_matrix(cfg: Configuration, args: argparse.Namespace) -> None:
    powers = _parse_powers(args.powers)
    results = scenario_matrix(powers, cfg)
    write_scenario_matrix(results, args.out, cfg.run.rng_seed)
    for tag in sorted(results):
        print(_scan_line(tag, results[tag]))
    _print_json(json.loads(
        (Path(args.out) / "matrix_summary.json").read_text()))


def _cmd_doppler_study(cfg: Configuration, args: argparse.Namespace) -> None:
    shift3, shift4 = doppler_exponent_study(cfg)
    write_doppler_study(shift3, shift4, cfg.run.detection_delay,
                        args.out, cfg.run.rng_seed)
    print(f"doppler-study: exponent 3 -> {shift3:.6g} Hz, "
          f"exponent 4 -> {shift4:.6g} Hz")
    _print_json(json.loads(
        (Path(args.out) / "doppler_summary.json").read_text()))


def _cmd_frozen_nozzle(cfg: Configuration, args: argparse.Namespace) -> None:
    powers = _parse_powers(args.powers)
    geometry = cfg.geometry
    radius_range = (args.radius_low if args.radius_low is not None
                    else geometry.waist_radius,
                    args.radius_high if args.radius_high is not None
                    else geometry.d1_radius)
    random_arm = frozen_nozzle_study(powers, cfg, radius_range, args.scans)
    control = frozen_nozzle_study(
        powers, cfg, (geometry.d1_radius, geometry.d1_radius), args.scans)
    write_frozen_nozzle(random_arm, control, radius_range, args.out,
                        cfg.run.rng_seed)
    random_std = float(np.std(random_arm, ddof=1))
    control_std = float(np.std(control, ddof=1))
    print(f"frozen-nozzle: random-radius intercept std {random_std:.6g} Hz, "
          f"fixed-aperture control std {control_std:.6g} Hz")
    _print_json(json.loads(
        (Path(args.out) / "nozzle_summary.json").read_text()))


def _cmd_budget(args: argparse.Namespace) -> None:
    laser = linewidth_budget(args.width_sim, args.width_exp)
    print(f"{laser:.6g} Hz")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "budget_summary.json").write_text(json.dumps({
            "width_intercept_sim_hz": float(f"{args.width_sim:.6g}"),
            "width_intercept_exp_hz": float(f"{args.width_exp:.6g}"),
            "laser_linewidth_hz": float(f"{laser:.6g}"),
        }, indent=2, sort_keys=True) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hbeam",
        description="Monte-Carlo line shapes of a two-photon transition "
                    "in a cold, chopped atomic beam")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, default=None,
                       help="key = value configuration file")
        p.add_argument("--out", type=Path, default=Path("."),
                       help="output directory (default: current)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the RNG seed")
        p.add_argument("--set", action="append", default=[], dest="overrides",
                       metavar="KEY=VALUE", help="override one config key")

    def add_powers(p: argparse.ArgumentParser) -> None:
        p.add_argument("--powers", default=None,
                       help="comma-separated powers in W "
                            "(default: 0.05 ... 1.2 W)")

    p_line = sub.add_parser("line", help="simulate and fit a single line")
    add_common(p_line)

    p_rect = sub.add_parser("rect-pulse",
                            help="single resting atom under a rectangular "
                                 "pulse, ionization on vs off")
    add_common(p_rect)
    p_rect.add_argument("--intensity", type=float, default=4e6,
                        help="pulse intensity in W/m^2 (default 4e6)")
    p_rect.add_argument("--duration", type=float, default=1e-3,
                        help="pulse duration in s (default 1e-3)")

    p_scan = sub.add_parser("power-scan",
                            help="line centers and widths versus power")
    add_common(p_scan)
    add_powers(p_scan)

    p_matrix = sub.add_parser("scenario-matrix",
                              help="power scans for all four switch "
                                   "combinations on one ensemble")
    add_common(p_matrix)
    add_powers(p_matrix)

    p_doppler = sub.add_parser("doppler-study",
                               help="apparent time-dilation shift for speed "
                                    "exponents 3 and 4")
    add_common(p_doppler)

    p_nozzle = sub.add_parser("frozen-nozzle",
                              help="intercept scatter under a drifting "
                                   "source aperture")
    add_common(p_nozzle)
    add_powers(p_nozzle)
    p_nozzle.add_argument("--scans", type=int, default=10,
                          help="scans per arm (default 10)")
    p_nozzle.add_argument("--radius-low", type=float, default=None,
                          help="low end of the radius range in m "
                               "(default: waist radius)")
    p_nozzle.add_argument("--radius-high", type=float, default=None,
                          help="high end of the radius range in m "
                               "(default: D1 radius)")

    p_budget = sub.add_parser("budget",
                              help="laser linewidth from width intercepts")
    p_budget.add_argument("width_sim", type=float,
                          help="simulated width intercept in Hz")
    p_budget.add_argument("width_exp", type=float,
                          help="experimental width intercept in Hz")
    p_budget.add_argument("--out", type=Path, default=None,
                          help="optional directory for budget_summary.json")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "budget":
            _cmd_budget(args)
            return 0
        cfg = _load_configuration(args)
        _echo(cfg, Path(args.out))
        dispatch = {
            "line": _cmd_line,
            "rect-pulse": _cmd_rect_pulse,
            "power-scan": _cmd_power_scan,
            "scenario-matrix": _cmd_scenario_matrix,
            "doppler-study": _cmd_doppler_study,
            "frozen-nozzle": _cmd_frozen_nozzle,
        }
        dispatch[args.command](cfg, args)
        return 0
    except (ConfigError, IntegrationError, ValueError, RuntimeError,
            OSError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
