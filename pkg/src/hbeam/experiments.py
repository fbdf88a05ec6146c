"""Numerical studies built on the line simulator.

Each study runs full Monte-Carlo lines, fits them, and condenses the
result into a handful of numbers: power-scan slopes and zero-power
intercepts, the apparent time-dilation shift under different speed
seedings, the day-to-day intercept scatter when the source aperture
drifts, and the linewidth budget left over for the laser.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import Configuration, ScenarioSwitches, default_grid
from .ensemble import (
    Spectrum,
    draw_detected_ensemble,
    response_matrix,
    write_spectrum,
)
from .fitting import LorentzianFit, TrendFit, fit_lorentzian, fit_trend

DEFAULT_POWERS = (0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.7, 0.9, 1.2)
SLOPE_RANGE = (0.1, 0.5)


@dataclass(frozen=True)
class PowerScanResult:
    """Centers and widths versus power, with slope and intercept fits.

    ``k_shift`` and ``k_broad`` are the degree-1 slopes in Hz/mW over
    ``slope_range``; ``center_intercept`` and ``width_intercept`` are the
    constant terms of those same linear fits.  ``center_trend`` and
    ``width_trend`` hold degree-2 fits over the full power range, whose
    constant terms (``extrapolated_center``, ``extrapolated_width``) give
    the curvature-aware zero-power extrapolation and whose quadratic
    coefficients quantify the nonlinearity.
    """

    powers: np.ndarray
    centers: np.ndarray
    widths: np.ndarray
    fits: tuple[LorentzianFit, ...]
    spectra: tuple[Spectrum, ...]
    k_shift: float
    k_broad: float
    center_intercept: float
    width_intercept: float
    center_trend: TrendFit
    width_trend: TrendFit
    scenario: ScenarioSwitches
    slope_range: tuple[float, float]

    def __post_init__(self) -> None:
        n = self.powers.size
        if not (self.centers.size == n and self.widths.size == n
                and len(self.fits) == n and len(self.spectra) == n):
            raise ValueError("powers, centers, widths, fits must align")
        if np.any(self.widths <= 0.0):
            raise ValueError("fitted widths must be positive")

    @property
    def extrapolated_center(self) -> float:
        return self.center_trend.coefficients[0]

    @property
    def extrapolated_width(self) -> float:
        return self.width_trend.coefficients[0]

    @property
    def center_curvature(self) -> float:
        return self.center_trend.coefficients[2]

    @property
    def width_curvature(self) -> float:
        return self.width_trend.coefficients[2]


def _with_run(config: Configuration, **fields) -> Configuration:
    return replace(config, run=replace(config.run, **fields))


def _grid_for(config: Configuration, power: float) -> np.ndarray:
    if len(config.run.detuning_grid):
        return np.asarray(config.run.detuning_grid, dtype=float)
    return default_grid(power, points=config.grid_points, span=config.grid_span,
                        coefficients=config.coefficients,
                        geometry=config.geometry)


def power_scan(powers, config: Configuration,
               scenario: ScenarioSwitches | None = None,
               seed: int | None = None,
               atoms: np.ndarray | None = None,
               slope_range: tuple[float, float] = SLOPE_RANGE) -> PowerScanResult:
    """Simulate and fit one line per power on a shared ensemble.

    The detuning grid auto-widens with power (unless the configuration
    pins an explicit grid) so the Stark-shifted line never walks off the
    scan.  Slopes are fitted on ``slope_range`` and reported per mW;
    unconverged line fits are carried through with their flag set rather
    than aborting the scan.
    """
    powers = np.asarray(powers, dtype=float)
    if powers.size < 4:
        raise ValueError("need at least 4 powers")
    inside = (powers >= slope_range[0]) & (powers <= slope_range[1])
    if inside.sum() < 3:
        raise ValueError("need at least 3 powers inside the slope-fit range")
    if scenario is None:
        scenario = config.scenario
    if seed is not None:
        config = _with_run(config, rng_seed=seed)
    run = config.run
    if atoms is None:
        atoms = draw_detected_ensemble(
            run.atoms_per_line, run.temperature, run.detection_delay,
            run.rng_seed, run.velocity_exponent, run.detection_window_end,
            config.geometry, config.entry_radius)

    fits: list[LorentzianFit] = []
    spectra: list[Spectrum] = []
    for power in powers:
        grid = _grid_for(config, float(power))
        out = response_matrix(atoms, grid, float(power), config, scenario)
        spectrum = Spectrum(detunings=grid, signal=out.sum(axis=0),
                            atoms_used=atoms.shape[0],
                            config_fingerprint=config.fingerprint())
        spectra.append(spectrum)
        fits.append(fit_lorentzian(grid, spectrum.signal))

    centers = np.array([f.center for f in fits])
    widths = np.array([f.fwhm for f in fits])
    center_line = fit_trend(powers, centers, 1, slope_range)
    width_line = fit_trend(powers, widths, 1, slope_range)
    full = (float(powers.min()), float(powers.max()))
    return PowerScanResult(
        powers=powers, centers=centers, widths=widths,
        fits=tuple(fits), spectra=tuple(spectra),
        k_shift=center_line.coefficients[1] / 1e3,
        k_broad=width_line.coefficients[1] / 1e3,
        center_intercept=center_line.coefficients[0],
        width_intercept=width_line.coefficients[0],
        center_trend=fit_trend(powers, centers, 2, full),
        width_trend=fit_trend(powers, widths, 2, full),
        scenario=scenario, slope_range=slope_range)


def scenario_matrix(powers, config: Configuration,
                    seed: int | None = None) -> dict[str, PowerScanResult]:
    """Power scans for all four switch combinations on one shared ensemble.

    Returns a dict keyed by the scenario tag (``ion1_ac1`` is the physical
    case).  Because every combination sees bitwise-identical atoms, any
    difference between the results is attributable to the switches alone.
    """
    if seed is not None:
        config = _with_run(config, rng_seed=seed)
    run = config.run
    atoms = draw_detected_ensemble(
        run.atoms_per_line, run.temperature, run.detection_delay,
        run.rng_seed, run.velocity_exponent, run.detection_window_end,
        config.geometry, config.entry_radius)
    noise = config.scenario.intensity_noise_fraction
    results: dict[str, PowerScanResult] = {}
    for ionization_on in (True, False):
        for ac_stark_on in (True, False):
            switches = ScenarioSwitches(ionization_on=ionization_on,
                                        ac_stark_on=ac_stark_on,
                                        intensity_noise_fraction=noise)
            results[switches.tag()] = power_scan(powers, config, switches,
                                                 atoms=atoms)
    return results


def doppler_exponent_study(config: Configuration, seed: int | None = None,
                           probe_power: float = 1e-4) -> tuple[float, float]:
    """Apparent time-dilation shift for speed exponents 3 and 4, in Hz.

    Both ensembles are drawn at the configured delay and probed with a
    line at negligible power, where the fitted center reduces to the
    count-weighted second-order Doppler shift of the detected atoms (no
    Stark or saturation offsets survive at 0.1 mW).  Returned as
    (exponent-3 shift, exponent-4 shift), both negative.
    """
    if config.run.detection_delay <= 0.0:
        raise ValueError("the study needs a positive detection delay")
    if seed is not None:
        config = _with_run(config, rng_seed=seed)
    shifts = []
    for exponent in (3, 4):
        cfg = _with_run(config, velocity_exponent=exponent)
        run = cfg.run
        atoms = draw_detected_ensemble(
            run.atoms_per_line, run.temperature, run.detection_delay,
            run.rng_seed, run.velocity_exponent, run.detection_window_end,
            cfg.geometry, cfg.entry_radius)
        grid = _grid_for(cfg, probe_power)
        out = response_matrix(atoms, grid, probe_power, cfg)
        shifts.append(fit_lorentzian(grid, out.sum(axis=0)).center)
    return shifts[0], shifts[1]


def frozen_nozzle_study(powers, config: Configuration,
                        radius_range: tuple[float, float] | None = None,
                        n_scans: int = 10,
                        seed: int | None = None,
                        slope_range: tuple[float, float] = SLOPE_RANGE
                        ) -> list[float]:
    """Zero-power intercept scatter when the source aperture drifts.

    Emulates days of measurement with an icing nozzle: every power point
    gets a fresh ensemble drawn through an effective D1 radius uniform in
    ``radius_range`` (default: waist radius up to the open D1 radius), the
    centers are fitted linearly over ``slope_range``, and the zero-power
    intercept of each scan is returned.  Passing a degenerate range
    (r, r) gives the fixed-aperture control, which consumes the identical
    random stream so the two arms differ only through the radius.
    """
    powers = np.asarray(powers, dtype=float)
    if powers.size < 4:
        raise ValueError("need at least 4 powers")
    if n_scans < 2:
        raise ValueError("need at least 2 scans for a scatter estimate")
    if radius_range is None:
        radius_range = (config.geometry.waist_radius, config.geometry.d1_radius)
    low, high = radius_range
    if not 0.0 < low <= high <= config.geometry.d1_radius:
        raise ValueError("radius_range must satisfy 0 < low <= high <= d1_radius")
    if seed is not None:
        config = _with_run(config, rng_seed=seed)
    run = config.run
    base_seed = run.rng_seed
    radius_rng = np.random.default_rng(
        np.random.SeedSequence(entropy=base_seed, spawn_key=(0xA11CE,)))

    intercepts: list[float] = []
    for scan in range(n_scans):
        centers = np.empty(powers.size)
        for k, power in enumerate(powers):
            radius = low + (high - low) * radius_rng.random()
            point_seed = base_seed + 1 + scan * powers.size + k
            atoms = draw_detected_ensemble(
                run.atoms_per_line, run.temperature, run.detection_delay,
                point_seed, run.velocity_exponent, run.detection_window_end,
                config.geometry, radius)
            grid = _grid_for(config, float(power))
            out = response_matrix(atoms, grid, float(power),
                                  _with_run(config, rng_seed=point_seed))
            centers[k] = fit_lorentzian(grid, out.sum(axis=0)).center
        line = fit_trend(powers, centers, 1, slope_range)
        intercepts.append(line.coefficients[0])
    return intercepts


def linewidth_budget(width_intercept_sim: float,
                     width_intercept_exp: float) -> float:
    """Laser linewidth implied by the measured zero-power width, in Hz.

    The measured intercept carries the transit-time width plus four times
    the laser linewidth (two photons, frequency doubled), so the leftover
    is (experimental - simulated) / 4.  Raises if the experimental
    intercept is below the simulated transit-time width, which no laser
    can produce.
    """
    if width_intercept_sim < 0.0 or width_intercept_exp < 0.0:
        raise ValueError("width intercepts must be non-negative")
    if width_intercept_exp < width_intercept_sim:
        raise ValueError(
            "experimental width intercept below the transit-time width; "
            "the inputs are inconsistent")
    return (width_intercept_exp - width_intercept_sim) / 4.0


def _sig6(value: float) -> float:
    """Round to six significant digits for stable JSON output."""
    if value == 0.0 or not math.isfinite(value):
        return value
    return float(f"{value:.6g}")


def _power_tag(power: float) -> str:
    """File-name tag for a power value: integer mW where possible."""
    return f"{power * 1e3:g}"


def _scan_rows(result: PowerScanResult) -> list[str]:
    rows = ["power_w,center_hz,fwhm_hz,amplitude,offset,converged"]
    for power, fit in zip(result.powers, result.fits):
        rows.append(f"{power:.6g},{fit.center:.6g},{fit.fwhm:.6g},"
                    f"{fit.amplitude:.6g},{fit.offset:.6g},"
                    f"{str(fit.converged).lower()}")
    return rows


def _scan_summary(result: PowerScanResult, seed: int) -> dict:
    return {
        "scenario": result.scenario.tag(),
        "rng_seed": seed,
        "atoms_per_line": result.spectra[0].atoms_used,
        "config_fingerprint": result.spectra[0].config_fingerprint,
        "slope_range_w": [result.slope_range[0], result.slope_range[1]],
        "k_shift_hz_per_mw": _sig6(result.k_shift),
        "k_broad_hz_per_mw": _sig6(result.k_broad),
        "center_intercept_hz": _sig6(result.center_intercept),
        "width_intercept_hz": _sig6(result.width_intercept),
        "extrapolated_center_hz": _sig6(result.extrapolated_center),
        "extrapolated_width_hz": _sig6(result.extrapolated_width),
        "center_quadratic_coefficients": [
            _sig6(c) for c in result.center_trend.coefficients],
        "width_quadratic_coefficients": [
            _sig6(c) for c in result.width_trend.coefficients],
        "center_trend_uncertainties": [
            _sig6(u) for u in result.center_trend.uncertainties],
        "width_trend_uncertainties": [
            _sig6(u) for u in result.width_trend.uncertainties],
    }


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_power_scan(result: PowerScanResult, out_dir: str | Path,
                     seed: int, prefix: str = "scan",
                     spectra: bool = True) -> None:
    """Write scan.csv, scan_summary.json, and one line_<mW>.csv per power."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{prefix}.csv").write_text("\n".join(_scan_rows(result)) + "\n")
    _write_json(out / f"{prefix}_summary.json", _scan_summary(result, seed))
    if spectra:
        for power, spectrum in zip(result.powers, result.spectra):
            write_spectrum(spectrum, out / f"line_{_power_tag(power)}.csv",
                           seed, sidecar=False)


def write_scenario_matrix(results: dict[str, PowerScanResult],
                          out_dir: str | Path, seed: int) -> None:
    """Write matrix.csv (rows per scenario and power) and matrix_summary.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = ["scenario,power_w,center_hz,fwhm_hz,amplitude,offset,converged"]
    for tag in sorted(results):
        result = results[tag]
        for power, fit in zip(result.powers, result.fits):
            rows.append(f"{tag},{power:.6g},{fit.center:.6g},{fit.fwhm:.6g},"
                        f"{fit.amplitude:.6g},{fit.offset:.6g},"
                        f"{str(fit.converged).lower()}")
    (out / "matrix.csv").write_text("\n".join(rows) + "\n")
    summary = {tag: _scan_summary(results[tag], seed) for tag in sorted(results)}
    _write_json(out / "matrix_summary.json", summary)


def write_doppler_study(shift3: float, shift4: float, delay: float,
                        out_dir: str | Path, seed: int) -> None:
    """Write doppler.csv and doppler_summary.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = ["velocity_exponent,mean_doppler_shift_hz",
            f"3,{shift3:.6g}", f"4,{shift4:.6g}"]
    (out / "doppler.csv").write_text("\n".join(rows) + "\n")
    _write_json(out / "doppler_summary.json", {
        "rng_seed": seed,
        "detection_delay_s": _sig6(delay),
        "exponent3_shift_hz": _sig6(shift3),
        "exponent4_shift_hz": _sig6(shift4),
        "difference_hz": _sig6(shift4 - shift3),
    })


def write_frozen_nozzle(random_intercepts: list[float],
                        control_intercepts: list[float],
                        radius_range: tuple[float, float],
                        out_dir: str | Path, seed: int) -> None:
    """Write nozzle.csv (one row per scan and arm) and nozzle_summary.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = ["arm,scan,intercept_hz"]
    for i, value in enumerate(random_intercepts):
        rows.append(f"random,{i},{value:.6g}")
    for i, value in enumerate(control_intercepts):
        rows.append(f"control,{i},{value:.6g}")
    (out / "nozzle.csv").write_text("\n".join(rows) + "\n")
    random_std = float(np.std(random_intercepts, ddof=1))
    control_std = float(np.std(control_intercepts, ddof=1))
    _write_json(out / "nozzle_summary.json", {
        "rng_seed": seed,
        "radius_range_m": [_sig6(radius_range[0]), _sig6(radius_range[1])],
        "n_scans": len(random_intercepts),
        "random_intercept_std_hz": _sig6(random_std),
        "control_intercept_std_hz": _sig6(control_std),
        "std_ratio": _sig6(random_std / control_std) if control_std else math.inf,
    })
