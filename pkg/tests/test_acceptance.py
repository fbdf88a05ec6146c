"""Desk-scale end-to-end checks of the full simulation pipeline.

One test per numbered check, so a verbose run prints one pass/fail line
for each.  The heavy pieces (the four-scenario power matrix at 10 000
atoms per line, the time-dilation study at two delays, the drifting
source-aperture study) are shared through module fixtures; the whole
file takes roughly ten minutes on a multicore machine.
"""

import dataclasses

import numpy as np
import pytest

from hbeam import (
    GEOMETRY,
    Configuration,
    DensityState,
    GaussianMode,
    ScenarioSwitches,
    block_generator,
    doppler_exponent_study,
    evolve,
    evolve_path,
    fit_lorentzian,
    frozen_nozzle_study,
    half_maximum_width,
    intensity,
    ionization_rate,
    linewidth_budget,
    lorentzian,
    most_probable_speed,
    rabi_frequency,
    rect_pulse_response,
    sample_speed,
    scenario_matrix,
    simulate_line,
)

ATOMS_PER_LINE = 10000
SEED = 1
SCAN_POWERS = (0.01, 0.02, 0.03, 0.05, 0.08, 0.12, 0.17, 0.25, 0.35, 0.5)
NOZZLE_POWERS = (0.1, 0.2, 0.3, 0.4, 0.5)


def check(failures: list, ok: bool, message: str) -> None:
    if not ok:
        failures.append(message)


def report(failures: list) -> None:
    assert not failures, "; ".join(failures)


@pytest.fixture(scope="module")
def desk_config():
    base = Configuration()
    run = dataclasses.replace(base.run, atoms_per_line=ATOMS_PER_LINE,
                              rng_seed=SEED)
    return dataclasses.replace(base, run=run)


@pytest.fixture(scope="module")
def matrix(desk_config):
    """Power scans for all four switch settings on shared ensembles."""
    return scenario_matrix(np.asarray(SCAN_POWERS), desk_config)


@pytest.fixture(scope="module")
def doppler_means(desk_config):
    """Signal-weighted time-dilation shifts for both source exponents
    at the standard and at a one-millisecond-longer detection delay."""
    out = {}
    for delay in (1210e-6, 2210e-6):
        run = dataclasses.replace(desk_config.run, detection_delay=delay)
        cfg = dataclasses.replace(desk_config, run=run)
        out[delay] = doppler_exponent_study(cfg)
    return out


@pytest.fixture(scope="module")
def nozzle_arms(desk_config):
    """Intercept lists for the drifting-aperture and the fixed control."""
    run = dataclasses.replace(desk_config.run, atoms_per_line=2000)
    cfg = dataclasses.replace(desk_config, run=run)
    random_arm = frozen_nozzle_study(NOZZLE_POWERS, cfg, n_scans=10)
    d1 = cfg.geometry.d1_radius
    control = frozen_nozzle_study(NOZZLE_POWERS, cfg, radius_range=(d1, d1),
                                  n_scans=10)
    return np.asarray(random_arm), np.asarray(control)


# ------------------------------------------------------------------
# anchors
# ------------------------------------------------------------------

def test_01_ionization_rate_anchor():
    rate = ionization_rate(4.0e6)
    assert rate == pytest.approx(480.8, rel=5e-3), \
        f"ionization rate at 4 MW/m^2 is {rate:.2f} Hz, want 480.8 +- 0.5%"


def test_02_focal_intensity_anchor():
    mode = GaussianMode(GEOMETRY.waist_radius, GEOMETRY.wavelength)
    axis = intensity(mode, 0.0, 0.0, 1.0)
    assert axis == pytest.approx(16.0e6, rel=0.02), \
        f"axis intensity at 1 W is {axis:.4g} W/m^2, want 16 MW/m^2 +- 2%"


def test_03_resonant_rabi_oracle():
    failures = []
    rng = np.random.default_rng(11)
    for _ in range(20):
        drive = 10.0 ** rng.uniform(5.0, 7.0)
        t = rng.uniform(1e-5, 2e-3)
        undamped = ScenarioSwitches(ionization_on=False, ac_stark_on=False)
        state = evolve(DensityState(), lambda _: drive, 0.0, 0.0, t,
                       undamped)
        expected = np.sin(np.pi * rabi_frequency(drive) * t) ** 2
        check(failures, abs(state.rho_ee - expected) < 1e-6,
              f"resonant rho_ee off by {abs(state.rho_ee - expected):.2e} "
              f"at I={drive:.3g}, t={t:.3g}")
        trace = state.rho_gg + state.rho_ee
        check(failures, abs(trace - 1.0) < 1e-8,
              f"trace drifted by {abs(trace - 1.0):.2e} without ionization")
    times = np.linspace(1e-5, 1.5e-3, 30)
    path = evolve_path(DensityState(), lambda _: 2.0e6, 150.0, 200.0, times)
    traces = np.array([s.rho_gg + s.rho_ee for s in path])
    check(failures, np.all(np.diff(traces) <= 1e-12),
          "trace increased along an ionizing evolution")
    report(failures)


# ------------------------------------------------------------------
# power scans
# ------------------------------------------------------------------

def test_04_zero_power_intercepts(matrix):
    failures = []
    physical = matrix["ion1_ac1"].extrapolated_center
    check(failures, -25.0 <= physical <= -15.0,
          f"physical center intercept {physical:.2f} Hz outside -20 +- 5")
    intercepts = np.array([matrix[tag].extrapolated_center for tag in matrix])
    deviation = float(np.max(np.abs(intercepts - intercepts.mean())))
    check(failures, deviation <= 3.0,
          f"scenario intercepts deviate up to {deviation:.2f} Hz "
          f"from their mean, want within +- 3 Hz "
          f"({dict((t, round(matrix[t].extrapolated_center, 1)) for t in matrix)})")
    report(failures)


def test_05_power_slopes(matrix):
    failures = []
    k_shift = matrix["ion1_ac1"].k_shift
    k_broad = matrix["ion1_ac1"].k_broad
    check(failures, 1.37 <= k_shift <= 1.85,
          f"k_shift {k_shift:.3f} Hz/mW outside [1.37, 1.85]")
    check(failures, 1.85 <= k_broad <= 2.66,
          f"k_broad {k_broad:.3f} Hz/mW outside [1.85, 2.66]")
    report(failures)


def test_06_width_intercept(matrix):
    width = matrix["ion1_ac1"].extrapolated_width
    assert 525.0 <= width <= 575.0, \
        f"zero-power width {width:.1f} Hz outside 550 +- 25"


# ------------------------------------------------------------------
# detection statistics
# ------------------------------------------------------------------

def test_07_doppler_exponent_means(doppler_means):
    failures = []
    near3, near4 = doppler_means[1210e-6]
    far3, far4 = doppler_means[2210e-6]
    check(failures, -22.0 <= near3 <= -18.0,
          f"cubic-source mean shift {near3:.2f} Hz outside -20 +- 2")
    check(failures, -25.0 <= near4 <= -21.0,
          f"quartic-source mean shift {near4:.2f} Hz outside -23 +- 2")
    check(failures, abs(far4 - far3) < abs(near4 - near3),
          f"exponent gap grew with delay: {abs(near4 - near3):.2f} Hz -> "
          f"{abs(far4 - far3):.2f} Hz")
    report(failures)


def test_08_linewidth_budget():
    assert linewidth_budget(550.0, 775.0) == pytest.approx(56.25, abs=1e-9)


def test_09_rect_pulse_ionization_broadening():
    grid = np.linspace(-1500.0, 1500.0, 151)
    on = rect_pulse_response(4.0e6, 1.0e-3, grid)
    off = rect_pulse_response(4.0e6, 1.0e-3, grid,
                              ScenarioSwitches(ionization_on=False))
    w_on = half_maximum_width(grid, on.signal)
    w_off = half_maximum_width(grid, off.signal)
    ratio = w_on / w_off
    assert ratio < 1.15, \
        f"ionization broadened the pulse spectrum by {100 * (ratio - 1):.1f}%"


def test_10_frozen_nozzle_scatter(nozzle_arms):
    failures = []
    random_std = float(np.std(nozzle_arms[0], ddof=1))
    control_std = float(np.std(nozzle_arms[1], ddof=1))
    check(failures, 10.0 <= random_std <= 100.0,
          f"drifting-aperture intercept scatter {random_std:.1f} Hz "
          f"outside [10, 100]")
    check(failures, random_std >= 3.0 * control_std,
          f"control scatter {control_std:.1f} Hz is not 3x below the "
          f"drifting-aperture scatter {random_std:.1f} Hz")
    report(failures)


# ------------------------------------------------------------------
# properties
# ------------------------------------------------------------------

def test_11_determinism_and_fit_properties(tmp_path):
    failures = []

    # speed sampler against the analytic distribution function
    v0 = most_probable_speed(5.0)
    draws = np.sort(sample_speed(block_generator(999, 0), v0, 3, 100000))
    x = (draws / v0) ** 2
    cdf = 1.0 - (1.0 + x) * np.exp(-x)
    empirical = np.arange(1, draws.size + 1) / draws.size
    ks = float(np.max(np.abs(cdf - empirical)))
    check(failures, ks < 0.01, f"speed-sampler KS distance {ks:.4f} >= 0.01")

    # fitted parameters must be equivariant under axis shift and scale
    x_axis = np.linspace(-2500.0, 2500.0, 51)
    rng = np.random.default_rng(5)
    y = lorentzian(x_axis, -40.0, 600.0, 7.0, 0.3) + rng.normal(0, 0.02, 51)
    base = fit_lorentzian(x_axis, y)
    shift, scale = 1234.5, 2.0
    moved = fit_lorentzian((x_axis + shift) * scale, y)
    for got, want, name in (
            (moved.center, (base.center + shift) * scale, "center"),
            (moved.fwhm, base.fwhm * scale, "fwhm"),
            (moved.amplitude, base.amplitude, "amplitude"),
            (moved.offset, base.offset, "offset")):
        error = abs(got - want) / max(1.0, abs(want))
        check(failures, error < 1e-10,
              f"fit {name} moved by {error:.2e} under axis shift+scale")

    # byte-identical spectra across repeat runs and thread counts
    base_cfg = Configuration()
    spectra = []
    for threads in (1, 4, 1):
        run = dataclasses.replace(base_cfg.run, atoms_per_line=800,
                                  rng_seed=SEED, threads=threads,
                                  detuning_grid=tuple(
                                      np.linspace(-2500, 2500, 11)))
        spectra.append(simulate_line(dataclasses.replace(base_cfg, run=run)))
    check(failures,
          np.array_equal(spectra[0].signal, spectra[1].signal)
          and np.array_equal(spectra[0].signal, spectra[2].signal),
          "spectra differ across thread counts or repeat runs")
    report(failures)
