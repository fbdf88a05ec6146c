"""Monte-Carlo line shapes of a Doppler-free two-photon transition.

Simulates the excitation spectrum of a cold, chopped atomic hydrogen beam
crossed with a resonant standing wave: straight-line trajectories through
a Gaussian mode, two-photon Bloch dynamics with photoionization loss and
the dynamic Stark shift, second-order Doppler shifts, and delayed gated
detection.  On top sit line fitting and the numerical studies (power
scans, scenario matrices, speed-distribution and source-aperture studies,
linewidth budget) plus a small CLI.
"""

from .beamline import (
    Trajectory,
    block_generator,
    cutoff_speed,
    detected_speed_density,
    sample_disk_point,
    sample_speed,
    speed_density,
    survives_gate,
)
from .bloch import (
    DensityState,
    DriveSample,
    IntegrationError,
    NoiseStream,
    ac_stark_shift,
    drive_sample,
    evolve,
    evolve_path,
    ionization_rate,
    rabi_frequency,
    rect_pulse_response,
    total_detuning,
)
from .config import (
    ConfigError,
    Configuration,
    RunConfig,
    ScenarioSwitches,
    apply_overrides,
    default_grid,
    format_config,
    parse_config,
    parse_config_text,
)
from .constants import (
    COEFFICIENTS,
    CONSTANTS,
    GEOMETRY,
    AtomicCoefficients,
    BeamlineGeometry,
    PhysicalConstants,
    most_probable_speed,
    reduced_mass_correction,
    second_order_doppler_shift,
)
from .ensemble import (
    AtomRecord,
    Spectrum,
    draw_detected_ensemble,
    draw_ensemble,
    mean_doppler_of_detected,
    read_spectrum,
    response_matrix,
    simulate_line,
    simulate_records,
    write_spectrum,
)
from .experiments import (
    DEFAULT_POWERS,
    SLOPE_RANGE,
    PowerScanResult,
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
from .fitting import (
    LorentzianFit,
    TrendFit,
    birge_ratio,
    fit_lorentzian,
    fit_trend,
    half_maximum_width,
    lorentzian,
)
from .optics import GaussianMode, intensity, intensity_along, mode_radius

__version__ = "0.1.0"

__all__ = [
    "AtomRecord",
    "AtomicCoefficients",
    "BeamlineGeometry",
    "COEFFICIENTS",
    "CONSTANTS",
    "ConfigError",
    "Configuration",
    "DEFAULT_POWERS",
    "DensityState",
    "DriveSample",
    "GEOMETRY",
    "GaussianMode",
    "IntegrationError",
    "LorentzianFit",
    "NoiseStream",
    "PhysicalConstants",
    "PowerScanResult",
    "RunConfig",
    "SLOPE_RANGE",
    "ScenarioSwitches",
    "Spectrum",
    "Trajectory",
    "TrendFit",
    "ac_stark_shift",
    "apply_overrides",
    "birge_ratio",
    "block_generator",
    "cutoff_speed",
    "default_grid",
    "detected_speed_density",
    "doppler_exponent_study",
    "draw_detected_ensemble",
    "draw_ensemble",
    "drive_sample",
    "evolve",
    "evolve_path",
    "fit_lorentzian",
    "fit_trend",
    "format_config",
    "frozen_nozzle_study",
    "half_maximum_width",
    "intensity",
    "intensity_along",
    "ionization_rate",
    "linewidth_budget",
    "lorentzian",
    "mean_doppler_of_detected",
    "mode_radius",
    "most_probable_speed",
    "parse_config",
    "parse_config_text",
    "power_scan",
    "rabi_frequency",
    "read_spectrum",
    "rect_pulse_response",
    "reduced_mass_correction",
    "response_matrix",
    "sample_disk_point",
    "sample_speed",
    "scenario_matrix",
    "second_order_doppler_shift",
    "simulate_line",
    "simulate_records",
    "speed_density",
    "survives_gate",
    "total_detuning",
    "write_doppler_study",
    "write_frozen_nozzle",
    "write_power_scan",
    "write_scenario_matrix",
    "write_spectrum",
]
