"""Run configuration, scenario switches, and the flat key=value config format.

A run is fully described by (RunConfig, BeamlineGeometry, ScenarioSwitches,
AtomicCoefficients) plus a seed.  Every scalar is exposed as a flat
``key = value`` configuration entry with documented units; unknown keys are
rejected so that typos fail loudly.  The configuration fingerprint is a
SHA-256 over the canonical text form, which makes output files
self-identifying and reproducible runs verifiable.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .constants import (
    COEFFICIENTS,
    GEOMETRY,
    AtomicCoefficients,
    BeamlineGeometry,
    reduced_mass_correction,
)


@dataclass(frozen=True)
class ScenarioSwitches:
    """Artificial switches for isolating line-shape mechanisms.

    ``ionization_on`` keeps the photoionization loss channel; ``ac_stark_on``
    keeps the intensity-dependent frequency shift.  ``intensity_noise_fraction``
    adds a white multiplicative band of the given relative amplitude to the
    intensity seen by each atom (0 disables).
    """

    ionization_on: bool = True
    ac_stark_on: bool = True
    intensity_noise_fraction: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.intensity_noise_fraction <= 0.2:
            raise ValueError("intensity_noise_fraction must lie in [0, 0.2]")

    def tag(self) -> str:
        """Short file-name-safe label for the switch combination."""
        ion = "ion1" if self.ionization_on else "ion0"
        ac = "ac1" if self.ac_stark_on else "ac0"
        return f"{ion}_{ac}"


@dataclass(frozen=True)
class RunConfig:
    """Scalar parameters of one simulated line.

    ``detuning_grid`` holds the laser detunings (at the two-photon scale,
    Hz) at which the ensemble is evaluated; positive detuning means the
    doubled laser frequency lies above the unperturbed transition.
    ``detection_delay`` is the dead time between light-off and the start of
    photon counting; ``detection_window_end`` is where counting stops.
    ``light_on_duration`` is how long the chopped excitation light was on
    before light-off; it bounds the exposure of the slowest atoms.
    """

    power_per_direction: float = 0.5          # W
    temperature: float = 5.0                  # K
    detection_delay: float = 1210e-6          # s
    detuning_grid: tuple = ()                 # Hz, strictly increasing
    atoms_per_line: int = 10000
    rng_seed: int = 20260819
    velocity_exponent: int = 3
    detection_window_end: float = 3.0e-3      # s
    light_on_duration: float = 3.0e-3         # s
    integrator_rtol: float = 1e-9
    integrator_atol: float = 1e-12
    integrator_max_steps: int = 1_000_000
    threads: int = 0                          # 0 = machine parallelism

    def __post_init__(self) -> None:
        if self.power_per_direction < 0.0:
            raise ValueError("power_per_direction must be >= 0")
        if self.temperature <= 0.0:
            raise ValueError("temperature must be positive")
        if self.detection_delay < 0.0:
            raise ValueError("detection_delay must be >= 0")
        if self.detection_window_end <= self.detection_delay:
            raise ValueError("detection_window_end must exceed detection_delay")
        if self.light_on_duration <= 0.0:
            raise ValueError("light_on_duration must be positive")
        if self.atoms_per_line < 1:
            raise ValueError("atoms_per_line must be >= 1")
        if self.velocity_exponent not in (3, 4):
            raise ValueError("velocity_exponent must be 3 or 4")
        grid = np.asarray(self.detuning_grid, dtype=float)
        if grid.size and np.any(np.diff(grid) <= 0.0):
            raise ValueError("detuning_grid must be strictly increasing")
        if self.integrator_rtol <= 0.0 or self.integrator_atol <= 0.0:
            raise ValueError("integrator tolerances must be positive")


def default_grid(power: float, points: int = 51, span: float = 2500.0,
                 coefficients: AtomicCoefficients = COEFFICIENTS,
                 geometry: BeamlineGeometry = GEOMETRY) -> np.ndarray:
    """Uniform detuning grid wide enough for the Stark-shifted line.

    51 points over +-2.5 kHz by default, widened to four times the
    expected on-axis Stark shift when that is larger, so the fitted peak
    never walks off the grid at high power.
    """
    peak_intensity = 4.0 * power / (np.pi * geometry.waist_radius ** 2)
    stark = coefficients.beta_ac * reduced_mass_correction() * peak_intensity
    half = max(span, 2.0 * stark)
    return np.linspace(-half, half, points)


# ------------------------------------------------------------------
# Flat key = value configuration format
# ------------------------------------------------------------------
# Display units follow the key suffix; conversion to SI divides by an
# exactly-representable power of ten so that echoing a configuration and
# re-parsing it reproduces identical binary values.

def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (bucket, field, display-per-SI factor, parser)
_KEYS = {
    "power_per_direction_w":   ("run", "power_per_direction", 1.0, float),
    "temperature_k":           ("run", "temperature", 1.0, float),
    "detection_delay_us":      ("run", "detection_delay", 1e6, float),
    "detection_window_ms":     ("run", "detection_window_end", 1e3, float),
    "light_on_ms":             ("run", "light_on_duration", 1e3, float),
    "atoms_per_line":          ("run", "atoms_per_line", 1, int),
    "seed":                    ("run", "rng_seed", 1, int),
    "velocity_exponent":       ("run", "velocity_exponent", 1, int),
    "integrator_rtol":         ("run", "integrator_rtol", 1.0, float),
    "integrator_atol":         ("run", "integrator_atol", 1.0, float),
    "integrator_max_steps":    ("run", "integrator_max_steps", 1, int),
    "threads":                 ("run", "threads", 1, int),
    "detuning_span_hz":        ("grid", "span", 1.0, float),
    "detuning_points":         ("grid", "points", 1, int),
    "waist_um":                ("geom", "waist_radius", 1e6, float),
    "wavelength_nm":           ("geom", "wavelength", 1e9, float),
    "nozzle_radius_mm":        ("geom", "nozzle_radius", 1e3, float),
    "d1_radius_mm":            ("geom", "d1_radius", 1e3, float),
    "d2_radius_mm":            ("geom", "d2_radius", 1e3, float),
    "separation_cm":           ("geom", "d1_d2_separation", 1e2, float),
    "interaction_length_cm":   ("geom", "interaction_length", 1e2, float),
    "d1_axial_position_cm":    ("geom", "d1_axial_position", 1e2, float),
    "ionization_on":           ("scen", "ionization_on", 1, _parse_bool),
    "ac_stark_on":             ("scen", "ac_stark_on", 1, _parse_bool),
    "noise_fraction":          ("scen", "intensity_noise_fraction", 1.0, float),
    "beta_ge":                 ("coef", "beta_ge", 1.0, float),
    "beta_ioni":               ("coef", "beta_ioni", 1.0, float),
    "beta_ac":                 ("coef", "beta_ac", 1.0, float),
    "frozen_nozzle_radius_mm": ("extra", "frozen_nozzle_radius", 1e3, float),
}


@dataclass(frozen=True)
class Configuration:
    """Parsed configuration bundle: run, geometry, switches, coefficients."""

    run: RunConfig = field(default_factory=RunConfig)
    geometry: BeamlineGeometry = field(default_factory=BeamlineGeometry)
    scenario: ScenarioSwitches = field(default_factory=ScenarioSwitches)
    coefficients: AtomicCoefficients = field(default_factory=AtomicCoefficients)
    frozen_nozzle_radius: float | None = None
    grid_span: float = 2500.0
    grid_points: int = 51

    @property
    def entry_radius(self) -> float:
        """Effective D1 sampling radius; ice on the nozzle can only shrink it."""
        if self.frozen_nozzle_radius is None:
            return self.geometry.d1_radius
        if self.frozen_nozzle_radius <= 0.0:
            raise ConfigError("frozen_nozzle_radius_mm must be positive")
        return min(self.geometry.d1_radius, self.frozen_nozzle_radius)

    def grid(self) -> np.ndarray:
        """Detuning grid: explicit if set on the run, otherwise auto-spanned."""
        if len(self.run.detuning_grid):
            return np.asarray(self.run.detuning_grid, dtype=float)
        return default_grid(self.run.power_per_direction, points=self.grid_points,
                            span=self.grid_span, coefficients=self.coefficients,
                            geometry=self.geometry)

    def fingerprint(self) -> str:
        """SHA-256 over the canonical text form of every parameter."""
        return hashlib.sha256(format_config(self).encode("utf-8")).hexdigest()


class ConfigError(ValueError):
    """Raised for unreadable, unknown, or invariant-violating config input."""


def _assignments(lines: Iterable[str]) -> Iterable[tuple[int, str, str]]:
    for number, raw in enumerate(lines, start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {number}: expected 'key = value', got {raw.rstrip()!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        yield number, key, value


def parse_config_text(text: str, base: Configuration | None = None) -> Configuration:
    """Parse flat ``key = value`` text into a Configuration.

    Unknown keys are errors (reported with the offending line number);
    missing keys keep their documented defaults.  ``#`` starts a comment.
    """
    cfg = base if base is not None else Configuration()
    buckets: dict[str, dict] = {"run": {}, "geom": {}, "scen": {}, "coef": {},
                                "extra": {}, "grid": {}}

    for number, key, value in _assignments(text.splitlines()):
        if key not in _KEYS:
            raise ConfigError(f"line {number}: unknown key {key!r}")
        bucket, attr, factor, parser = _KEYS[key]
        try:
            parsed = parser(value)
        except ValueError as exc:
            raise ConfigError(f"line {number}: bad value for {key!r}: {exc}") from None
        if parser is float and factor != 1.0:
            parsed = parsed / factor
        buckets[bucket][attr] = parsed

    def build(factory, current, kwargs, label):
        if not kwargs:
            return current
        try:
            return replace(current, **kwargs)
        except ValueError as exc:
            offending = next(iter(kwargs))
            raise ConfigError(f"invalid configuration: {label} key {offending!r}: {exc}") from None

    run = build(RunConfig, cfg.run, buckets["run"], "run")
    geometry = build(BeamlineGeometry, cfg.geometry, buckets["geom"], "geometry")
    scenario = build(ScenarioSwitches, cfg.scenario, buckets["scen"], "scenario")
    coefficients = build(AtomicCoefficients, cfg.coefficients, buckets["coef"], "coefficients")
    return Configuration(
        run=run, geometry=geometry, scenario=scenario, coefficients=coefficients,
        frozen_nozzle_radius=buckets["extra"].get("frozen_nozzle_radius",
                                                  cfg.frozen_nozzle_radius),
        grid_span=buckets["grid"].get("span", cfg.grid_span),
        grid_points=buckets["grid"].get("points", cfg.grid_points),
    )


def parse_config(path: str, base: Configuration | None = None) -> Configuration:
    """Parse a configuration file; see :func:`parse_config_text`."""
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config_text(handle.read(), base=base)


def apply_overrides(cfg: Configuration, pairs: Sequence[str]) -> Configuration:
    """Apply ``key=value`` override strings on top of a configuration."""
    return parse_config_text("\n".join(pairs), base=cfg)


def format_config(cfg: Configuration) -> str:
    """Canonical text form; re-parses to an identical configuration."""
    run, geom, scen, coef = cfg.run, cfg.geometry, cfg.scenario, cfg.coefficients
    si_values = {
        "power_per_direction_w": run.power_per_direction,
        "temperature_k": run.temperature,
        "detection_delay_us": run.detection_delay,
        "detection_window_ms": run.detection_window_end,
        "light_on_ms": run.light_on_duration,
        "atoms_per_line": run.atoms_per_line,
        "seed": run.rng_seed,
        "velocity_exponent": run.velocity_exponent,
        "integrator_rtol": run.integrator_rtol,
        "integrator_atol": run.integrator_atol,
        "integrator_max_steps": run.integrator_max_steps,
        "threads": run.threads,
        "detuning_span_hz": cfg.grid_span,
        "detuning_points": cfg.grid_points,
        "waist_um": geom.waist_radius,
        "wavelength_nm": geom.wavelength,
        "nozzle_radius_mm": geom.nozzle_radius,
        "d1_radius_mm": geom.d1_radius,
        "d2_radius_mm": geom.d2_radius,
        "separation_cm": geom.d1_d2_separation,
        "interaction_length_cm": geom.interaction_length,
        "d1_axial_position_cm": geom.d1_axial_position,
        "ionization_on": scen.ionization_on,
        "ac_stark_on": scen.ac_stark_on,
        "noise_fraction": scen.intensity_noise_fraction,
        "beta_ge": coef.beta_ge,
        "beta_ioni": coef.beta_ioni,
        "beta_ac": coef.beta_ac,
    }
    if cfg.frozen_nozzle_radius is not None:
        si_values["frozen_nozzle_radius_mm"] = cfg.frozen_nozzle_radius

    lines = []
    for key, si in si_values.items():
        _, _, factor, parser = _KEYS[key]
        if parser is _parse_bool:
            text = "true" if si else "false"
        elif parser is int:
            text = str(si)
        else:
            display = si * factor if factor != 1.0 else si
            text = repr(display)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
