"""Two-photon Bloch equations with photoionization damping.

The two-level system (ground 1S, excited 2S) is driven by a two-photon
Rabi frequency proportional to intensity; the excited state leaks to the
ionization continuum at a rate also proportional to intensity, which
removes population from the system entirely (no recapture).  The state is
integrated as four real components (rho_gg, Re rho_ge, Im rho_ge, rho_ee)
by an adaptive embedded Dormand-Prince 5(4) pair.

All helper functions return ordinary frequencies in Hz; the right-hand
side multiplies by 2*pi exactly once, so there is a single angular/ordinary
conversion point in the whole package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .config import ScenarioSwitches
from .constants import (
    COEFFICIENTS,
    CONSTANTS,
    AtomicCoefficients,
    reduced_mass_correction,
    second_order_doppler_shift,
)

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class DensityState:
    """Density-matrix snapshot of the driven two-level-plus-loss system."""

    rho_gg: float = 1.0
    rho_ge: complex = 0.0 + 0.0j
    rho_ee: float = 0.0

    def __post_init__(self) -> None:
        tol = 1e-9
        if not -tol <= self.rho_gg <= 1.0 + tol:
            raise ValueError("rho_gg outside [0, 1]")
        if not -tol <= self.rho_ee <= 1.0 + tol:
            raise ValueError("rho_ee outside [0, 1]")
        if self.rho_gg + self.rho_ee > 1.0 + 1e-9:
            raise ValueError("populations exceed unit trace")
        if abs(self.rho_ge) ** 2 > self.rho_gg * self.rho_ee + 1e-9:
            raise ValueError("coherence violates the purity bound")

    @property
    def trace(self) -> float:
        return self.rho_gg + self.rho_ee


@dataclass(frozen=True)
class DriveSample:
    """Instantaneous drive parameters derived from one intensity value."""

    time: float
    intensity: float
    rabi: float            # Hz
    ion_rate: float        # Hz
    total_detuning: float  # Hz


def rabi_frequency(intensity: float,
                   coefficients: AtomicCoefficients = COEFFICIENTS) -> float:
    """Two-photon Rabi frequency in Hz: 2 beta_ge (1 + m_e/m_p)^3 I."""
    if intensity < 0.0:
        raise ValueError("intensity must be >= 0")
    return 2.0 * coefficients.beta_ge * reduced_mass_correction() * intensity


def ionization_rate(intensity: float,
                    coefficients: AtomicCoefficients = COEFFICIENTS) -> float:
    """Photoionization rate of the excited state in Hz:
    beta_ioni (1 + m_e/m_p)^3 I."""
    if intensity < 0.0:
        raise ValueError("intensity must be >= 0")
    return coefficients.beta_ioni * reduced_mass_correction() * intensity


def ac_stark_shift(intensity: float,
                   coefficients: AtomicCoefficients = COEFFICIENTS) -> float:
    """Dynamic Stark shift of the transition in Hz:
    beta_ac (1 + m_e/m_p)^3 I (blue for positive beta_ac)."""
    return coefficients.beta_ac * reduced_mass_correction() * intensity


def total_detuning(laser_detuning: float, speed: float, intensity: float,
                   coefficients: AtomicCoefficients = COEFFICIENTS,
                   ac_stark_on: bool = True) -> float:
    """Detuning of the drive from the atom's shifted resonance, in Hz.

    The time-dilated atom resonates below the rest frequency, which raises
    the atom-frame detuning by +(f0/2)(v/c)^2; the Stark term lowers it by
    beta_ac (1 + m_e/m_p)^3 I.  A line recorded against ``laser_detuning``
    therefore peaks red of zero by the Doppler term and blue by the Stark
    term.
    """
    doppler = -second_order_doppler_shift(speed, coefficients)
    stark = ac_stark_shift(intensity, coefficients) if ac_stark_on else 0.0
    return laser_detuning + doppler - stark


def drive_sample(t: float, intensity: float, laser_detuning: float, speed: float,
                 switches: ScenarioSwitches = ScenarioSwitches(),
                 coefficients: AtomicCoefficients = COEFFICIENTS) -> DriveSample:
    """Bundle the instantaneous Hz-valued drive parameters at time t."""
    return DriveSample(
        time=t,
        intensity=intensity,
        rabi=rabi_frequency(intensity, coefficients),
        ion_rate=ionization_rate(intensity, coefficients) if switches.ionization_on else 0.0,
        total_detuning=total_detuning(laser_detuning, speed, intensity,
                                      coefficients, switches.ac_stark_on),
    )


class NoiseStream:
    """Deterministic per-atom white-noise factors for intensity noise.

    A splitmix64 counter stream keyed by (seed, atom_index); each call to
    :meth:`factor` returns 1 + fraction * u with u uniform on [-1, 1).
    The integrator draws one factor per attempted step position and holds
    it constant through step-size retries, keeping the noise process
    independent of the accept/reject history.
    """

    def __init__(self, seed: int, atom_index: int, fraction: float):
        self.fraction = float(fraction)
        self._state = ((seed & _MASK64) ^ ((atom_index * 0x9E3779B97F4A7C15) & _MASK64)) & _MASK64
        self._next()  # decorrelate nearby keys

    def _next(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return (z ^ (z >> 31)) & _MASK64

    def factor(self) -> float:
        if self.fraction == 0.0:
            return 1.0
        u = (self._next() >> 11) * 2.0 ** -53  # [0, 1)
        return 1.0 + self.fraction * (2.0 * u - 1.0)


class IntegrationError(RuntimeError):
    """Integrator could not meet its tolerance within the step budget."""


# Dormand-Prince 5(4) tableau.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


def _rhs(t: float, y: np.ndarray, intensity_fn: Callable[[float], float],
         noise_factor: float, delta: float, speed: float,
         ion_on: bool, ac_on: bool, coefficients: AtomicCoefficients) -> np.ndarray:
    intensity = intensity_fn(t) * noise_factor
    omega = 2.0 * math.pi * rabi_frequency(intensity, coefficients)
    gamma = 2.0 * math.pi * ionization_rate(intensity, coefficients) if ion_on else 0.0
    delta_ang = 2.0 * math.pi * total_detuning(delta, speed, intensity,
                                               coefficients, ac_on)
    rho_gg, re, im, rho_ee = y
    return np.array([
        -omega * im,
        delta_ang * im - 0.5 * gamma * re,
        -delta_ang * re + 0.5 * omega * (rho_gg - rho_ee) - 0.5 * gamma * im,
        omega * im - gamma * rho_ee,
    ])


def evolve(initial: DensityState, intensity_fn: Callable[[float], float],
           laser_detuning: float, speed: float, t_span: float,
           switches: ScenarioSwitches = ScenarioSwitches(),
           coefficients: AtomicCoefficients = COEFFICIENTS,
           rtol: float = 1e-9, atol: float = 1e-12,
           max_steps: int = 1_000_000,
           noise: NoiseStream | None = None) -> DensityState:
    """Integrate the Bloch equations from t = 0 to t = t_span.

    ``intensity_fn`` maps time to the cycle-averaged intensity along the
    atom's path.  The integrator is an adaptive embedded Dormand-Prince
    5(4) with FSAL reuse; the error norm is an RMS over the four state
    components with mixed absolute/relative weighting.

    Raises :class:`IntegrationError` when the step budget is exhausted,
    carrying the offending time and step size for diagnosis.
    """
    if t_span < 0.0:
        raise ValueError("t_span must be >= 0")
    y = np.array([initial.rho_gg, initial.rho_ge.real,
                  initial.rho_ge.imag, initial.rho_ee])
    if t_span == 0.0:
        return initial

    ion_on, ac_on = switches.ionization_on, switches.ac_stark_on
    args = (intensity_fn, 1.0, laser_detuning, speed, ion_on, ac_on, coefficients)

    t = 0.0
    h = t_span / 1e4
    k1 = None
    noise_factor = noise.factor() if noise is not None else 1.0
    steps = 0
    while t < t_span:
        if steps >= max_steps:
            raise IntegrationError(
                f"step budget exhausted at t = {t:.3e} s (h = {h:.3e} s, "
                f"detuning {laser_detuning:.6g} Hz, speed {speed:.6g} m/s)")
        h = min(h, t_span - t)
        args = (intensity_fn, noise_factor, laser_detuning, speed,
                ion_on, ac_on, coefficients)
        if k1 is None:
            k1 = _rhs(t, y, *args)
        ks = [k1]
        for stage in range(1, 7):
            yi = y + h * sum(a * k for a, k in zip(_A[stage], ks))
            ks.append(_rhs(t + _C[stage] * h, yi, *args))
        y_new = y + h * sum(a * k for a, k in zip(_A[6], ks[:6]))
        # FSAL: the 7th stage evaluated at (t+h, y_new) is next step's k1
        err_vec = h * sum(e * k for e, k in zip(_E, ks))
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
        steps += 1
        if err <= 1.0:
            t += h
            y = y_new
            k1 = ks[6]
            if noise is not None:
                noise_factor = noise.factor()
                # the FSAL stage was evaluated with the old factor; with a
                # fresh factor the first stage must be recomputed so every
                # stage of a step sees one consistent intensity
                k1 = None
        else:
            k1 = ks[0]
        factor = 0.9 * (err ** -0.2) if err > 0.0 else 5.0
        h *= min(5.0, max(0.2, factor))

    return DensityState(rho_gg=float(y[0]), rho_ge=complex(y[1], y[2]),
                        rho_ee=float(max(y[3], 0.0)))


def evolve_path(initial: DensityState, intensity_fn: Callable[[float], float],
                laser_detuning: float, speed: float, times: Sequence[float],
                switches: ScenarioSwitches = ScenarioSwitches(),
                coefficients: AtomicCoefficients = COEFFICIENTS,
                rtol: float = 1e-9, atol: float = 1e-12) -> list[DensityState]:
    """States at the requested (sorted, >= 0) times, resolved sequentially."""
    out: list[DensityState] = []
    state = initial
    previous = 0.0
    for t in times:
        if t < previous:
            raise ValueError("times must be non-decreasing")
        shifted = (lambda off: (lambda s: intensity_fn(off + s)))(previous)
        state = evolve(state, shifted, laser_detuning, speed, t - previous,
                       switches=switches, coefficients=coefficients,
                       rtol=rtol, atol=atol)
        out.append(state)
        previous = t
    return out


def rect_pulse_response(intensity: float, duration: float,
                        detunings: Sequence[float],
                        switches: ScenarioSwitches = ScenarioSwitches(),
                        coefficients: AtomicCoefficients = COEFFICIENTS,
                        rtol: float = 1e-9, atol: float = 1e-12):
    """Single resting atom under a rectangular pulse, swept over detunings.

    Returns a Spectrum whose signal is the final excited-state population
    of one v = 0 atom after a constant-intensity pulse of the given
    duration, one value per grid detuning.
    """
    from .ensemble import Spectrum

    if duration <= 0.0:
        raise ValueError("duration must be positive")
    grid = np.asarray(detunings, dtype=float)
    signal = np.empty(grid.size)
    for i, delta in enumerate(grid):
        final = evolve(DensityState(), lambda t: intensity, float(delta), 0.0,
                       duration, switches=switches, coefficients=coefficients,
                       rtol=rtol, atol=atol)
        signal[i] = final.rho_ee
    return Spectrum(detunings=grid, signal=signal, atoms_used=1,
                    config_fingerprint="single-atom-rect-pulse")
