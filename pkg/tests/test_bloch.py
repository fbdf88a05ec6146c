"""Two-photon Bloch dynamics against closed-form oracles."""

import math

import numpy as np
import pytest

from hbeam import (
    COEFFICIENTS,
    DensityState,
    IntegrationError,
    NoiseStream,
    ScenarioSwitches,
    ac_stark_shift,
    drive_sample,
    evolve,
    evolve_path,
    ionization_rate,
    half_maximum_width,
    rabi_frequency,
    rect_pulse_response,
    second_order_doppler_shift,
    total_detuning,
)

UNDAMPED = ScenarioSwitches(ionization_on=False, ac_stark_on=False)

# on-axis intensity of the standing wave formed by 1 W per direction in
# a 283 um waist: 8 P / (pi w0^2), evaluated independently
AXIS_INTENSITY_1W = 15897807.997791993


# ------------------------------------------------------------------
# drive coefficients
# ------------------------------------------------------------------

def test_rabi_frequency_value_and_scaling():
    assert rabi_frequency(AXIS_INTENSITY_1W) == pytest.approx(
        1172.3449525563776, rel=1e-12)
    assert rabi_frequency(2.0e6) == pytest.approx(2.0 * rabi_frequency(1.0e6),
                                                  rel=1e-14)
    assert rabi_frequency(0.0) == 0.0


def test_ionization_rate_value():
    # 2 gamma_i/(2 pi) = beta_ioni * (1 + m_e/m_p)^3 * I; at 4 MW/m^2 the
    # rate is 480.8 Hz to within half a percent
    rate = ionization_rate(4.0e6)
    assert rate == pytest.approx(481.6180358079948, rel=1e-12)
    assert rate == pytest.approx(480.8, rel=5e-3)


def test_ac_stark_shift_value():
    assert ac_stark_shift(AXIS_INTENSITY_1W) == pytest.approx(
        2658.9874367754437, rel=1e-12)


def test_total_detuning_composition():
    delta, speed, intensity = 100.0, 250.0, 1.0e6
    line_shift = second_order_doppler_shift(speed)
    stark = ac_stark_shift(intensity)
    full = total_detuning(delta, speed, intensity)
    # the resonance moves down by |line_shift|, so the atom-frame detuning
    # of a fixed laser moves up by the same amount
    assert line_shift < 0.0
    assert full == pytest.approx(delta - line_shift - stark, rel=1e-12)
    # switching the Stark term off leaves only the kinematic part
    frozen = total_detuning(delta, speed, intensity, ac_stark_on=False)
    assert frozen == pytest.approx(delta - line_shift, rel=1e-12)


def test_drive_sample_consistency():
    sample = drive_sample(1.0e-4, 2.0e6, 50.0, 300.0)
    assert sample.time == 1.0e-4
    assert sample.intensity == 2.0e6
    assert sample.rabi == pytest.approx(rabi_frequency(2.0e6), rel=1e-14)
    assert sample.ion_rate == pytest.approx(ionization_rate(2.0e6), rel=1e-14)
    assert sample.total_detuning == pytest.approx(
        total_detuning(50.0, 300.0, 2.0e6), rel=1e-12)


# ------------------------------------------------------------------
# density state invariants
# ------------------------------------------------------------------

def test_density_state_defaults_to_ground():
    state = DensityState()
    assert state.rho_gg == 1.0 and state.rho_ee == 0.0
    assert state.trace == 1.0


def test_density_state_rejects_bad_populations():
    with pytest.raises(ValueError):
        DensityState(rho_gg=1.5)
    with pytest.raises(ValueError):
        DensityState(rho_gg=0.9, rho_ee=-0.1)
    with pytest.raises(ValueError):
        DensityState(rho_gg=0.8, rho_ee=0.5)  # trace above one


def test_density_state_rejects_unphysical_coherence():
    # |rho_ge|^2 may not exceed rho_gg * rho_ee
    DensityState(rho_gg=0.5, rho_ge=0.5 + 0j, rho_ee=0.5)
    with pytest.raises(ValueError):
        DensityState(rho_gg=0.5, rho_ge=0.6 + 0j, rho_ee=0.5)


# ------------------------------------------------------------------
# closed-form oracle: resonant undamped Rabi flopping
# ------------------------------------------------------------------

def test_resonant_rabi_flopping_matches_sine_squared():
    # with ionization and Stark shift off, zero detuning and zero speed,
    # the excited population is exactly sin^2(pi * Omega * t)
    rng = np.random.default_rng(11)
    for _ in range(20):
        intensity = 10.0 ** rng.uniform(5.0, 7.0)
        omega = rabi_frequency(intensity)
        t_span = rng.uniform(0.05, 2.5) / omega
        final = evolve(DensityState(), lambda t: intensity, 0.0, 0.0, t_span,
                       switches=UNDAMPED)
        expected = math.sin(math.pi * omega * t_span) ** 2
        assert final.rho_ee == pytest.approx(expected, abs=1e-6)


def test_trace_conserved_without_ionization():
    intensity = 4.0e6
    omega = rabi_frequency(intensity)
    times = np.linspace(0.0, 2.0 / omega, 40)[1:]
    states = evolve_path(DensityState(), lambda t: intensity, 120.0, 0.0,
                         times, switches=ScenarioSwitches(ionization_on=False))
    for state in states:
        assert abs(state.trace - 1.0) < 1e-8


def test_trace_decays_with_ionization():
    intensity = 4.0e6
    omega = rabi_frequency(intensity)
    times = np.linspace(0.0, 2.0 / omega, 20)[1:]
    states = evolve_path(DensityState(), lambda t: intensity, 0.0, 0.0, times)
    traces = [state.trace for state in states]
    assert all(b <= a + 1e-12 for a, b in zip(traces, traces[1:]))
    assert traces[-1] < 1.0


def test_line_symmetric_when_shifts_are_off():
    intensity = 2.0e6
    duration = 0.5e-3
    for delta in (137.0, 512.0):
        up = evolve(DensityState(), lambda t: intensity, +delta, 0.0,
                    duration, switches=UNDAMPED)
        down = evolve(DensityState(), lambda t: intensity, -delta, 0.0,
                      duration, switches=UNDAMPED)
        assert up.rho_ee == pytest.approx(down.rho_ee, abs=1e-9)


def test_detuned_rabi_oracle():
    # generalized flopping at constant drive: amplitude Omega^2/W^2 with
    # W = sqrt(Omega^2 + Delta^2), population sin^2(pi W t) * Omega^2/W^2
    intensity = 3.0e6
    omega = rabi_frequency(intensity)
    delta = 2.4 * omega
    weff = math.hypot(omega, delta)
    t_span = 1.3 / weff
    final = evolve(DensityState(), lambda t: intensity, delta, 0.0, t_span,
                   switches=UNDAMPED)
    expected = (omega / weff) ** 2 * math.sin(math.pi * weff * t_span) ** 2
    assert final.rho_ee == pytest.approx(expected, abs=1e-6)


# ------------------------------------------------------------------
# integrator behaviour
# ------------------------------------------------------------------

def test_zero_span_returns_initial_state():
    start = DensityState()
    assert evolve(start, lambda t: 1e6, 0.0, 0.0, 0.0) is start


def test_negative_span_rejected():
    with pytest.raises(ValueError):
        evolve(DensityState(), lambda t: 1e6, 0.0, 0.0, -1e-6)


def test_step_budget_exhaustion_raises_with_context():
    with pytest.raises(IntegrationError, match="step budget"):
        evolve(DensityState(), lambda t: 4e6, 0.0, 0.0, 1e-3, max_steps=3)


def test_evolve_path_requires_sorted_times():
    with pytest.raises(ValueError):
        evolve_path(DensityState(), lambda t: 1e6, 0.0, 0.0, [2e-4, 1e-4])


def test_evolve_path_composes_to_single_evolve():
    intensity_fn = lambda t: 2.0e6 * (1.0 + 0.3 * math.sin(2e4 * t))
    end = 8.0e-4
    direct = evolve(DensityState(), intensity_fn, 90.0, 200.0, end)
    stepped = evolve_path(DensityState(), intensity_fn, 90.0, 200.0,
                          [end / 3, end / 2, end])[-1]
    assert stepped.rho_ee == pytest.approx(direct.rho_ee, abs=1e-8)
    assert stepped.rho_gg == pytest.approx(direct.rho_gg, abs=1e-8)


# ------------------------------------------------------------------
# intensity noise stream
# ------------------------------------------------------------------

def test_noise_stream_reproducible_and_distinct():
    a1 = NoiseStream(seed=42, atom_index=7, fraction=0.05)
    a2 = NoiseStream(seed=42, atom_index=7, fraction=0.05)
    b = NoiseStream(seed=42, atom_index=8, fraction=0.05)
    seq1 = [a1.factor() for _ in range(50)]
    seq2 = [a2.factor() for _ in range(50)]
    seq3 = [b.factor() for _ in range(50)]
    assert seq1 == seq2
    assert seq1 != seq3


def test_noise_factors_bounded_and_centred():
    stream = NoiseStream(seed=3, atom_index=0, fraction=0.1)
    draws = np.array([stream.factor() for _ in range(4000)])
    assert np.all(draws >= 0.9) and np.all(draws <= 1.1)
    assert abs(draws.mean() - 1.0) < 0.005
    silent = NoiseStream(seed=3, atom_index=0, fraction=0.0)
    assert all(silent.factor() == 1.0 for _ in range(5))


def test_noisy_evolution_stays_physical():
    stream = NoiseStream(seed=9, atom_index=4, fraction=0.1)
    final = evolve(DensityState(), lambda t: 4e6, 0.0, 0.0, 5e-4, noise=stream)
    assert 0.0 <= final.rho_ee <= 1.0
    assert final.trace <= 1.0 + 1e-9


# ------------------------------------------------------------------
# rectangular pulse response
# ------------------------------------------------------------------

def test_weak_rect_pulse_is_fourier_limited():
    # far below saturation the line is sinc^2-shaped with a full width at
    # half maximum of 0.8859 / T
    duration = 1.0e-3
    grid = np.linspace(-1500.0, 1500.0, 121)
    spectrum = rect_pulse_response(1.0e3, duration, grid, switches=UNDAMPED)
    width = half_maximum_width(spectrum.detunings, spectrum.signal)
    assert width == pytest.approx(0.8859 / duration, rel=0.02)


def test_rect_pulse_rejects_bad_duration():
    with pytest.raises(ValueError):
        rect_pulse_response(1e6, 0.0, [0.0])
