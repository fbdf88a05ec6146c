"""Monte-Carlo line shapes: detected-atom ensembles, parallel integration.

The detector counts metastable atoms arriving between the gate delay and
the end of the counting window, so the simulated ensemble is drawn from
the arrival statistics of the chopped beam: an atom appears in the sample
with a probability proportional to how much of the counting window its
speed and light-off position let it reach.  Each accepted atom carries a
straight trajectory (one disk point per diaphragm), a speed, and its
axial position at the moment the light switched off; its contribution to
the line is the excited-state population accumulated over the portion of
the interaction region it crossed while the light was on.

The per-atom Bloch integration is compiled with numba and parallelized
over atoms.  Every row of the response matrix depends only on that atom's
inputs, so results are bitwise identical for any thread count, and the
sampler draws from counter-based generators in fixed-size blocks, so
ensembles are bitwise identical for any batch size.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit, prange, set_num_threads, config as numba_config

from .beamline import Trajectory, block_generator, sample_disk_point, sample_speed
from .bloch import IntegrationError
from .config import Configuration, ScenarioSwitches
from .constants import (
    CONSTANTS,
    GEOMETRY,
    BeamlineGeometry,
    most_probable_speed,
    reduced_mass_correction,
    second_order_doppler_shift,
)
from .optics import GaussianMode

_BLOCK = 8192          # candidates per sampling block
_MAX_EMPTY_BLOCKS = 2048

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)


@dataclass(frozen=True)
class Spectrum:
    """One simulated line: signal (summed excited population) vs detuning."""

    detunings: np.ndarray
    signal: np.ndarray
    atoms_used: int
    config_fingerprint: str = ""

    def __post_init__(self) -> None:
        if self.detunings.shape != self.signal.shape:
            raise ValueError("detunings and signal must have the same shape")


@dataclass(frozen=True)
class AtomRecord:
    """One detected atom with its line contribution and Doppler shift."""

    trajectory: Trajectory
    peak_response: float
    doppler_shift: float  # Hz, negative (red)


def draw_ensemble(n: int, temperature: float, delay: float, seed: int,
                  exponent: int = 3,
                  geometry: BeamlineGeometry = GEOMETRY,
                  entry_radius: float | None = None) -> list[Trajectory]:
    """Gate-filtered source ensemble: speeds below the time-of-flight cutoff.

    Draws trajectories from the source distribution (disk points on both
    diaphragms, thermal speeds) and keeps those whose flight time over the
    full interaction length is at least the gate delay.  Raises if the
    acceptance drops below 1e-6, which signals an unphysical delay.
    ``entry_radius`` overrides the D1 sampling radius (a frozen-up source
    emits through a smaller opening).
    """
    if n <= 0:
        raise ValueError("n must be positive")
    if entry_radius is None:
        entry_radius = geometry.d1_radius
    out: list[Trajectory] = []
    v0 = most_probable_speed(temperature)
    candidates = 0
    block = 0
    while len(out) < n:
        if block >= _MAX_EMPTY_BLOCKS and len(out) < candidates * 1e-6:
            raise RuntimeError(
                f"gate acceptance below 1e-6 after {candidates} candidates "
                f"(delay {delay:.3e} s)")
        rng = block_generator(seed, block)
        block += 1
        v = sample_speed(rng, v0, exponent, _BLOCK)
        entry = sample_disk_point(rng, entry_radius, _BLOCK)
        exits = sample_disk_point(rng, geometry.d2_radius, _BLOCK)
        candidates += _BLOCK
        keep = np.flatnonzero(geometry.interaction_length / v >= delay)
        for i in keep[: n - len(out)]:
            out.append(Trajectory(
                entry_point=(entry[i, 0], entry[i, 1]),
                exit_point=(exits[i, 0], exits[i, 1]),
                speed=float(v[i]),
                axial_span=geometry.d1_d2_separation,
                d1_axial_position=geometry.d1_axial_position))
    return out


def draw_detected_ensemble(n: int, temperature: float, delay: float, seed: int,
                           exponent: int = 3, window_end: float = 3.0e-3,
                           geometry: BeamlineGeometry = GEOMETRY,
                           entry_radius: float | None = None) -> np.ndarray:
    """Ensemble weighted by the delayed counting window, as array (n, 6).

    Columns are (x1, y1, x2, y2, speed, light_off_position): disk points
    on D1 and D2, the speed, and the axial position past D1 at the moment
    the light switched off.  Sampling follows the count statistics: the
    arrival time at the detector is uniform over the counting window
    [delay, window_end] and the light-off position follows from flying
    backwards, rejecting atoms that would have been upstream of D1.  Slow
    atoms are accepted less often exactly in proportion to the part of the
    window they can populate.  ``entry_radius`` overrides the D1 sampling
    radius (a frozen-up source emits through a smaller opening).
    """
    if n <= 0:
        raise ValueError("n must be positive")
    if not 0.0 <= delay < window_end:
        raise ValueError("need 0 <= delay < window_end")
    if entry_radius is None:
        entry_radius = geometry.d1_radius
    atoms = np.empty((n, 6))
    v0 = most_probable_speed(temperature)
    filled = 0
    candidates = 0
    block = 0
    while filled < n:
        if block >= _MAX_EMPTY_BLOCKS and filled < candidates * 1e-6:
            raise RuntimeError(
                f"detection acceptance below 1e-6 after {candidates} candidates "
                f"(delay {delay:.3e} s, window end {window_end:.3e} s)")
        rng = block_generator(seed, block)
        block += 1
        v = sample_speed(rng, v0, exponent, _BLOCK)
        arrival = delay + (window_end - delay) * rng.random(_BLOCK)
        z_off = geometry.interaction_length - v * arrival
        entry = sample_disk_point(rng, entry_radius, _BLOCK)
        exits = sample_disk_point(rng, geometry.d2_radius, _BLOCK)
        candidates += _BLOCK
        keep = np.flatnonzero(z_off >= 0.0)[: n - filled]
        take = keep.size
        atoms[filled:filled + take, 0] = entry[keep, 0]
        atoms[filled:filled + take, 1] = entry[keep, 1]
        atoms[filled:filled + take, 2] = exits[keep, 0]
        atoms[filled:filled + take, 3] = exits[keep, 1]
        atoms[filled:filled + take, 4] = v[keep]
        atoms[filled:filled + take, 5] = z_off[keep]
        filled += take
    return atoms


@njit(cache=True)
def _mix(state):
    state = state + _GOLD
    z = state
    z = (z ^ (z >> _U30)) * _MIX1
    z = (z ^ (z >> _U27)) * _MIX2
    z = z ^ (z >> _U31)
    return state, z


@njit(cache=True)
def _integrate_one(x1, y1, dx, dy, tau, u0, t_end, doppler, delta, power,
                   pre_om, pre_gi, pre_ac, w0sq, zr, z_d1, span,
                   rtol, atol, max_steps, noise_fraction, noise_state):
    """Excited population of one atom over its lit path segment.

    The path fraction at integration time t is u = u0 + t / tau with tau
    the full diaphragm-to-diaphragm transit time; intensity follows the
    Gaussian mode at the atom's instantaneous transverse and axial
    position.  Dormand-Prince 5(4) with FSAL reuse; per-step intensity
    noise factors are drawn from a splitmix64 stream and held constant
    through step-size retries.  Returns -1.0 when the step budget runs
    out, which the caller converts into an error.
    """
    k = np.zeros((7, 4))
    y = np.array([1.0, 0.0, 0.0, 0.0])
    a_rows = (
        (0.2, 0.0, 0.0, 0.0, 0.0, 0.0),
        (3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0),
        (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0),
        (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0,
         -212.0 / 729.0, 0.0, 0.0),
        (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
         -5103.0 / 18656.0, 0.0),
        (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0,
         -2187.0 / 6784.0, 11.0 / 84.0),
    )
    c_nodes = (0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0)
    b_high = (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0,
              -2187.0 / 6784.0, 11.0 / 84.0, 0.0)
    e_diff = (71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
              -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)

    t = 0.0
    h = t_end / 1e4
    have_first = False
    steps = 0
    noise_factor = 1.0
    if noise_fraction > 0.0:
        noise_state, z = _mix(noise_state)  # whitening step, output unused
        noise_state, z = _mix(noise_state)
        u01 = np.float64(z >> _U11) * 2.0 ** -53
        noise_factor = 1.0 + noise_fraction * (2.0 * u01 - 1.0)
    while t < t_end:
        if steps >= max_steps:
            return -1.0
        if h > t_end - t:
            h = t_end - t
        for s in range(7):
            if s == 0 and have_first:
                continue
            ts = t + c_nodes[s] * h
            ys0, ys1, ys2, ys3 = y[0], y[1], y[2], y[3]
            if s > 0:
                for q in range(s):
                    a = a_rows[s - 1][q] if s < 6 else b_high[q]
                    ys0 += h * a * k[q, 0]
                    ys1 += h * a * k[q, 1]
                    ys2 += h * a * k[q, 2]
                    ys3 += h * a * k[q, 3]
            u = u0 + ts / tau
            px = x1 + u * dx
            py = y1 + u * dy
            z_ax = z_d1 + u * span
            w2 = w0sq * (1.0 + (z_ax / zr) ** 2)
            inten = (4.0 * power / (np.pi * w2)
                     * np.exp(-2.0 * (px * px + py * py) / w2) * noise_factor)
            om = pre_om * inten
            gi = pre_gi * inten
            dw = 2.0 * np.pi * (delta + doppler - pre_ac * inten)
            k[s, 0] = -om * ys2
            k[s, 1] = dw * ys2 - 0.5 * gi * ys1
            k[s, 2] = -dw * ys1 + 0.5 * om * (ys0 - ys3) - 0.5 * gi * ys2
            k[s, 3] = om * ys2 - gi * ys3
        y_new = np.empty(4)
        for c in range(4):
            acc = y[c]
            for q in range(6):
                acc += h * b_high[q] * k[q, c]
            y_new[c] = acc
        err = 0.0
        for c in range(4):
            e = 0.0
            for q in range(7):
                e += h * e_diff[q] * k[q, c]
            sc = atol + rtol * max(abs(y[c]), abs(y_new[c]))
            err += (e / sc) ** 2
        err = np.sqrt(err / 4.0)
        steps += 1
        if err <= 1.0:
            t += h
            y = y_new
            for c in range(4):
                k[0, c] = k[6, c]
            have_first = True
            if noise_fraction > 0.0:
                noise_state, z = _mix(noise_state)
                u01 = np.float64(z >> _U11) * 2.0 ** -53
                noise_factor = 1.0 + noise_fraction * (2.0 * u01 - 1.0)
                # the FSAL stage used the old factor; recompute the first
                # stage so every stage of a step sees one intensity
                have_first = False
        factor = 0.9 * err ** -0.2 if err > 0.0 else 5.0
        if factor < 0.2:
            factor = 0.2
        elif factor > 5.0:
            factor = 5.0
        h *= factor
    return y[3]


@njit(parallel=True, cache=True)
def _response_matrix(atoms, detunings, power, light_on, span, z_d1,
                     w0sq, zr, pre_om, pre_gi, pre_ac, f0, c_light,
                     rtol, atol, max_steps, noise_fraction, seed):
    """Excited population per (atom, detuning); rows are independent."""
    n = atoms.shape[0]
    m = detunings.size
    out = np.zeros((n, m))
    for i in prange(n):
        x1 = atoms[i, 0]
        y1 = atoms[i, 1]
        dx = atoms[i, 2] - x1
        dy = atoms[i, 3] - y1
        v = atoms[i, 4]
        z_off = atoms[i, 5]
        path = np.sqrt(dx * dx + dy * dy + span * span)
        tau = path / v
        z_a = max(0.0, z_off - v * light_on)
        z_b = min(z_off, span)
        if z_b <= z_a:
            continue  # crossed the lit region entirely in the dark
        u0 = z_a / span
        t_end = tau * (z_b - z_a) / span
        doppler = 0.5 * f0 * (v / c_light) ** 2
        state0 = seed ^ (np.uint64(i) * _GOLD)
        for j in range(m):
            out[i, j] = _integrate_one(
                x1, y1, dx, dy, tau, u0, t_end, doppler, detunings[j], power,
                pre_om, pre_gi, pre_ac, w0sq, zr, z_d1, span,
                rtol, atol, max_steps, noise_fraction, state0)
    return out


def response_matrix(atoms: np.ndarray, detunings: np.ndarray, power: float,
                    config: Configuration,
                    switches: ScenarioSwitches | None = None) -> np.ndarray:
    """Per-atom excited populations, shape (n_atoms, n_detunings).

    ``atoms`` is an array from :func:`draw_detected_ensemble`; ``switches``
    defaults to the configuration's scenario.  Raises
    :class:`~hbeam.bloch.IntegrationError` if any atom exhausts its step
    budget.
    """
    if switches is None:
        switches = config.scenario
    run = config.run
    geom = config.geometry
    coef = config.coefficients
    mode = GaussianMode.from_geometry(geom)
    m3 = reduced_mass_correction()
    if run.threads > 0:
        set_num_threads(min(run.threads, numba_config.NUMBA_NUM_THREADS))
    detunings = np.ascontiguousarray(detunings, dtype=float)
    out = _response_matrix(
        np.ascontiguousarray(atoms, dtype=float), detunings, float(power),
        float(run.light_on_duration), geom.d1_d2_separation,
        geom.d1_axial_position,
        mode.waist_radius ** 2, mode.rayleigh_range,
        2.0 * np.pi * 2.0 * coef.beta_ge * m3,
        2.0 * np.pi * coef.beta_ioni * m3 if switches.ionization_on else 0.0,
        coef.beta_ac * m3 if switches.ac_stark_on else 0.0,
        coef.transition_frequency, CONSTANTS.speed_of_light,
        run.integrator_rtol, run.integrator_atol, run.integrator_max_steps,
        switches.intensity_noise_fraction, np.uint64(run.rng_seed & (2 ** 64 - 1)))
    if np.any(out <= -0.5):  # budget-exhausted sentinel is exactly -1
        i, j = np.argwhere(out <= -0.5)[0]
        raise IntegrationError(
            f"step budget exhausted for atom {i} at detuning "
            f"{detunings[j]:.6g} Hz (speed {atoms[i, 4]:.6g} m/s)")
    return out


def simulate_line(config: Configuration, atoms: np.ndarray | None = None,
                  power: float | None = None,
                  switches: ScenarioSwitches | None = None,
                  detunings: np.ndarray | None = None) -> Spectrum:
    """Simulate one line: detected ensemble, response matrix, column sums.

    The optional arguments let experiment drivers reuse one ensemble
    across powers or scenario switches; by default everything comes from
    the configuration.
    """
    run = config.run
    if atoms is None:
        atoms = draw_detected_ensemble(
            run.atoms_per_line, run.temperature, run.detection_delay,
            run.rng_seed, run.velocity_exponent, run.detection_window_end,
            config.geometry, config.entry_radius)
    if detunings is None:
        detunings = config.grid()
    out = response_matrix(atoms, detunings,
                          run.power_per_direction if power is None else power,
                          config, switches)
    return Spectrum(detunings=np.asarray(detunings, dtype=float),
                    signal=out.sum(axis=0), atoms_used=atoms.shape[0],
                    config_fingerprint=config.fingerprint())


def simulate_records(config: Configuration,
                     detunings: np.ndarray | None = None
                     ) -> tuple[Spectrum, list[AtomRecord]]:
    """Like :func:`simulate_line` but also returns per-atom records."""
    run = config.run
    geom = config.geometry
    atoms = draw_detected_ensemble(
        run.atoms_per_line, run.temperature, run.detection_delay,
        run.rng_seed, run.velocity_exponent, run.detection_window_end, geom,
        config.entry_radius)
    if detunings is None:
        detunings = config.grid()
    out = response_matrix(atoms, detunings, run.power_per_direction, config)
    records = []
    for i in range(atoms.shape[0]):
        trajectory = Trajectory(
            entry_point=(atoms[i, 0], atoms[i, 1]),
            exit_point=(atoms[i, 2], atoms[i, 3]),
            speed=float(atoms[i, 4]),
            axial_span=geom.d1_d2_separation,
            d1_axial_position=geom.d1_axial_position,
            start_offset=float(atoms[i, 5]))
        records.append(AtomRecord(
            trajectory=trajectory,
            peak_response=float(out[i].max()),
            doppler_shift=second_order_doppler_shift(float(atoms[i, 4]),
                                                     config.coefficients)))
    spectrum = Spectrum(detunings=np.asarray(detunings, dtype=float),
                        signal=out.sum(axis=0), atoms_used=atoms.shape[0],
                        config_fingerprint=config.fingerprint())
    return spectrum, records


def mean_doppler_of_detected(records: list[AtomRecord],
                             weighting: str = "uniform") -> float:
    """Mean second-order Doppler shift (Hz) over detected atoms.

    ``uniform`` weights every detected atom equally; ``signal`` weights
    each atom by its peak line contribution, which emphasizes the slow
    atoms that actually shape the fitted resonance.
    """
    if not records:
        raise ValueError("no records")
    shifts = np.array([r.doppler_shift for r in records])
    if weighting == "uniform":
        return float(shifts.mean())
    if weighting == "signal":
        weights = np.array([r.peak_response for r in records])
        total = weights.sum()
        if total <= 0.0:
            raise ValueError("all peak responses are zero")
        return float((weights * shifts).sum() / total)
    raise ValueError("weighting must be 'uniform' or 'signal'")


def write_spectrum(spectrum: Spectrum, path: str | Path, seed: int,
                   sidecar: bool = True) -> None:
    """Write a line as CSV, optionally with a JSON identification sidecar.

    Values are printed with six significant digits; the sidecar (same stem,
    .json) records the configuration fingerprint, the seed, and the atom
    count so a scan can be re-identified later.
    """
    path = Path(path)
    lines = ["detuning_hz,signal,atoms_used"]
    for d, s in zip(spectrum.detunings, spectrum.signal):
        lines.append(f"{d:.6g},{s:.6g},{spectrum.atoms_used}")
    path.write_text("\n".join(lines) + "\n")
    if sidecar:
        payload = {
            "config_fingerprint": spectrum.config_fingerprint,
            "rng_seed": seed,
            "atoms_used": spectrum.atoms_used,
        }
        path.with_suffix(".json").write_text(json.dumps(payload, indent=2,
                                                        sort_keys=True) + "\n")


def read_spectrum(path: str | Path) -> Spectrum:
    """Read a line written by :func:`write_spectrum` (fingerprint included)."""
    path = Path(path)
    rows = path.read_text().strip().splitlines()
    if not rows or rows[0] != "detuning_hz,signal,atoms_used":
        raise ValueError(f"{path} is not a spectrum CSV")
    data = np.array([[float(x) for x in row.split(",")] for row in rows[1:]])
    fingerprint = ""
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        fingerprint = json.loads(sidecar.read_text()).get("config_fingerprint", "")
    return Spectrum(detunings=data[:, 0], signal=data[:, 1],
                    atoms_used=int(data[0, 2]), config_fingerprint=fingerprint)
