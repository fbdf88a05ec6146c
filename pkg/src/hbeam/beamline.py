"""Trajectory geometry, thermal speed sampling, and time-of-flight gating.

Atoms travel on straight lines defined by one random point on diaphragm D1
and one on diaphragm D2, both uniform in area over their disks; the speed
along the line is drawn from an effusive-beam distribution
f(v) ~ (v/v0)^p exp[-(v/v0)^2] with p = 3 (ideal thin aperture) or p = 4.
Delayed detection discards atoms faster than the cutoff v_max = l' / dt:
too-fast atoms reach the detector before counting starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import GEOMETRY, BeamlineGeometry


@dataclass(frozen=True)
class Trajectory:
    """One atom's straight path through the interaction region.

    ``entry_point`` lies on the D1 plane, ``exit_point`` on the D2 plane,
    ``axial_span`` is the D1 -> D2 distance along the beam axis and
    ``d1_axial_position`` locates D1 in the mode frame (z of the waist
    plane = 0).  ``speed`` is the full speed along the straight path; the
    collimation (angle < 5 mrad) makes the axial/full distinction
    negligible everywhere it could matter.  ``start_offset`` records the
    atom's axial position past D1 at the instant the excitation light
    switched off; it is 0 for trajectories produced by the plain gate
    sampler, which does not track positions.
    """

    entry_point: tuple[float, float]
    exit_point: tuple[float, float]
    speed: float
    axial_span: float = GEOMETRY.d1_d2_separation
    d1_axial_position: float = GEOMETRY.d1_axial_position
    start_offset: float = 0.0

    def __post_init__(self) -> None:
        if self.speed <= 0.0:
            raise ValueError("speed must be positive")
        if self.axial_span <= 0.0:
            raise ValueError("axial_span must be positive")

    @property
    def path_length(self) -> float:
        dx = self.exit_point[0] - self.entry_point[0]
        dy = self.exit_point[1] - self.entry_point[1]
        return math.sqrt(self.axial_span ** 2 + dx * dx + dy * dy)

    @property
    def transit_time(self) -> float:
        """Time to traverse D1 -> D2 at the sampled speed."""
        return self.path_length / self.speed

    @property
    def angle_to_axis(self) -> float:
        dx = self.exit_point[0] - self.entry_point[0]
        dy = self.exit_point[1] - self.entry_point[1]
        return math.atan2(math.hypot(dx, dy), self.axial_span)

    def arrival_time(self, interaction_length: float) -> float:
        """Flight time over the D1 -> detector span at this speed."""
        return interaction_length / self.speed

    def position(self, t: float) -> tuple[float, float, float]:
        """(x, y, z) a time t after crossing D1; z in the mode frame."""
        u = self.speed * t / self.path_length
        x = self.entry_point[0] + u * (self.exit_point[0] - self.entry_point[0])
        y = self.entry_point[1] + u * (self.exit_point[1] - self.entry_point[1])
        z = self.d1_axial_position + u * self.axial_span
        return x, y, z


def sample_disk_point(rng: np.random.Generator, radius: float,
                      size: int | None = None) -> np.ndarray:
    """Uniform-area-density points on a disk of the given radius.

    Returns shape (2,) for size None, else (size, 2).  The radial
    coordinate is radius * sqrt(u) so that equal areas are equally likely.
    """
    if radius < 0.0:
        raise ValueError("radius must be >= 0")
    n = 1 if size is None else int(size)
    r = radius * np.sqrt(rng.random(n))
    phi = 2.0 * np.pi * rng.random(n)
    points = np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)
    return points[0] if size is None else points


def sample_speed(rng: np.random.Generator, v0: float, exponent: int = 3,
                 size: int | None = None) -> np.ndarray:
    """Draw speeds from f(v) ~ (v/v0)^exponent exp[-(v/v0)^2].

    Exponent 3 uses the exact transform v = v0 sqrt(-ln u1 - ln u2)
    (v^2 / v0^2 is Gamma-distributed with shape 2).  Exponent 4 uses
    rejection sampling with an exponent-3 envelope at the hotter scale
    v0' = sqrt(2) v0, for which the density ratio v exp[-(v/v0)^2/2] is
    bounded; acceptance is about 55%.
    """
    if v0 <= 0.0:
        raise ValueError("v0 must be positive")
    if exponent not in (3, 4):
        raise ValueError("exponent must be 3 or 4")
    n = 1 if size is None else int(size)

    if exponent == 3:
        u1 = 1.0 - rng.random(n)
        u2 = 1.0 - rng.random(n)
        v = v0 * np.sqrt(-np.log(u1) - np.log(u2))
    else:
        v = np.empty(n)
        filled = 0
        v0_hot = math.sqrt(2.0) * v0
        bound = v0 * math.exp(-0.5)
        while filled < n:
            m = max(2 * (n - filled), 64)
            u1 = 1.0 - rng.random(m)
            u2 = 1.0 - rng.random(m)
            cand = v0_hot * np.sqrt(-np.log(u1) - np.log(u2))
            accept_p = cand * np.exp(-0.5 * (cand / v0) ** 2) / bound
            keep = cand[rng.random(m) < accept_p]
            take = min(keep.size, n - filled)
            v[filled:filled + take] = keep[:take]
            filled += take
    return v[0] if size is None else v


def cutoff_speed(interaction_length: float, delay: float) -> float:
    """Fastest speed surviving the delayed gate, v_max = l' / dt."""
    if delay < 0.0:
        raise ValueError("delay must be >= 0")
    if delay == 0.0:
        return math.inf
    return interaction_length / delay


def survives_gate(trajectory: Trajectory, delay: float,
                  interaction_length: float) -> bool:
    """True iff the atom reaches the detector no earlier than the delay.

    The flight spans the full D1 -> detector distance, so the condition is
    interaction_length / speed >= delay.
    """
    return trajectory.arrival_time(interaction_length) >= delay


def detected_speed_density(v: np.ndarray, v_max: float, v0: float,
                           exponent: int = 3) -> np.ndarray:
    """Unnormalized detected-speed density f(v) (1 - v/v_max), 0 past v_max.

    The (1 - v/v_max) factor is the fraction of the interaction region
    from which an atom of speed v can still reach the detector after the
    delay; it is the no-loss limit of the detection statistics and serves
    as a validation oracle for ensemble speed histograms.
    """
    v = np.asarray(v, dtype=float)
    f = (v / v0) ** exponent * np.exp(-((v / v0) ** 2))
    window = np.clip(1.0 - v / v_max, 0.0, None)
    return f * window


def speed_density(v: np.ndarray, v0: float, exponent: int = 3) -> np.ndarray:
    """Unnormalized source-beam speed density (v/v0)^exponent e^-(v/v0)^2."""
    v = np.asarray(v, dtype=float)
    return (v / v0) ** exponent * np.exp(-((v / v0) ** 2))


def block_generator(seed: int, block_index: int) -> np.random.Generator:
    """Counter-based generator for one sampling block.

    Keyed by (seed, block_index) through a SeedSequence spawn key, so any
    consumer drawing blocks in order reproduces the identical stream
    regardless of batch size or scheduling.
    """
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(block_index,))
    return np.random.Generator(np.random.Philox(seq))
