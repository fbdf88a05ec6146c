"""Enhancement-cavity Gaussian mode and the intensity an atom experiences.

The standing wave inside the linear cavity is replaced by its cycle-averaged
intensity: the longitudinal node structure sweeps past a moving atom at
~10 GHz, six orders of magnitude above the Rabi frequency, so the atom only
responds to the average.  With P the circulating power per direction, the
averaged on-axis intensity at the waist is 4P / (pi w0^2): a factor 2 for
the two counter-propagating beams times a factor 2 from averaging the
squared standing-wave envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .beamline import Trajectory

from .constants import GEOMETRY, BeamlineGeometry


@dataclass(frozen=True)
class GaussianMode:
    """TEM00 mode defined by waist radius, wavelength, and waist plane z."""

    waist_radius: float = GEOMETRY.waist_radius
    wavelength: float = GEOMETRY.wavelength
    waist_axial_position: float = 0.0

    def __post_init__(self) -> None:
        if self.waist_radius <= 0.0 or self.wavelength <= 0.0:
            raise ValueError("waist_radius and wavelength must be positive")

    @property
    def rayleigh_range(self) -> float:
        return math.pi * self.waist_radius ** 2 / self.wavelength

    @classmethod
    def from_geometry(cls, geometry: BeamlineGeometry = GEOMETRY) -> "GaussianMode":
        return cls(waist_radius=geometry.waist_radius,
                   wavelength=geometry.wavelength,
                   waist_axial_position=0.0)


def mode_radius(mode: GaussianMode, z: float) -> float:
    """1/e^2 mode radius w(z) = w0 sqrt(1 + ((z - z_w)/z_R)^2)."""
    zeta = (z - mode.waist_axial_position) / mode.rayleigh_range
    return mode.waist_radius * math.sqrt(1.0 + zeta * zeta)


def intensity(mode: GaussianMode, r: float, z: float,
              power_per_direction: float) -> float:
    """Cycle-averaged standing-wave intensity at radius r, axial position z.

    I(r, z) = (4 P / pi w(z)^2) exp(-2 r^2 / w(z)^2); integrating over the
    transverse plane returns 4 P at every z.
    """
    if power_per_direction < 0.0:
        raise ValueError("power must be >= 0")
    w = mode_radius(mode, z)
    return (4.0 * power_per_direction / (math.pi * w * w)
            * math.exp(-2.0 * r * r / (w * w)))


def intensity_along(mode: GaussianMode, trajectory: "Trajectory", t: float,
                    power_per_direction: float,
                    noise_factor: float = 1.0) -> float:
    """Intensity at the atom's position a time t after it crossed D1.

    The trajectory is parametrized by the fractional progress u = v t / l
    between its D1 entry point (u = 0) and D2 exit point (u = 1); the
    axial coordinate maps onto the mode through the D1 plane position.
    ``noise_factor`` multiplies the result; callers implementing the white
    intensity-noise band pass (1 + eps * u) factors drawn from the atom's
    own substream, held constant over one integrator step.
    """
    if not 0.0 <= t <= trajectory.transit_time * (1.0 + 1e-12):
        raise ValueError("time outside the D1 -> D2 transit interval")
    x, y, z = trajectory.position(t)
    return intensity(mode, math.hypot(x, y), z, power_per_direction) * noise_factor
