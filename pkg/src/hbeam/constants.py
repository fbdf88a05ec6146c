"""Physical constants, atomic coefficients, and beamline geometry.

All frequency-valued quantities in this package are ordinary frequencies in
Hz at the two-photon transition scale (twice the driving laser frequency);
angular factors of 2*pi are applied exactly once, inside the Bloch
right-hand side.  The intensity coefficients convert a cycle-averaged
standing-wave intensity in W/m^2 into a Rabi frequency, an ionization rate,
and a dynamic Stark shift of the transition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """Fundamental constants used by the beam and Doppler computations."""

    speed_of_light: float = 299792458.0          # m/s, exact
    boltzmann: float = 1.380649e-23              # J/K, exact
    hydrogen_mass: float = 1.6735328e-27         # kg
    electron_proton_mass_ratio: float = 5.446170214e-4

    def __post_init__(self) -> None:
        if min(self.speed_of_light, self.boltzmann, self.hydrogen_mass,
               self.electron_proton_mass_ratio) <= 0.0:
            raise ValueError("physical constants must be strictly positive")
        if self.electron_proton_mass_ratio >= 1e-3:
            raise ValueError("electron_proton_mass_ratio out of range")


@dataclass(frozen=True)
class AtomicCoefficients:
    """Intensity coefficients of the driven two-photon system.

    ``beta_ge`` couples intensity to the two-photon Rabi frequency,
    ``beta_ioni`` to the photoionization rate of the upper state, and
    ``beta_ac`` to the dynamic Stark shift of the transition.  All three
    are in Hz per (W/m^2).  ``transition_frequency`` is the unperturbed
    transition frequency (twice the 243 nm laser frequency); it only
    enters through the second-order Doppler term, so 0.01% accuracy
    suffices.
    """

    beta_ge: float = 3.68111e-5      # Hz / (W m^-2)
    beta_ioni: float = 1.20208e-4    # Hz / (W m^-2)
    beta_ac: float = 1.66982e-4      # Hz / (W m^-2)
    transition_frequency: float = 2.466061e15  # Hz

    def __post_init__(self) -> None:
        if min(self.beta_ge, self.beta_ioni, self.beta_ac) <= 0.0:
            raise ValueError("intensity coefficients must be positive")
        if self.transition_frequency <= 0.0:
            raise ValueError("transition_frequency must be positive")


@dataclass(frozen=True)
class BeamlineGeometry:
    """Geometry of the collimated beam and the cavity mode.

    The beam axis runs from the nozzle through two circular diaphragms D1
    and D2 into a detection region.  ``d1_d2_separation`` is the lit
    D1 -> D2 span, ``interaction_length`` the D1 -> detector span used by
    the time-of-flight gate.  ``d1_axial_position`` places D1 relative to
    the mode waist plane (the incoupler); the mode diverges so slowly
    (Rayleigh range ~1 m) that results are insensitive to it.
    """

    nozzle_radius: float = 0.6e-3        # m
    d1_radius: float = 0.65e-3           # m
    d2_radius: float = 0.70e-3           # m
    d1_d2_separation: float = 0.136      # m
    interaction_length: float = 0.150    # m, D1 plane to detector
    waist_radius: float = 283e-6         # m
    wavelength: float = 243.1e-9         # m
    d1_axial_position: float = 0.07      # m from the waist plane

    def __post_init__(self) -> None:
        if min(self.nozzle_radius, self.d1_radius, self.d2_radius,
               self.d1_d2_separation, self.interaction_length,
               self.waist_radius, self.wavelength) <= 0.0:
            raise ValueError("geometry lengths must be positive")
        if self.interaction_length < self.d1_d2_separation:
            raise ValueError("interaction_length must be >= d1_d2_separation")
        if max(self.d1_radius, self.d2_radius) >= self.d1_d2_separation:
            raise ValueError("diaphragm radii must be small against the separation")


CONSTANTS = PhysicalConstants()
COEFFICIENTS = AtomicCoefficients()
GEOMETRY = BeamlineGeometry()


def reduced_mass_correction(constants: PhysicalConstants = CONSTANTS) -> float:
    """Cubed reduced-mass factor (1 + m_e/m_p)^3.

    The intensity coefficients are published for the infinite-mass limit;
    multiplying by this factor converts them to the real atom.  Equals 1
    for an infinitely heavy nucleus and grows monotonically with the mass
    ratio.
    """
    return (1.0 + constants.electron_proton_mass_ratio) ** 3


def most_probable_speed(temperature: float,
                        constants: PhysicalConstants = CONSTANTS) -> float:
    """Most probable thermal speed v0 = sqrt(2 kB T / m) of the source gas."""
    if temperature <= 0.0:
        raise ValueError("temperature must be positive")
    return math.sqrt(2.0 * constants.boltzmann * temperature / constants.hydrogen_mass)


def second_order_doppler_shift(speed: float,
                               coefficients: AtomicCoefficients = COEFFICIENTS) -> float:
    """Relativistic time-dilation shift of the observed line, in Hz.

    Always negative (red): a moving atom's transition appears at
    -(f0/2) (v/c)^2 below the rest-frame resonance.  First-order Doppler
    cancels in the counter-propagating two-photon geometry.
    """
    ratio = speed / CONSTANTS.speed_of_light
    return -0.5 * coefficients.transition_frequency * ratio * ratio
