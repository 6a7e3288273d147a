"""Physical constants and unit conversions.

All dynamics modules work in natural units (hbar = c = 1) with energies in
eV.  Lengths and times are then both measured in 1/eV:

    length_natural = length_m / HBARC_EV_M
    time_natural   = time_s  / HBAR_EV_S

Velocities are dimensionless fractions of c, momenta are plain eV, and the
accelerating force e|E0| carries eV^2.  Conversion happens only at module
boundaries (element configuration, trajectory output, tests); everything in
between evaluates the closed forms verbatim in natural units.

The CODATA-2018 values below are pinned to 10 significant figures so golden
numbers are reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

# CODATA-2018.  Speed of light and elementary charge are exact in the SI;
# the reduced Planck constant is the 10-figure rounding of h/(2 pi).
LIGHT_SPEED_M_PER_S = 299792458.0
ELEMENTARY_CHARGE_C = 1.602176634e-19
REDUCED_PLANCK_JS = 1.054571817e-34
ELECTRON_MASS_EV = 510998.9500

HBAR_EV_S = REDUCED_PLANCK_JS / ELEMENTARY_CHARGE_C   # 6.582119565e-16 eV s
HBARC_EV_M = HBAR_EV_S * LIGHT_SPEED_M_PER_S          # 1.973269803e-7 eV m
GAUSS_PER_TESLA = 1.0e4


@dataclass(frozen=True)
class Particle:
    """Point charge transported by the dynamics modules.

    mass_ev is the rest energy m c^2 in eV.  charge_sign is -1 for an
    electron-like charge and +1 for a positron-like one; the magnitude is
    always one elementary charge.
    """

    mass_ev: float
    charge_sign: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mass_ev) and self.mass_ev > 0):
            raise ValueError(f"mass_ev must be positive and finite, got {self.mass_ev}")
        if self.charge_sign not in (-1, 1):
            raise ValueError(f"charge_sign must be -1 or +1, got {self.charge_sign}")

    @classmethod
    def electron(cls) -> "Particle":
        return cls(ELECTRON_MASS_EV, -1)

    @classmethod
    def positron(cls) -> "Particle":
        return cls(ELECTRON_MASS_EV, +1)

    @property
    def compton_length_m(self) -> float:
        return HBARC_EV_M / self.mass_ev

    @property
    def compton_time_s(self) -> float:
        return HBAR_EV_S / self.mass_ev


@dataclass(frozen=True)
class Constants:
    """Per-particle constant block: Compton scales plus the SI scalars."""

    compton_length_m: float
    compton_time_s: float
    elementary_charge_c: float = field(default=ELEMENTARY_CHARGE_C)
    reduced_planck_js: float = field(default=REDUCED_PLANCK_JS)
    light_speed_m_per_s: float = field(default=LIGHT_SPEED_M_PER_S)

    @classmethod
    def for_particle(cls, particle: Particle) -> "Constants":
        return cls(particle.compton_length_m, particle.compton_time_s)


def length_to_natural(x_m: float) -> float:
    return x_m / HBARC_EV_M


def length_from_natural(x: float) -> float:
    return x * HBARC_EV_M


def area_to_natural(x_m2: float) -> float:
    return x_m2 / (HBARC_EV_M * HBARC_EV_M)


def area_from_natural(x: float) -> float:
    return x * (HBARC_EV_M * HBARC_EV_M)


def time_to_natural(t_s: float) -> float:
    return t_s / HBAR_EV_S


def time_from_natural(t: float) -> float:
    return t * HBAR_EV_S


def accelerating_force_natural(e0_v_per_m: float) -> float:
    """e|E0| in natural units (eV^2) for a field magnitude in V/m."""
    return e0_v_per_m * HBARC_EV_M


def cyclotron_frequency(h0_gauss: float, particle: Particle) -> float:
    """Cyclotron angular frequency |q| H0 / m in rad/s.

    Only H0 >= 0 is accepted.  A reversed solenoid is encoded by flipping
    the sign of the packet OAM, not by a negative field.
    """
    if not math.isfinite(h0_gauss) or h0_gauss < 0:
        raise ValueError(f"H0 must be finite and non-negative, got {h0_gauss}")
    return (h0_gauss / GAUSS_PER_TESLA) * LIGHT_SPEED_M_PER_S**2 / particle.mass_ev


def cyclotron_frequency_natural(h0_gauss: float, particle: Particle) -> float:
    """Cyclotron frequency as a natural-unit energy (eV)."""
    return cyclotron_frequency(h0_gauss, particle) * HBAR_EV_S


def field_from_cyclotron_natural(omega0_ev: float, particle: Particle) -> float:
    """Solenoid field in gauss whose cyclotron frequency equals omega0_ev."""
    if not (math.isfinite(omega0_ev) and omega0_ev > 0):
        raise ValueError(f"omega0 must be positive, got {omega0_ev}")
    omega_si = omega0_ev / HBAR_EV_S
    return omega_si * particle.mass_ev / LIGHT_SPEED_M_PER_S**2 * GAUSS_PER_TESLA


def magnetic_radius(h0_gauss: float, particle: Particle) -> float:
    """Characteristic orbit radius rho_H = sqrt(4 hbar / (|q| H0)) in meters."""
    if not (math.isfinite(h0_gauss) and h0_gauss > 0):
        raise ValueError(f"H0 must be positive and finite, got {h0_gauss}")
    h_tesla = h0_gauss / GAUSS_PER_TESLA
    return math.sqrt(4.0 * REDUCED_PLANCK_JS / (ELEMENTARY_CHARGE_C * h_tesla))


def diffraction_time(sigma_r_m: float, particle: Particle) -> float:
    """Spreading timescale t_d = m sigma_r^2 / hbar in seconds."""
    if not (math.isfinite(sigma_r_m) and sigma_r_m > 0):
        raise ValueError(f"sigma_r must be positive and finite, got {sigma_r_m}")
    return particle.mass_ev * length_to_natural(sigma_r_m) ** 2 * HBAR_EV_S


def rayleigh_length(mean_velocity_c: float, sigma_r_m: float, particle: Particle) -> float:
    """Longitudinal spreading scale <u> c t_d in meters, velocity in units of c."""
    if not (0.0 < mean_velocity_c < 1.0):
        raise ValueError(f"mean velocity must lie in (0, 1), got {mean_velocity_c}")
    return mean_velocity_c * LIGHT_SPEED_M_PER_S * diffraction_time(sigma_r_m, particle)
