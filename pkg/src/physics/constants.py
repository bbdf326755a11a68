# /src/physics/constants.py
"""
Physical constants and the trap length scale.

Charges are carried in the Gaussian convention: ``q2`` is the squared charge
q²/4πε₀ in J·m, so ``q2 / r`` is an energy. Nothing downstream sees ε₀.
"""

import math
from dataclasses import dataclass

from src.core.errors import DomainError

# CODATA 2018
ELEMENTARY_CHARGE = 1.602176634e-19  # C, exact
VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m
HBAR = 1.054571817e-34  # J s, exact
SPEED_OF_LIGHT = 299792458.0  # m/s, exact
BOLTZMANN = 1.380649e-23  # J/K, exact
ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float
    c: float
    k_B: float
    coulomb_q2_unit: float
    amu: float

    def __post_init__(self) -> None:
        for name in ("hbar", "c", "k_B", "coulomb_q2_unit", "amu"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"Physical constant {name} must be positive, got {value}")


CODATA_2018 = PhysicalConstants(
    hbar=HBAR,
    c=SPEED_OF_LIGHT,
    k_B=BOLTZMANN,
    coulomb_q2_unit=ELEMENTARY_CHARGE**2 / (4.0 * math.pi * VACUUM_PERMITTIVITY),
    amu=ATOMIC_MASS_UNIT,
)


@dataclass(frozen=True)
class IonSpecies:
    name: str
    mass: float  # kg
    charge_number: int

    def __post_init__(self) -> None:
        if not self.mass > 0:
            raise DomainError(f"Ion mass must be positive, got {self.mass}")
        if self.charge_number < 0:
            raise DomainError(f"Charge number must be non-negative, got {self.charge_number}")

    @classmethod
    def from_amu(
        cls, name: str, mass_amu: float, charge_number: int = 1,
        constants: PhysicalConstants = CODATA_2018,
    ) -> "IonSpecies":
        return cls(name=name, mass=mass_amu * constants.amu, charge_number=charge_number)


BARIUM_138 = IonSpecies.from_amu("138Ba+", 137.905, 1)


def gaussian_q2(charge_number: int, constants: PhysicalConstants = CODATA_2018) -> float:
    """Squared charge Z²·e²/4πε₀ in J·m."""
    if charge_number < 0:
        raise DomainError(f"Charge number must be non-negative, got {charge_number}")
    return charge_number**2 * constants.coulomb_q2_unit


def trap_length_scale(q2: float, mass: float, omega_z: float) -> float:
    """d₀ = (q²/mω_z²)^{1/3}, the natural length of the axial trap."""
    if not (q2 > 0 and mass > 0 and omega_z > 0):
        raise DomainError(
            f"trap_length_scale needs positive inputs (q2={q2}, mass={mass}, omega_z={omega_z})"
        )
    return (q2 / (mass * omega_z**2)) ** (1.0 / 3.0)
