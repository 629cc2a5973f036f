"""Dimensionless unit convention used throughout the package.

Phases are in radians, so the flux unit is Phi0/2pi = 1.  The bulk LJJ
junction sets the current unit (I_c = 1) and the capacitance unit (C_J = 1),
which makes the Josephson plasma frequency omega_J = 1 and the time unit
1/omega_J.  The cell length a = 1 is the length unit.  With these choices the
only free bulk parameter is the cell inductance L = (a/lambda_J)**2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

PHI0_OVER_2PI = 1.0
IC = 1.0
CJ = 1.0
A = 1.0
OMEGA_J = 1.0
NU_J = OMEGA_J / (2.0 * math.pi)
#: one Josephson period 1/nu_J in time units 1/omega_J
JOSEPHSON_PERIOD = 1.0 / NU_J

DEFAULT_DISCRETENESS = 1.0 / 3.0


@dataclass(frozen=True)
class UnitSystem:
    """Derived bulk quantities for a given discreteness a/lambda_J."""

    discreteness: float = DEFAULT_DISCRETENESS

    def __post_init__(self):
        if not self.discreteness > 0:
            raise ValueError("discreteness a/lambda_J must be positive")

    @property
    def L(self) -> float:
        return self.discreteness**2

    @property
    def lambda_j(self) -> float:
        return A / math.sqrt(self.L)

    @property
    def c(self) -> float:
        """Maximum fluxon speed, in cells per unit time."""
        return OMEGA_J * self.lambda_j

    @property
    def E0(self) -> float:
        return IC * PHI0_OVER_2PI * self.lambda_j / A

    @property
    def rest_energy(self) -> float:
        return 8.0 * self.E0

    @property
    def Z(self) -> float:
        """Characteristic impedance sqrt(L/C_J) of the data LJJ."""
        return math.sqrt(self.L / CJ)


DEFAULT_UNITS = UnitSystem()
