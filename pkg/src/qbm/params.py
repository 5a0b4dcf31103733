"""Parameter records for the bath and the Brownian particle.

Units: hbar = k_B = 1 and every frequency is measured in a reference
frequency chosen by the user (usually the bare oscillator frequency).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ConfigurationError


class Orientation(str, enum.Enum):
    STABLE = "stable"
    INVERTED = "inverted"


@dataclass(frozen=True)
class BathSpec:
    """Ohmic bath with Lorentzian cutoff at zero temperature.

    Spectral density ``I(w) = (2/pi) M gamma0 L^2 w / (w^2 + L^2)``.
    ``gamma0 = 0`` is accepted and describes an uncoupled particle.
    """

    gamma0: float
    lambda_cut: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma0) and self.gamma0 >= 0.0):
            raise ConfigurationError(f"gamma0 must be >= 0, got {self.gamma0}")
        if not (math.isfinite(self.lambda_cut) and self.lambda_cut > 0.0):
            raise ConfigurationError(f"lambda_cut must be > 0, got {self.lambda_cut}")

    def spectral_density(self, omega, mass=1.0):
        return (2.0 / math.pi) * mass * self.gamma0 * self.lambda_cut**2 * omega / (
            omega**2 + self.lambda_cut**2
        )


@dataclass(frozen=True)
class SystemSpec:
    """Brownian particle of mass ``mass`` and bare frequency ``omega``."""

    omega: float
    mass: float = 1.0
    orientation: Orientation = Orientation.STABLE

    def __post_init__(self):
        if not (math.isfinite(self.omega) and self.omega > 0.0):
            raise ConfigurationError(f"omega must be > 0, got {self.omega}")
        if not (math.isfinite(self.mass) and self.mass > 0.0):
            raise ConfigurationError(f"mass must be > 0, got {self.mass}")
        object.__setattr__(self, "orientation", Orientation(self.orientation))

    @property
    def inverted(self) -> bool:
        return self.orientation is Orientation.INVERTED

    def check_against(self, bath: BathSpec) -> None:
        """Raise if the pair is unusable (inverted needs omega < cutoff)."""
        if self.inverted and not self.omega < bath.lambda_cut:
            raise ConfigurationError(
                f"inverted oscillator needs omega < lambda_cut "
                f"({self.omega} >= {bath.lambda_cut})"
            )
