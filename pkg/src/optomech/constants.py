"""Physical constants (CODATA 2018, via scipy.constants)."""

from dataclasses import dataclass

from scipy import constants as _sc


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = _sc.hbar  # J s
    h: float = _sc.h  # J s
    c: float = _sc.c  # m / s
    k_B: float = _sc.k  # J / K

    def __post_init__(self):
        for name in ("hbar", "h", "c", "k_B"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if abs(self.h - 2 * _sc.pi * self.hbar) > 1e-12 * self.h:
            raise ValueError("h and hbar are inconsistent")


CONSTANTS = PhysicalConstants()
