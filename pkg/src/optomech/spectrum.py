"""Frequency grids and unit-tagged spectral densities."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# unit name -> (physical quantity, representation)
UNITS = {
    "asd_m_per_rtHz": ("m", "asd"),
    "psd_m2_per_Hz": ("m", "psd"),
    "asd_V_per_rtHz": ("V", "asd"),
    "psd_V2_per_Hz": ("V", "psd"),
    "asd_Hz_per_rtHz": ("Hz", "asd"),
    "psd_Hz2_per_Hz": ("Hz", "psd"),
    "dimensionless_ratio": (None, "ratio"),
    "db_power_ratio": (None, "db"),
}


def _unit_name(quantity, kind):
    for name, spec in UNITS.items():
        if spec == (quantity, kind):
            return name
    raise ValueError(f"no unit for {quantity!r} {kind}")


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Strictly increasing, positive, finite frequencies in Hz."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("a frequency grid needs at least two points")
        if not np.all(np.isfinite(v)):
            raise ValueError("frequency grid must be finite")
        if np.any(v <= 0):
            raise ValueError("frequency grid must be strictly positive")
        if np.any(np.diff(v) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def log(cls, f_min, f_max, points):
        return cls(np.geomspace(f_min, f_max, int(points)))

    @classmethod
    def linear(cls, f_min, f_max, points):
        return cls(np.linspace(f_min, f_max, int(points)))

    @property
    def angular(self):
        return 2 * np.pi * self.values

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        return isinstance(other, FrequencyGrid) and np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class NoiseSpectrum:
    """Spectral values on a grid with an explicit unit.

    ``unit`` is one of :data:`UNITS`.  ASD and PSD values must be non-negative.
    """

    grid: FrequencyGrid
    values: np.ndarray
    unit: str
    label: str = field(default="")

    def __post_init__(self):
        if self.unit not in UNITS:
            raise ValueError(f"unknown unit {self.unit!r}")
        v = np.array(self.values, dtype=float)
        if v.shape != (len(self.grid),):
            raise ValueError(f"expected {len(self.grid)} values, got shape {v.shape}")
        if self.kind in ("asd", "psd", "ratio") and np.any(v < 0):
            raise ValueError(f"{self.unit} values must be non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def quantity(self):
        return UNITS[self.unit][0]

    @property
    def kind(self):
        return UNITS[self.unit][1]

    @property
    def frequencies(self):
        return self.grid.values

    def _with(self, values, unit):
        return NoiseSpectrum(self.grid, values, unit, self.label)

    def as_psd(self):
        if self.kind == "psd":
            return self
        if self.kind != "asd":
            raise ValueError(f"cannot express {self.unit} as a PSD")
        return self._with(self.values**2, _unit_name(self.quantity, "psd"))

    def as_asd(self):
        if self.kind == "asd":
            return self
        if self.kind != "psd":
            raise ValueError(f"cannot express {self.unit} as an ASD")
        return self._with(np.sqrt(self.values), _unit_name(self.quantity, "asd"))

    def as_db(self):
        if self.kind == "db":
            return self
        if self.kind != "ratio":
            raise ValueError(f"cannot express {self.unit} in dB")
        with np.errstate(divide="ignore"):
            return self._with(10 * np.log10(self.values), "db_power_ratio")

    def as_ratio(self):
        if self.kind == "ratio":
            return self
        if self.kind != "db":
            raise ValueError(f"cannot express {self.unit} as a ratio")
        return self._with(10 ** (self.values / 10), "dimensionless_ratio")

    def scaled(self, factor, unit=None, label=None):
        """Multiply values by ``factor`` (scalar or per-bin), optionally relabelling."""
        return NoiseSpectrum(self.grid, self.values * factor, unit or self.unit,
                             self.label if label is None else label)
