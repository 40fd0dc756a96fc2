"""Closed-form physics of the movable mirror, the detuned cavity and the optical spring.

Quantum-noise densities here use the symmetrized convention in which the
imprecision/back-action product saturates at ``hbar**2 / 4`` and the SQL is
``hbar * |chi|``.  :func:`thermal_noise_psd` is the usual fluctuation-dissipation
density built on ``4 k_B T``.  :func:`free_mass_sql_asd` is the one-sided free-mass
amplitude ``sqrt(2 hbar / (m Omega**2))`` used when comparing the radiation
pressure displacement against the SQL.

Angular frequencies (rad/s) are used throughout; the ``*_hz`` helpers are the only
places that accept ordinary frequencies.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .constants import CONSTANTS

DampingModel = Literal["viscous", "structural"]


class AntiSpringError(ValueError):
    """Total stiffness is not positive, so there is no real spring resonance."""


class NotAmplifiedError(ValueError):
    """Detuning does not produce a restoring optical spring."""


@dataclass(frozen=True)
class MechanicalOscillator:
    """Movable mirror modelled as a damped harmonic oscillator.

    Parameters
    ----------
    mass : float
        Mirror mass in kg.
    resonant_angular_frequency : float
        Bare mechanical resonance Omega_0 in rad/s.
    quality_factor : float
        Mechanical Q.
    temperature : float
        Bath temperature in K.
    damping_model : {"structural", "viscous"}
        Loss model used for thermal noise.
    """

    mass: float
    resonant_angular_frequency: float
    quality_factor: float
    temperature: float = 0.0
    damping_model: DampingModel = "structural"

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if not self.resonant_angular_frequency > 0:
            raise ValueError("resonant_angular_frequency must be positive")
        if not self.quality_factor > 0:
            raise ValueError("quality_factor must be positive")
        if not self.temperature >= 0:
            raise ValueError("temperature must be non-negative")
        if self.damping_model not in ("viscous", "structural"):
            raise ValueError(f"unknown damping_model {self.damping_model!r}")

    @classmethod
    def from_hz(cls, mass, resonance_hz, quality_factor, temperature=0.0,
                damping_model="structural"):
        return cls(mass, 2 * np.pi * resonance_hz, quality_factor, temperature,
                   damping_model)

    @property
    def damping_rate(self):
        """Gamma_m = Omega_0 / Q in rad/s."""
        return self.resonant_angular_frequency / self.quality_factor

    @property
    def stiffness(self):
        """Mechanical spring constant K_m = m Omega_0**2 in N/m."""
        return self.mass * self.resonant_angular_frequency**2

    @property
    def zero_point_amplitude(self):
        """RMS zero-point motion sqrt(hbar / (2 m Omega_0)) in m."""
        return np.sqrt(CONSTANTS.hbar / (2 * self.mass * self.resonant_angular_frequency))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class CavityConfig:
    """Single-port Fabry-Perot cavity with a movable end mirror.

    ``detuning`` is the signed offset from resonance in units of the HWHM
    linewidth; negative values give a restoring optical spring.  When
    ``linewidth_hwhm`` is omitted it is taken from the single-port relation
    ``c T / (8 pi L)``.
    """

    length: float
    wavelength: float
    input_transmission: float
    input_power: float
    detuning: float = 0.0
    linewidth_hwhm: float | None = None

    def __post_init__(self):
        if not 0 < self.input_transmission < 1:
            raise ValueError("input_transmission must lie in (0, 1)")
        for name in ("length", "wavelength", "input_power"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not np.isfinite(self.detuning):
            raise ValueError("detuning must be finite")
        if self.linewidth_hwhm is None:
            object.__setattr__(self, "linewidth_hwhm", self.single_port_linewidth)
        elif not self.linewidth_hwhm > 0:
            raise ValueError("linewidth_hwhm must be positive")

    @classmethod
    def with_circulating_power(cls, circulating_power, *, length, wavelength,
                               input_transmission, detuning, linewidth_hwhm=None):
        """Build a cavity whose circulating power at ``detuning`` is given."""
        input_power = circulating_power * input_transmission * (1 + detuning**2) / 4
        return cls(length, wavelength, input_transmission, input_power, detuning,
                   linewidth_hwhm)

    @property
    def max_circulating_power(self):
        """On-resonance circulating power P_0 = 4 P_in / T."""
        return 4 * self.input_power / self.input_transmission

    @property
    def circulating_power(self):
        return circulating_power(self)

    @property
    def optical_frequency(self):
        return CONSTANTS.c / self.wavelength

    @property
    def photon_energy(self):
        return CONSTANTS.h * self.optical_frequency

    @property
    def free_spectral_range(self):
        return CONSTANTS.c / (2 * self.length)

    @property
    def single_port_linewidth(self):
        """HWHM linewidth in Hz implied by the input transmission alone."""
        return CONSTANTS.c * self.input_transmission / (8 * np.pi * self.length)

    def with_detuning(self, detuning, hold="circulating_power"):
        """Copy at a new detuning, holding either circulating or input power fixed."""
        if hold == "input_power":
            return dataclasses.replace(self, detuning=detuning)
        if hold != "circulating_power":
            raise ValueError(f"hold must be 'circulating_power' or 'input_power', got {hold!r}")
        return CavityConfig.with_circulating_power(
            self.circulating_power, length=self.length, wavelength=self.wavelength,
            input_transmission=self.input_transmission, detuning=detuning,
            linewidth_hwhm=self.linewidth_hwhm)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class OpticalSpringState:
    stiffness: float
    angular_frequency: float
    damping_rate: float | None = None

    @property
    def quality_factor(self):
        if self.damping_rate is None:
            return None
        return self.angular_frequency / self.damping_rate


@dataclass(frozen=True, eq=False)
class MeasurementModel:
    """Measurement rate Gamma_meas (rad/s; scalar or array) applied to ``oscillator``."""

    measurement_rate: float | np.ndarray
    oscillator: MechanicalOscillator

    def __post_init__(self):
        if not np.all(np.asarray(self.measurement_rate) > 0):
            raise ValueError("measurement_rate must be positive")


# --- cavity ----------------------------------------------------------------

def transmission_from_linewidth(length, linewidth_hwhm):
    """Input transmission T = 2 pi / F for a cavity whose only loss is one mirror.

    Finesse is F = FSR / FWHM with FSR = c / 2L.
    """
    fsr = CONSTANTS.c / (2 * length)
    finesse = fsr / (2 * linewidth_hwhm)
    return 2 * np.pi / finesse


def transmission_for_spring_frequency(spring_angular_frequency, osc, *,
                                      circulating_power, detuning, wavelength):
    """Input transmission that puts the optical spring resonance at a target.

    Inverts :func:`optical_spring_constant` at fixed circulating power using the
    exact resonance ``sqrt((K_OS + K_m) / m)``.
    """
    if detuning >= 0:
        raise NotAmplifiedError("a restoring spring needs negative detuning")
    k_os = osc.mass * spring_angular_frequency**2 - osc.stiffness
    if k_os <= 0:
        raise ValueError("target lies below the mechanical resonance")
    return (-32 * np.pi * detuning * circulating_power
            / (wavelength * CONSTANTS.c * k_os * (1 + detuning**2)))


def circulating_power(cavity):
    """P_C = P_0 / (1 + delta**2) with P_0 = 4 P_in / T."""
    return cavity.max_circulating_power / (1 + cavity.detuning**2)


def optical_spring_constant(cavity):
    """Optical spring K_OS = -32 pi delta P_C / (lambda c T (1 + delta**2)) in N/m."""
    d = cavity.detuning
    return (-32 * np.pi * d * circulating_power(cavity)
            / (cavity.wavelength * CONSTANTS.c * cavity.input_transmission * (1 + d**2)))


def optical_spring_frequency(spring_constant, osc, approximate=False):
    """Angular frequency of the optically stiffened resonance.

    The exact form is ``sqrt((K_OS + K_m) / m)``; with ``approximate=True`` the
    mechanical stiffness is dropped, which is valid for K_OS >> K_m.
    """
    total = spring_constant if approximate else spring_constant + osc.stiffness
    if total <= 0:
        raise AntiSpringError(
            f"total stiffness {total:.3g} N/m is not positive; no spring resonance")
    return np.sqrt(total / osc.mass)


def optical_spring(cavity, osc, damping_rate=None):
    k = optical_spring_constant(cavity)
    return OpticalSpringState(k, optical_spring_frequency(k, osc), damping_rate)


# --- mechanics -------------------------------------------------------------

def harmonic_susceptibility(mass, stiffness, damping_rate, Omega):
    """Displacement response 1 / (K - m Omega**2 - i m Gamma Omega) in m/N."""
    Omega = np.asarray(Omega, dtype=float)
    return 1.0 / (stiffness - mass * Omega**2 - 1j * mass * damping_rate * Omega)


def susceptibility(osc, Omega):
    """Mechanical susceptibility 1 / (m (Omega_0**2 - Omega**2 - i Gamma_m Omega))."""
    return harmonic_susceptibility(osc.mass, osc.stiffness, osc.damping_rate, Omega)


def free_mass_susceptibility(mass, Omega):
    """Magnitude of the free-mass response, 1 / (m Omega**2)."""
    return 1.0 / (mass * np.asarray(Omega, dtype=float) ** 2)


# --- quantum noise ---------------------------------------------------------

def imprecision_psd(model):
    """Imprecision noise x_zpf**2 / (4 Gamma_meas) in m^2/Hz."""
    x_zpf = model.oscillator.zero_point_amplitude
    return x_zpf**2 / (4 * model.measurement_rate)


def backaction_psd(model):
    """Back-action force noise hbar**2 Gamma_meas / x_zpf**2 in N^2/Hz."""
    x_zpf = model.oscillator.zero_point_amplitude
    return CONSTANTS.hbar**2 * model.measurement_rate / x_zpf**2


def quantum_noise_psd(model, Omega):
    chi = susceptibility(model.oscillator, Omega)
    return imprecision_psd(model) + np.abs(chi) ** 2 * backaction_psd(model)


def optimal_measurement_rate(osc, Omega):
    """Measurement rate minimizing the total quantum noise at Omega."""
    chi = np.abs(susceptibility(osc, Omega))
    return osc.zero_point_amplitude**2 / (2 * CONSTANTS.hbar * chi)


def sql_psd(osc, Omega):
    """Standard quantum limit hbar |chi(Omega)| in m^2/Hz."""
    return CONSTANTS.hbar * np.abs(susceptibility(osc, Omega))


def free_mass_sql_asd(mass, Omega):
    """One-sided free-mass SQL amplitude sqrt(2 hbar / (m Omega**2)) in m/rtHz."""
    if not mass > 0:
        raise ValueError("mass must be positive")
    Omega = np.asarray(Omega, dtype=float)
    if np.any(Omega <= 0):
        raise ValueError("Omega must be positive")
    return np.sqrt(2 * CONSTANTS.hbar) / (np.sqrt(mass) * Omega)


def radiation_pressure_force_asd(cavity):
    """One-sided force noise from shot noise on the input light, in N/rtHz.

    The relative intensity noise sqrt(2 h f / P_in) of the input is carried by
    the circulating power and acts through F = 2 P_C / c.
    """
    p_c = circulating_power(cavity)
    return 2 * p_c / CONSTANTS.c * np.sqrt(2 * cavity.photon_energy / cavity.input_power)


def backaction_to_sql_ratio(cavity, osc, Omega):
    """Amplitude ratio of free-mass radiation-pressure motion to the free-mass SQL."""
    Omega = np.asarray(Omega, dtype=float)
    if np.any(Omega <= 0):
        raise ValueError("Omega must be positive")
    x_rp = radiation_pressure_force_asd(cavity) / (osc.mass * Omega**2)
    return x_rp / free_mass_sql_asd(osc.mass, Omega)


def backaction_to_sql_ratio_at_spring(cavity, osc, approximate=True):
    """Back-action/SQL amplitude ratio evaluated at the optical spring resonance.

    With ``approximate=True`` the resonance is taken as sqrt(K_OS / m), for which
    the ratio is exactly sqrt(1 / -delta).
    """
    if cavity.detuning >= 0:
        raise NotAmplifiedError(
            "non-negative detuning gives no restoring spring; motion is not amplified")
    k_os = optical_spring_constant(cavity)
    w_os = optical_spring_frequency(k_os, osc, approximate=approximate)
    return float(backaction_to_sql_ratio(cavity, osc, w_os))


def sql_beating_factor(detuning):
    """Closed-form amplitude ratio sqrt(1 / -delta) at the spring resonance."""
    if detuning >= 0:
        raise NotAmplifiedError("closed form applies only to negative detuning")
    return np.sqrt(-1.0 / detuning)


# --- thermal noise ---------------------------------------------------------

def thermal_force_psd(osc, Omega):
    """One-sided thermal force noise 4 k_B T m Gamma(Omega) in N^2/Hz.

    Viscous damping has Gamma = Omega_0 / Q; structural damping has
    Gamma = Omega_0**2 / (Q Omega), which diverges at DC.
    """
    Omega = np.asarray(Omega, dtype=float)
    scale = 4 * CONSTANTS.k_B * osc.temperature * osc.mass
    if osc.damping_model == "viscous":
        return np.broadcast_to(scale * osc.damping_rate, Omega.shape).copy()
    if np.any(Omega <= 0):
        raise ValueError("structural damping thermal noise diverges at zero frequency")
    w0 = osc.resonant_angular_frequency
    return scale * w0**2 / (osc.quality_factor * Omega)


def thermal_noise_psd(osc, Omega):
    """Thermal displacement noise |chi|**2 times :func:`thermal_force_psd`, in m^2/Hz."""
    return thermal_force_psd(osc, Omega) * np.abs(susceptibility(osc, Omega)) ** 2
