"""Parameter set of the cryogenic 1 cm cavity with a 50 ng cantilever mirror.

The input transmission is not quoted with the rest of the parameters, so it has
to be inferred.  Three anchors are available:

``"tuning_ceiling"`` (default)
    At fixed circulating power the spring is stiffest at ``delta = -1``, which is
    also where back-action equals the SQL.  T is chosen so that this ceiling
    falls at the quoted 91.4 kHz upper tuning limit.  The spring at
    ``delta = -3.1`` then lands at 69.9 kHz, 4 % above the quoted 67 kHz.
``"spring_frequency"``
    T chosen so the spring at ``delta = -3.1`` is exactly 67 kHz.  The tuning
    ceiling then drops to 87.6 kHz.
``"linewidth"``
    T = 2 pi / F from the 520 kHz HWHM linewidth, treating the input mirror as
    the only loss.  The spring then comes out at 87 kHz.

:func:`consistency_report` tabulates all three.
"""

from __future__ import annotations

import numpy as np

from .core import (
    CavityConfig,
    MechanicalOscillator,
    optical_spring_constant,
    optical_spring_frequency,
    transmission_for_spring_frequency,
    transmission_from_linewidth,
)
from .spectrum import FrequencyGrid

DETUNING = -3.1
LINEWIDTH_HWHM = 520e3  # Hz
CIRCULATING_POWER = 71e-3  # W
SPRING_FREQUENCY = 67e3  # Hz, quoted at delta = -3.1
BEST_SPRING_FREQUENCY = 67.8e3  # Hz, best sub-SQL measurement
TUNING_LIMITS = (41.3e3, 91.4e3)  # Hz
MASS = 50e-12  # kg (50 ng)
RESONANCE = 876.0  # Hz
QUALITY_FACTOR = 25000.0
TEMPERATURE = 29.0  # K
LENGTH = 0.01  # m
WAVELENGTH = 1064e-9  # m
DELAY_FIBER_LENGTH = 100.0  # m
# Transmission-port readout is far from quantum limited; the value is not quoted
# and is chosen so the sub-SQL band at delta = -3.1 stays inside the measured one.
READOUT_EFFICIENCY = 0.018

ANCHORS = ("tuning_ceiling", "spring_frequency", "linewidth")


def oscillator(temperature=TEMPERATURE, damping_model="structural"):
    return MechanicalOscillator.from_hz(MASS, RESONANCE, QUALITY_FACTOR, temperature,
                                        damping_model)


def input_transmission(anchor="tuning_ceiling", osc=None):
    osc = osc or oscillator()
    if anchor == "linewidth":
        return transmission_from_linewidth(LENGTH, LINEWIDTH_HWHM)
    if anchor == "spring_frequency":
        target, delta = SPRING_FREQUENCY, DETUNING
    elif anchor == "tuning_ceiling":
        target, delta = TUNING_LIMITS[1], -1.0
    else:
        raise ValueError(f"anchor must be one of {ANCHORS}")
    return transmission_for_spring_frequency(
        2 * np.pi * target, osc, circulating_power=CIRCULATING_POWER, detuning=delta,
        wavelength=WAVELENGTH)


def cavity(anchor="tuning_ceiling", detuning=DETUNING):
    """Cavity at ``detuning`` with the quoted 71 mW circulating power."""
    return CavityConfig.with_circulating_power(
        CIRCULATING_POWER, length=LENGTH, wavelength=WAVELENGTH,
        input_transmission=input_transmission(anchor), detuning=detuning,
        linewidth_hwhm=LINEWIDTH_HWHM)


def grid(points=4000):
    return FrequencyGrid.log(10e3, 200e3, points)


def budget_options():
    return {"measurement_rate": "auto", "sql_mode": "free_mass",
            "readout_efficiency": READOUT_EFFICIENCY, "thermal_convention": "one_sided"}


def consistency_report():
    """Spring frequency at delta = -3.1 and tuning ceiling for each anchor, in Hz."""
    osc = oscillator()
    rows = {}
    for anchor in ANCHORS:
        cav = cavity(anchor)
        ceiling = cav.with_detuning(-1.0)
        rows[anchor] = {
            "input_transmission": cav.input_transmission,
            "single_port_linewidth_hz": cav.single_port_linewidth,
            "spring_frequency_hz": optical_spring_frequency(
                optical_spring_constant(cav), osc) / (2 * np.pi),
            "tuning_ceiling_hz": optical_spring_frequency(
                optical_spring_constant(ceiling), osc) / (2 * np.pi),
        }
    return rows
