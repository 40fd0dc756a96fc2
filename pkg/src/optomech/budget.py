"""Displacement-noise budgets referred to the SQL, sub-SQL bands and detuning sweeps.

A budget combines

* quantum noise: imprecision ``x_zpf**2 / (4 Gamma_meas)`` (divided by the readout
  efficiency) and back-action ``hbar**2 Gamma_meas / x_zpf**2``;
* thermal noise from the fluctuation-dissipation force density;
* the SQL ``hbar |chi_ref|``.

The mirror responds through the optically stiffened susceptibility ``chi_eff``.
All force noises and the SQL are referred through a reference susceptibility
``chi_ref``: the bare mechanical one (``sql_mode="resonant"``) or the free mass
``1 / (m Omega**2)`` (``sql_mode="free_mass"``).  Readout imprecision sees the
actual motion, so it is rescaled by ``|chi_ref / chi_eff|**2``.  Near the spring
resonance this suppresses shot noise by the optical-spring quality factor, while
the back-action stays where it is.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .constants import CONSTANTS
from .core import (
    AntiSpringError,
    OpticalSpringState,
    free_mass_susceptibility,
    harmonic_susceptibility,
    optical_spring_constant,
    optical_spring_frequency,
    radiation_pressure_force_asd,
    susceptibility,
    thermal_force_psd,
)
from .spectrum import FrequencyGrid, NoiseSpectrum

SQL_MODES = ("auto", "free_mass", "resonant")
RATE_MODES = ("auto", "optimal")
THERMAL_CONVENTIONS = ("one_sided", "symmetrized")


class UnreachableTargetError(ValueError):
    """Requested spring frequency is outside the range the detuning can reach."""

    def __init__(self, target, lower, upper, detail=""):
        self.target = target
        self.bracket = (lower, upper)
        msg = (f"spring frequency {target / (2 * np.pi):.6g} Hz is outside the reachable "
               f"range ({lower / (2 * np.pi):.6g}, {upper / (2 * np.pi):.6g}] Hz")
        super().__init__(msg + (f"; {detail}" if detail else ""))


@dataclass(frozen=True)
class SubSQLBand:
    f_lo: float
    f_hi: float
    f_min: float
    depth_db: float

    @property
    def power_ratio(self):
        return 10 ** (-self.depth_db / 10)

    @property
    def amplitude_ratio(self):
        return 10 ** (-self.depth_db / 20)


@dataclass(frozen=True, eq=False)
class BudgetReport:
    components: dict
    ratio_to_sql: NoiseSpectrum
    band: SubSQLBand | None
    sql_mode: str
    measurement_rate: float | np.ndarray
    cavity: object = None
    oscillator: object = None
    spring: OpticalSpringState | None = None
    settings: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.ratio_to_sql.grid

    @property
    def min_ratio_db(self):
        return float(np.min(self.ratio_to_sql.values))


def _resolve_mode(sql_mode, Omega, osc):
    if sql_mode not in SQL_MODES:
        raise ValueError(f"sql_mode must be one of {SQL_MODES}, got {sql_mode!r}")
    if sql_mode != "auto":
        return sql_mode
    return "free_mass" if Omega.min() > 10 * osc.resonant_angular_frequency else "resonant"


def radiation_pressure_measurement_rate(cavity, osc):
    """Measurement rate whose back-action equals the cavity's radiation-pressure noise.

    The one-sided force density of :func:`~optomech.core.radiation_pressure_force_asd`
    is halved into the symmetrized convention and matched to
    ``hbar**2 Gamma / x_zpf**2``.  At the spring resonance the resulting back-action
    stands at ``1 / -delta`` of the free-mass SQL.
    """
    s_force = radiation_pressure_force_asd(cavity) ** 2 / 2
    return osc.zero_point_amplitude**2 * s_force / CONSTANTS.hbar**2


def build_budget(cavity, osc, measurement_rate="auto", grid=None, *, sql_mode="auto",
                 readout_efficiency=1.0, optical_damping_rate=None,
                 thermal_convention="one_sided"):
    """Assemble the quantum, thermal, total and SQL spectra on ``grid``.

    Parameters
    ----------
    cavity : CavityConfig
    osc : MechanicalOscillator
    measurement_rate : float, "auto" or "optimal"
        ``"auto"`` ties the rate to the cavity's radiation pressure
        (:func:`radiation_pressure_measurement_rate`); ``"optimal"`` uses the
        SQL-saturating rate separately in each bin.
    grid : FrequencyGrid
    sql_mode : {"auto", "free_mass", "resonant"}
        ``"auto"`` refers to the free mass when the whole grid lies above
        10 Omega_0.
    readout_efficiency : float
        Fraction in (0, 1]; imprecision is divided by it.
    optical_damping_rate : float, optional
        Gamma_OS in rad/s, added to the mechanical damping of the stiffened mode.
    thermal_convention : {"one_sided", "symmetrized"}
        ``"one_sided"`` adds the 4 k_B T force density unchanged; ``"symmetrized"``
        halves it to match the quantum-noise convention.
    """
    if grid is None:
        raise ValueError("a frequency grid is required")
    if not 0 < readout_efficiency <= 1:
        raise ValueError("readout_efficiency must lie in (0, 1]")
    if thermal_convention not in THERMAL_CONVENTIONS:
        raise ValueError(f"thermal_convention must be one of {THERMAL_CONVENTIONS}")
    Omega = grid.angular
    mode = _resolve_mode(sql_mode, Omega, osc)

    k_os = optical_spring_constant(cavity)
    gamma_eff = osc.damping_rate + (optical_damping_rate or 0.0)
    chi_eff = harmonic_susceptibility(osc.mass, osc.stiffness + k_os, gamma_eff, Omega)
    if mode == "free_mass":
        chi_ref = free_mass_susceptibility(osc.mass, Omega)
    else:
        chi_ref = np.abs(susceptibility(osc, Omega))

    x_zpf2 = osc.zero_point_amplitude**2
    if isinstance(measurement_rate, str):
        if measurement_rate == "auto":
            rate = radiation_pressure_measurement_rate(cavity, osc)
        elif measurement_rate == "optimal":
            rate = x_zpf2 / (2 * CONSTANTS.hbar * chi_ref)
        else:
            raise ValueError(f"measurement_rate must be a number or one of {RATE_MODES}")
    else:
        rate = float(measurement_rate)
        if not rate > 0:
            raise ValueError("measurement_rate must be positive")

    s_imp = x_zpf2 / (4 * rate) / readout_efficiency
    s_rpn = CONSTANTS.hbar**2 * rate / x_zpf2
    quantum = s_imp * np.abs(chi_ref / chi_eff) ** 2 + chi_ref**2 * s_rpn
    s_th_force = thermal_force_psd(osc, Omega)
    if thermal_convention == "symmetrized":
        s_th_force = s_th_force / 2
    thermal = chi_ref**2 * s_th_force
    total = quantum + thermal
    sql = CONSTANTS.hbar * chi_ref

    unit = "psd_m2_per_Hz"
    components = {
        "quantum": NoiseSpectrum(grid, quantum, unit, "quantum"),
        "thermal": NoiseSpectrum(grid, thermal, unit, "thermal"),
        "total": NoiseSpectrum(grid, total, unit, "total"),
        "sql": NoiseSpectrum(grid, sql, unit, "sql"),
    }
    ratio = NoiseSpectrum(grid, 10 * np.log10(total / sql), "db_power_ratio", "ratio_to_sql")

    try:
        spring = OpticalSpringState(k_os, optical_spring_frequency(k_os, osc),
                                    optical_damping_rate)
    except AntiSpringError:
        spring = None
    settings = {
        "readout_efficiency": readout_efficiency,
        "optical_damping_rate": optical_damping_rate,
        "thermal_convention": thermal_convention,
        "measurement_rate_mode": measurement_rate if isinstance(measurement_rate, str)
        else "fixed",
    }
    return BudgetReport(components, ratio, find_sub_sql_band(grid.values, ratio.values),
                        mode, rate, cavity, osc, spring, settings)


def _log_crossing(f_a, r_a, f_b, r_b):
    # zero of r, linear in (log f, dB)
    t = r_a / (r_a - r_b)
    return float(np.exp(np.log(f_a) + t * (np.log(f_b) - np.log(f_a))))


def find_sub_sql_band(frequencies, ratio_db, tol_db=1e-9):
    """Contiguous region with ratio < 0 dB around the global minimum, or None.

    Dips shallower than ``tol_db`` are treated as roundoff on an SQL-limited curve.
    """
    f = np.asarray(frequencies, dtype=float)
    r = np.asarray(ratio_db, dtype=float)
    i_min = int(np.argmin(r))
    if not r[i_min] < -tol_db:
        return None
    lo = i_min
    while lo > 0 and r[lo - 1] < 0:
        lo -= 1
    hi = i_min
    while hi < r.size - 1 and r[hi + 1] < 0:
        hi += 1
    f_lo = f[0] if lo == 0 else _log_crossing(f[lo - 1], r[lo - 1], f[lo], r[lo])
    f_hi = f[-1] if hi == r.size - 1 else _log_crossing(f[hi], r[hi], f[hi + 1], r[hi + 1])
    return SubSQLBand(float(f_lo), float(f_hi), float(f[i_min]), float(-r[i_min]))


def sub_sql_band(report):
    """Sub-SQL band of a :class:`BudgetReport` or of a dB-ratio :class:`NoiseSpectrum`."""
    spectrum = report.ratio_to_sql if isinstance(report, BudgetReport) else report
    if spectrum.unit != "db_power_ratio":
        spectrum = spectrum.as_db()
    return find_sub_sql_band(spectrum.frequencies, spectrum.values)


def _peak_detuning(hold):
    # |delta| maximising K_OS: delta/(1+delta^2) at fixed P_C, delta/(1+delta^2)^2 at fixed P_in
    return 1.0 if hold == "circulating_power" else 1 / np.sqrt(3)


def detuning_for_os_frequency(target, cavity, osc, *, hold="circulating_power",
                              branch="far", rtol=1e-9):
    """Negative detuning at which the spring resonance sits at ``target`` rad/s.

    ``cavity`` is a template: its detuning is replaced while holding either the
    circulating or the input power fixed.  ``K_OS(delta)`` peaks at
    ``|delta| = 1`` (fixed circulating power) or ``1/sqrt(3)`` (fixed input power).
    ``branch="far"`` searches beyond the peak, where back-action beats the SQL;
    ``branch="near"`` searches between the peak and resonance.
    """
    if branch not in ("far", "near"):
        raise ValueError("branch must be 'far' or 'near'")
    peak = _peak_detuning(hold)
    w0 = osc.resonant_angular_frequency

    def w_os(log_abs_delta):
        c = cavity.with_detuning(-np.exp(log_abs_delta), hold)
        return optical_spring_frequency(optical_spring_constant(c), osc)

    u_peak = np.log(peak)
    w_max = w_os(u_peak)
    if not w0 < target <= w_max * (1 + 1e-12):
        raise UnreachableTargetError(target, w0, w_max)
    if target >= w_max * (1 - 1e-12):
        return -peak

    step = 1.0 if branch == "far" else -1.0
    u_far = u_peak
    for _ in range(80):
        u_far += step
        if w_os(u_far) < target:
            break
    else:
        raise UnreachableTargetError(target, w0, w_max, "root could not be bracketed")

    lo, hi = sorted((u_peak, u_far))
    u = brentq(lambda v: w_os(v) - target, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
               maxiter=500)
    if abs(w_os(u) - target) > rtol * target:
        raise UnreachableTargetError(target, w0, w_max, "root finder did not converge")
    return -float(np.exp(u))


def sweep_detunings(targets, cavity, osc, grid, *, hold="circulating_power", branch="far",
                    **budget_options):
    """Budgets at each target spring frequency (rad/s), in input order."""
    reports = []
    for target in targets:
        delta = detuning_for_os_frequency(target, cavity, osc, hold=hold, branch=branch)
        reports.append(build_budget(cavity.with_detuning(delta, hold), osc,
                                    grid=grid, **budget_options))
    return reports


__all__ = [
    "BudgetReport", "SubSQLBand", "UnreachableTargetError", "build_budget",
    "detuning_for_os_frequency", "find_sub_sql_band", "radiation_pressure_measurement_rate",
    "sub_sql_band", "sweep_detunings", "FrequencyGrid",
]
