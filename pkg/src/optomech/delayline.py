"""Delay-line Mach-Zehnder fringe model and the volts-per-hertz calibration.

The detector behind the delay line sees ``V = A + B cos(omega tau)``.  Holding
the interferometer at an offset ``V_L`` fixes the operating phase, and the slope
``dV/domega = -B tau sin(omega tau)`` converts detector volts to laser frequency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .constants import CONSTANTS

FIBER_INDEX = 1.468
TURNING_POINT_MIN_SIN = 0.1
# V_L computed as A +/- B can land an ulp outside the fringe
_EDGE_ROUNDOFF = 1e-12


class TurningPointError(ValueError):
    """Operating point is at (or too close to) a fringe extremum."""


class FringeFitError(ValueError):
    pass


@dataclass(frozen=True)
class FringeCalibration:
    A: float
    B: float
    tau: float
    V_L: float

    def __post_init__(self):
        if not self.B > 0:
            raise ValueError("fringe amplitude B must be positive")
        if not self.tau > 0:
            raise ValueError("delay tau must be positive")
        if abs(self.V_L - self.A) > self.B * (1 + _EDGE_ROUNDOFF):
            raise ValueError(f"|V_L - A| = {abs(self.V_L - self.A):.6g} exceeds B = {self.B:.6g}")

    def is_turning_point(self, min_sin=TURNING_POINT_MIN_SIN):
        return abs(np.sin(operating_phase(self))) < min_sin

    def to_dict(self):
        return {"A": self.A, "B": self.B, "tau_s": self.tau, "V_L": self.V_L}


@dataclass(frozen=True, eq=False)
class FringeSweep:
    """Detector volts recorded while the laser frequency is swept.

    ``drive`` is any proxy (crystal temperature, time) that is linear in optical
    frequency over the sweep.
    """

    drive: np.ndarray
    volts: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.drive, dtype=float)
        v = np.asarray(self.volts, dtype=float)
        if d.shape != v.shape or d.ndim != 1:
            raise ValueError("drive and volts must be 1-D arrays of equal length")
        if d.size < 8:
            raise ValueError("a fringe sweep needs at least 8 samples")
        object.__setattr__(self, "drive", d)
        object.__setattr__(self, "volts", v)


@dataclass(frozen=True)
class FringeFit:
    A: float
    B: float
    wavenumber: float  # fringe phase per unit drive
    phase0: float
    residual_rms: float
    fringes_covered: float


def fringe_model(A, B, phase):
    return A + B * np.cos(phase)


def tau_from_null(f_null):
    """Delay from the second-harmonic null of the phase-modulation response, 2 / f."""
    if not f_null > 0:
        raise ValueError("null frequency must be positive")
    return 2.0 / f_null


def fiber_delay(length, index=FIBER_INDEX):
    """Propagation delay n L / c of a fiber of the given length."""
    return index * length / CONSTANTS.c


def operating_phase(cal):
    """Principal-branch omega tau = arccos((V_L - A) / B), in [0, pi]."""
    x = (cal.V_L - cal.A) / cal.B
    if abs(x) > 1 + _EDGE_ROUNDOFF:
        raise ValueError(f"(V_L - A)/B = {x:.6g} is outside [-1, 1]")
    return float(np.arccos(np.clip(x, -1.0, 1.0)))


def fringe_slope(cal):
    """dV/domega = -B tau sin(arccos((V_L - A) / B)) in V s / rad."""
    return -cal.B * cal.tau * np.sin(operating_phase(cal))


def require_operating_point(cal, min_sin=TURNING_POINT_MIN_SIN):
    s = abs(np.sin(operating_phase(cal)))
    if s < min_sin:
        raise TurningPointError(
            f"|sin(omega tau)| = {s:.3g} < {min_sin}: V_L = {cal.V_L:.6g} V sits at a fringe "
            "turning point and the calibration slope is unreliable")


def _best_wavenumber(d, v, k_grid, chunk=256):
    best_k, best_res = None, np.inf
    ones = np.ones_like(d)
    for start in range(0, k_grid.size, chunk):
        ks = k_grid[start:start + chunk]
        ph = np.outer(ks, d)
        c, s = np.cos(ph), np.sin(ph)
        for i, k in enumerate(ks):
            X = np.column_stack([ones, c[i], s[i]])
            coef, *_ = np.linalg.lstsq(X, v, rcond=None)
            res = np.sum((X @ coef - v) ** 2)
            if res < best_res:
                best_k, best_res = k, res
    return best_k


def fit_fringe(sweep, trim_percent=0.5, n_wavenumbers=2000):
    """Estimate fringe offset A and amplitude B from a frequency sweep.

    A and B are seeded from percentile-trimmed extrema.  They are then refined
    by least squares against ``A + B cos(k d + phi)``, with k found by scanning
    and refined jointly.  B is unconstrained relative to A, so imperfect
    visibility is allowed.
    """
    d, v = sweep.drive, sweep.volts
    span_v = np.ptp(v)
    if not span_v > 0:
        raise FringeFitError("sweep is constant; no fringe to fit")
    span_d = np.ptp(d)
    if not span_d > 0:
        raise FringeFitError("drive does not vary")

    lo, hi = np.percentile(v, [trim_percent, 100 - trim_percent])
    a_seed, b_seed = (hi + lo) / 2, (hi - lo) / 2

    k_min = 2 * np.pi * 0.25 / span_d
    k_max = 2 * np.pi * max(d.size / 8, 2) / span_d
    k_seed = _best_wavenumber(d, v, np.geomspace(k_min, k_max, n_wavenumbers))

    X = np.column_stack([np.ones_like(d), np.cos(k_seed * d), np.sin(k_seed * d)])
    (a0, ca, sa), *_ = np.linalg.lstsq(X, v, rcond=None)
    if not np.isfinite(a0):
        a0, ca, sa = a_seed, b_seed, 0.0
    d0 = d.mean()

    def residual(p):
        A, ca, sa, k = p
        ph = k * (d - d0)
        return A + ca * np.cos(ph) + sa * np.sin(ph) - v

    # re-centre the phase reference on the mean drive for conditioning
    ph0 = k_seed * d0
    ca0 = ca * np.cos(ph0) + sa * np.sin(ph0)
    sa0 = -ca * np.sin(ph0) + sa * np.cos(ph0)
    sol = least_squares(residual, [a0, ca0, sa0, k_seed], method="lm",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
    A, ca, sa, k = sol.x
    B = float(np.hypot(ca, sa))
    k = abs(k)
    fringes = k * span_d / (2 * np.pi)
    rms = float(np.sqrt(np.mean(sol.fun**2)))
    if fringes < 1:
        raise FringeFitError(
            f"sweep spans only {fringes:.3g} fringe periods (drive span {span_d:.6g}); "
            "at least one full fringe is required")
    if span_v < 0.95 * 2 * B:
        raise FringeFitError(
            f"detector swing {span_v:.6g} V covers less than 95% of the fitted peak-to-peak "
            f"{2 * B:.6g} V")
    phase0 = float(np.angle(np.exp(1j * (np.arctan2(-sa, ca) - k * d0))))
    return FringeFit(float(A), B, float(k), phase0, rms, float(fringes))


def calibrate(sweep, f_null, locked_voltage, min_sin=TURNING_POINT_MIN_SIN):
    """Fit the sweep and build a calibration, refusing turning-point operation."""
    fit = fit_fringe(sweep)
    cal = FringeCalibration(fit.A, fit.B, tau_from_null(f_null), locked_voltage)
    require_operating_point(cal, min_sin)
    return cal, fit


def synthetic_sweep(A, B, n_samples=1000, fringes=3.0, noise=0.0, phase0=0.3, seed=0):
    """Noisy linear-in-frequency fringe sweep for testing and demos."""
    drive = np.linspace(0.0, 1.0, n_samples)
    phase = 2 * np.pi * fringes * drive + phase0
    volts = fringe_model(A, B, phase)
    if noise:
        volts = volts + np.random.default_rng(seed).normal(0.0, noise, n_samples)
    return FringeSweep(drive, volts)
