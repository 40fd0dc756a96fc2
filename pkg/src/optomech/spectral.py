"""Welch spectra, two-channel coherence and coherent laser-frequency-noise subtraction.

Two detectors see the laser frequency noise ``F``: the cavity transmission
detector (channel 1), which also carries the cavity signal ``C1``, and the
delay-line detector (channel 2), which also carries its own shot noise ``S_n``::

    S11 = (F**2 + C1**2) * lambda1**2
    S22 = F**2 + S_n**2
    S12 = lambda1 * F**2

Coherence ``C = |S12|**2 / (S11 S22)`` does not depend on the gain ratio lambda1.
The cavity signal therefore comes back referred to channel-2 volts::

    C1 = F * sqrt(F**2 / (C * S22) - 1),   F**2 = S22 - S_n**2

This is the scale on which the delay-line fringe slope converts volts to Hz.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .constants import CONSTANTS
from .spectrum import FrequencyGrid, NoiseSpectrum

FLAG_OK = "ok"
FLAG_FLOOR = "coherence_floor"
FLAG_NEGATIVE = "nonphysical_negative"
# tolerance on the radicand so exact closed-form inputs survive roundoff
_RADICAND_ROUNDOFF = 1e-12


@dataclass(frozen=True, eq=False)
class TimeSeries:
    samples: np.ndarray
    sample_rate: float
    label: str = ""

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", x)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self):
        return self.samples.size / self.sample_rate


@dataclass(frozen=True, eq=False)
class TwoChannelSpectra:
    """Auto and cross spectra of the locking (1) and delay-line (2) detectors.

    ``n_averages`` is the number of Welch segments, or None for exact
    closed-form spectra.
    """

    grid: FrequencyGrid
    S11: np.ndarray
    S22: np.ndarray
    S12: np.ndarray
    coherence: np.ndarray
    n_averages: int | None = None
    equivalent_averages: float | None = None

    def __post_init__(self):
        n = len(self.grid)
        for name in ("S11", "S22", "S12", "coherence"):
            if np.shape(getattr(self, name)) != (n,):
                raise ValueError(f"{name} must have one value per grid bin")
        if np.any(self.S11 < 0) or np.any(self.S22 < 0):
            raise ValueError("auto spectra must be non-negative")
        if np.any((self.coherence < 0) | (self.coherence > 1)):
            raise ValueError("coherence must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class SubtractionResult:
    C1: NoiseSpectrum
    F: NoiseSpectrum
    flags: np.ndarray

    @property
    def ok(self):
        return self.flags == FLAG_OK

    def flag_counts(self):
        names, counts = np.unique(self.flags, return_counts=True)
        out = {FLAG_OK: 0, FLAG_FLOOR: 0, FLAG_NEGATIVE: 0}
        out.update({str(k): int(v) for k, v in zip(names, counts)})
        return out


def _segments(n_samples, segment_len, overlap):
    if overlap is None:
        overlap = segment_len // 2
    segment_len = int(segment_len)
    overlap = int(overlap)
    if segment_len < 2:
        raise ValueError("segment_len must be at least 2")
    if not 0 <= overlap < segment_len:
        raise ValueError("overlap must satisfy 0 <= overlap < segment_len")
    if segment_len > n_samples:
        raise ValueError(f"series of {n_samples} samples is shorter than one "
                         f"{segment_len}-sample segment")
    n_seg = (n_samples - overlap) // (segment_len - overlap)
    return segment_len, overlap, n_seg


def segment_length_for_averages(n_samples, averages, overlap_fraction=0.5):
    """Longest even segment length giving at least ``averages`` Welch segments."""
    step_fraction = 1 - overlap_fraction
    seg = int(n_samples / (1 + step_fraction * (averages - 1)))
    seg -= seg % 2
    while seg > 2:
        ov = int(round(seg * overlap_fraction))
        if (n_samples - ov) // (seg - ov) >= averages:
            return seg
        seg -= 2
    raise ValueError(f"{n_samples} samples cannot provide {averages} segments")


def welch_equivalent_averages(window, segment_len, overlap, n_segments):
    """Equivalent number of independent averages for overlapped Welch segments.

    Uses the standard variance formula for overlapping windowed segments:
    ``K / (1 + 2 sum_j (1 - j/K) rho_j**2)`` with rho_j the normalized window
    overlap correlation at a shift of j steps.
    """
    w = signal.get_window(window, segment_len)
    step = segment_len - overlap
    norm = np.sum(w**2)
    total = 0.0
    for j in range(1, n_segments):
        shift = j * step
        if shift >= segment_len:
            break
        rho = np.sum(w[:segment_len - shift] * w[shift:]) / norm
        total += (1 - j / n_segments) * rho**2
    return n_segments / (1 + 2 * total)


def welch_psd(x, segment_len, overlap=None, window="hann", unit="psd_V2_per_Hz"):
    """One-sided Welch PSD with the DC bin dropped.

    White noise of variance sigma**2 sampled at fs gives ``2 sigma**2 / fs``.
    ``overlap`` defaults to half a segment.
    """
    segment_len, overlap, _ = _segments(len(x), segment_len, overlap)
    f, p = signal.welch(x.samples, fs=x.sample_rate, window=window, nperseg=segment_len,
                        noverlap=overlap, detrend=False, scaling="density",
                        return_onesided=True, average="mean")
    return NoiseSpectrum(FrequencyGrid(f[1:]), p[1:], unit, x.label)


def cross_spectra(x, y, segment_len, overlap=None, window="hann"):
    """Welch-averaged S11, S22, S12 and magnitude-squared coherence of ``x`` and ``y``."""
    if x.sample_rate != y.sample_rate:
        raise ValueError(f"sample rates differ: {x.sample_rate} vs {y.sample_rate}")
    if len(x) != len(y):
        raise ValueError(f"series lengths differ: {len(x)} vs {len(y)}")
    segment_len, overlap, n_seg = _segments(len(x), segment_len, overlap)
    kw = dict(fs=x.sample_rate, window=window, nperseg=segment_len, noverlap=overlap,
              detrend=False, scaling="density", average="mean")
    f, s11 = signal.welch(x.samples, **kw)
    _, s22 = signal.welch(y.samples, **kw)
    _, s12 = signal.csd(x.samples, y.samples, **kw)
    f, s11, s22, s12 = f[1:], s11[1:], s22[1:], s12[1:]
    denom = s11 * s22
    with np.errstate(divide="ignore", invalid="ignore"):
        coh = np.where(denom > 0, np.abs(s12) ** 2 / denom, 0.0)
    coh = np.clip(coh, 0.0, 1.0)
    return TwoChannelSpectra(FrequencyGrid(f), s11, s22, s12, coh, n_seg,
                             welch_equivalent_averages(window, segment_len, overlap, n_seg))


def default_coherence_floor(n_averages):
    return 0.0 if not n_averages else 3.0 / n_averages


def frequency_noise_subtract(spec, shot_psd=0.0, coherence_floor=None):
    """Recover the cavity signal C1 (channel-2 volts / rtHz) bin by bin.

    Bins are flagged ``coherence_floor`` when there is no frequency noise or the
    coherence is below the floor (default ``3 / n_averages``).  They are flagged
    ``nonphysical_negative`` when the shot noise exceeds S22 or the radicand is
    negative.  Flagged bins carry NaN.
    """
    shot_psd = np.broadcast_to(np.asarray(shot_psd, dtype=float), spec.S22.shape)
    if coherence_floor is None:
        coherence_floor = default_coherence_floor(spec.n_averages)
    s22 = spec.S22
    coh = spec.coherence
    f2 = s22 - shot_psd

    flags = np.full(s22.shape, FLAG_OK, dtype=object)
    negative_f2 = f2 < 0
    floor = ~negative_f2 & ((f2 == 0) | (coh <= 0) | (coh < coherence_floor))
    flags[negative_f2] = FLAG_NEGATIVE
    flags[floor] = FLAG_FLOOR

    usable = flags == FLAG_OK
    radicand = np.full(s22.shape, np.nan)
    radicand[usable] = f2[usable] / (coh[usable] * s22[usable]) - 1
    roundoff = usable & (radicand < 0) & (radicand > -_RADICAND_ROUNDOFF)
    radicand[roundoff] = 0.0
    bad = usable & (radicand < 0)
    flags[bad] = FLAG_NEGATIVE
    usable &= ~bad

    f_asd = np.sqrt(np.clip(f2, 0, None))
    c1 = np.full(s22.shape, np.nan)
    c1[usable] = f_asd[usable] * np.sqrt(radicand[usable])
    return SubtractionResult(
        NoiseSpectrum(spec.grid, c1, "asd_V_per_rtHz", "C1"),
        NoiseSpectrum(spec.grid, f_asd, "asd_V_per_rtHz", "F"),
        flags.astype(str),
    )


def _stat_covariance(sigma, n):
    """Covariance of (S11, S22, Re S12, Im S12) estimates from n complex Gaussian averages.

    ``sigma`` has shape (..., 2, 2) with sigma[a, b] = E[x_a conj(x_b)].  For circular
    Gaussians E[dS_ab conj(dS_cd)] = sigma_ac sigma_db / n and
    E[dS_ab dS_cd] = sigma_ad sigma_cb / n.
    """
    params = [((0, 0), "r"), ((1, 1), "r"), ((0, 1), "r"), ((0, 1), "i")]
    cov = np.empty(sigma.shape[:-2] + (4, 4))
    for i, ((a, b), pu) in enumerate(params):
        for j, ((c, d), pv) in enumerate(params):
            K = sigma[..., a, c] * sigma[..., d, b] / n
            J = sigma[..., a, d] * sigma[..., c, b] / n
            if pu == "r" and pv == "r":
                cov[..., i, j] = 0.5 * np.real(K + J)
            elif pu == "i" and pv == "i":
                cov[..., i, j] = 0.5 * np.real(K - J)
            elif pu == "r":
                cov[..., i, j] = 0.5 * np.imag(J - K)
            else:
                cov[..., i, j] = 0.5 * np.imag(K + J)
    return cov


def c1_estimator_sigma(S11, S22, S12, shot_psd, n_averages):
    """Delta-method standard deviation of the recovered C1 amplitude.

    ``S11``, ``S22``, ``S12`` are the true spectra (channel 1 times channel 2
    conjugate convention does not matter here).  ``n_averages`` should be the
    equivalent number of independent averages.
    """
    S11 = np.asarray(S11, dtype=float)
    S22 = np.asarray(S22, dtype=float)
    S12 = np.asarray(S12, dtype=complex)
    shot = np.broadcast_to(np.asarray(shot_psd, dtype=float), S22.shape)

    def c1(p):
        s11, s22, re, im = p
        f2 = s22 - shot
        return np.sqrt(np.clip(f2 * (f2 * s11 / (re**2 + im**2) - 1), 0, None))

    p0 = np.stack([S11, S22, S12.real, S12.imag])
    grad = np.empty_like(p0)
    for k in range(4):
        h = 1e-6 * np.maximum(np.abs(p0[k]), 1e-3 * np.sqrt(S11 * S22))
        up, dn = p0.copy(), p0.copy()
        up[k] += h
        dn[k] -= h
        grad[k] = (c1(up) - c1(dn)) / (2 * h)

    sigma = np.empty(S11.shape + (2, 2), dtype=complex)
    sigma[..., 0, 0] = S11
    sigma[..., 1, 1] = S22
    sigma[..., 0, 1] = S12
    sigma[..., 1, 0] = np.conj(S12)
    cov = _stat_covariance(sigma, n_averages)
    g = np.moveaxis(grad, 0, -1)
    return np.sqrt(np.einsum("...i,...ij,...j->...", g, cov, g))


def volts_to_hz(spectrum, calibration, min_sin=0.1):
    """Convert a V/rtHz spectrum to laser frequency noise in Hz/rtHz.

    The fringe slope dV/domega is per unit angular frequency, so after dividing by
    it the result is divided by a further 2 pi.
    """
    from .delayline import fringe_slope, require_operating_point

    require_operating_point(calibration, min_sin)
    if spectrum.unit == "psd_V2_per_Hz":
        spectrum = spectrum.as_asd()
    if spectrum.unit != "asd_V_per_rtHz":
        raise ValueError(f"expected a voltage spectrum, got {spectrum.unit}")
    slope = abs(fringe_slope(calibration))
    return spectrum.scaled(1 / (slope * 2 * np.pi), "asd_Hz_per_rtHz")


def hz_to_meters(spectrum, length, wavelength):
    """Convert frequency noise (Hz/rtHz) to displacement (m/rtHz) via L lambda / c."""
    if not (length > 0 and wavelength > 0):
        raise ValueError("length and wavelength must be positive")
    if spectrum.unit == "psd_Hz2_per_Hz":
        spectrum = spectrum.as_asd()
    if spectrum.unit != "asd_Hz_per_rtHz":
        raise ValueError(f"expected a frequency-noise spectrum, got {spectrum.unit}")
    return spectrum.scaled(length * wavelength / CONSTANTS.c, "asd_m_per_rtHz")
