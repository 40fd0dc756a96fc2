"""Ground-truth two-detector signals for exercising the calibration pipeline.

Channel 2 (delay line) carries laser frequency noise plus its own shot noise.
Channel 1 (cavity transmission) carries the same frequency noise plus the cavity
signal, scaled by the gain ratio lambda1::

    ch2 = f + n
    ch1 = lambda1 * (f + c1)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import TimeSeries, TwoChannelSpectra
from .spectrum import FrequencyGrid


@dataclass(frozen=True, eq=False)
class SignalModel:
    """Amplitude spectral densities on ``grid`` (channel-2 volts / rtHz).

    Values between grid points are interpolated linearly and held constant
    beyond the ends.
    """

    grid: FrequencyGrid
    frequency_noise_asd: np.ndarray
    cavity_signal_asd: np.ndarray
    shot_noise_asd: np.ndarray
    gain_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        n = len(self.grid)
        for name in ("frequency_noise_asd", "cavity_signal_asd", "shot_noise_asd"):
            a = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (n,)).copy()
            if np.any(a < 0) or not np.all(np.isfinite(a)):
                raise ValueError(f"{name} must be finite and non-negative")
            object.__setattr__(self, name, a)
        if not self.gain_ratio > 0:
            raise ValueError("gain_ratio must be positive")

    def at(self, frequencies):
        """(F, C1, S_n) amplitudes interpolated onto ``frequencies``."""
        f = np.asarray(frequencies, dtype=float)
        g = self.grid.values
        return (np.interp(f, g, self.frequency_noise_asd),
                np.interp(f, g, self.cavity_signal_asd),
                np.interp(f, g, self.shot_noise_asd))


def oracle_spectra(model, grid=None):
    """Exact S11, S22, S12 and coherence of the two-detector model."""
    grid = grid or model.grid
    F, C1, Sn = model.at(grid.values)
    lam = model.gain_ratio
    s11 = (F**2 + C1**2) * lam**2
    s22 = F**2 + Sn**2
    s12 = (lam * F**2).astype(complex)
    denom = s11 * s22
    with np.errstate(divide="ignore", invalid="ignore"):
        coh = np.where(denom > 0, lam**2 * F**4 / denom, 0.0)
    return TwoChannelSpectra(grid, s11, s22, s12, np.clip(coh, 0.0, 1.0), None)


def _colored(asd, n_samples, fs, rng):
    # one-sided PSD S: E|X_k|^2 = S N fs / 2 for numpy's unnormalized rfft
    scale = asd * np.sqrt(n_samples * fs / 4)
    spec = scale * (rng.standard_normal(scale.size) + 1j * rng.standard_normal(scale.size))
    spec[0] = 0.0
    if n_samples % 2 == 0:
        spec[-1] = 0.0
    return np.fft.irfft(spec, n=n_samples)


def generate_timeseries(model, fs, duration):
    """Seeded Gaussian realization of the model, shaped in the frequency domain.

    Each process (f, c1, n) draws from its own Philox stream spawned from
    ``model.seed``, so output is bit-identical for a fixed seed.
    """
    if not fs > 2 * model.grid.values[-1]:
        raise ValueError(f"sample rate {fs} Hz must exceed twice the top grid frequency "
                         f"{model.grid.values[-1]} Hz")
    if not duration >= 1 / model.grid.values[0]:
        raise ValueError(f"duration {duration} s is too short to resolve the lowest grid "
                         f"frequency {model.grid.values[0]} Hz")
    n = int(round(fs * duration))
    freqs = np.fft.rfftfreq(n, 1 / fs)
    F, C1, Sn = model.at(freqs)
    streams = [np.random.Generator(np.random.Philox(s))
               for s in np.random.SeedSequence(model.seed).spawn(3)]
    f = _colored(F, n, fs, streams[0])
    c = _colored(C1, n, fs, streams[1])
    s = _colored(Sn, n, fs, streams[2])
    ch1 = TimeSeries(model.gain_ratio * (f + c), fs, "ch1")
    ch2 = TimeSeries(f + s, fs, "ch2")
    return ch1, ch2


def relative_intensity_noise(detected_power, photon_energy):
    """Shot-noise relative intensity noise sqrt(2 h f / P) in 1/rtHz."""
    if not detected_power > 0:
        raise ValueError("detected_power must be positive")
    return np.sqrt(2 * photon_energy / detected_power)


def shot_noise_asd(detected_power, photon_energy, responsivity):
    """Detector shot noise responsivity * P * sqrt(2 h f / P) in V/rtHz."""
    return responsivity * detected_power * relative_intensity_noise(detected_power,
                                                                    photon_energy)
