import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from optomech.constants import CONSTANTS
from optomech.spectral import (
    cross_spectra,
    frequency_noise_subtract,
    segment_length_for_averages,
    welch_psd,
)
from optomech.spectrum import FrequencyGrid
from optomech.synth import (
    SignalModel,
    generate_timeseries,
    oracle_spectra,
    relative_intensity_noise,
    shot_noise_asd,
)

GRID = FrequencyGrid.log(100.0, 4e3, 64)


def model(F=1.0, C1=0.5, Sn=0.2, lam=1.0, seed=0):
    return SignalModel(GRID, F, C1, Sn, lam, seed)


def test_worked_oracle():
    s = oracle_spectra(model(3.0, 4.0, 0.0))
    assert s.S11[0] == pytest.approx(25) and s.S22[0] == pytest.approx(9)
    assert s.S12[0] == pytest.approx(9) and s.coherence[0] == pytest.approx(0.36)


def test_oracle_limits():
    assert np.all(oracle_spectra(model(2.0, 0.0, 0.0)).coherence == 1.0)
    s = oracle_spectra(model(0.0, 1.0, 1.0))
    assert np.all(s.S12 == 0) and np.all(s.coherence == 0)


@given(st.floats(0, 1e3), st.floats(0, 1e3), st.floats(0, 1e3), st.floats(0.01, 100))
def test_definition_closure(F, C1, Sn, lam):
    s = oracle_spectra(model(F, C1, Sn, lam))
    assert np.allclose(np.abs(s.S12) ** 2, s.coherence * s.S11 * s.S22, rtol=1e-12, atol=0)


@pytest.mark.parametrize("lam", [0.1, 1.0, 10.0])
def test_pipeline_closure(lam):
    F = np.linspace(1.0, 2.0, len(GRID))
    C1 = np.geomspace(0.1, 3.0, len(GRID))
    m = SignalModel(GRID, F, C1, 0.3, lam)
    res = frequency_noise_subtract(oracle_spectra(m), 0.3**2)
    assert np.all(res.ok)
    assert np.allclose(res.C1.values, C1, rtol=1e-10, atol=0)


def test_model_validation():
    with pytest.raises(ValueError):
        model(F=-1.0)
    with pytest.raises(ValueError):
        model(lam=0.0)


def test_zero_model_gives_zero_output():
    ch1, ch2 = generate_timeseries(model(0, 0, 0), 1e4, 1.0)
    assert not ch1.samples.any() and not ch2.samples.any()


def test_seeded_output_is_bit_identical():
    a = generate_timeseries(model(seed=11), 1e4, 1.0)
    b = generate_timeseries(model(seed=11), 1e4, 1.0)
    c = generate_timeseries(model(seed=12), 1e4, 1.0)
    assert a[0].samples.tobytes() == b[0].samples.tobytes()
    assert a[1].samples.tobytes() == b[1].samples.tobytes()
    assert a[0].samples.tobytes() != c[0].samples.tobytes()


def test_sampling_guards():
    with pytest.raises(ValueError, match="sample rate"):
        generate_timeseries(model(), 8e3, 1.0)
    with pytest.raises(ValueError, match="duration"):
        generate_timeseries(model(), 1e4, 1e-3)


def test_welch_matches_oracle_within_bounds():
    m = SignalModel(GRID, np.linspace(1, 2, 64), np.geomspace(0.3, 1, 64), 0.2, 2.0, seed=5)
    ch1, ch2 = generate_timeseries(m, 1e4, 60.0)
    spec = cross_spectra(ch1, ch2, segment_length_for_averages(len(ch1), 64))
    f = spec.grid.values
    sel = (f >= GRID.values[0]) & (f <= GRID.values[-1])
    truth = oracle_spectra(m, FrequencyGrid(f[sel]))
    k = spec.equivalent_averages
    for est, true in ((spec.S11[sel], truth.S11), (spec.S22[sel], truth.S22)):
        z = np.abs(est - true) / (true / np.sqrt(k))
        assert np.mean(z < 3) > 0.98


def test_stationarity():
    ch1, _ = generate_timeseries(model(seed=3), 1e4, 40.0)
    half = len(ch1) // 2
    from optomech.spectral import TimeSeries
    a = welch_psd(TimeSeries(ch1.samples[:half], 1e4), 1024)
    b = welch_psd(TimeSeries(ch1.samples[half:], 1e4), 1024)
    sel = (a.frequencies > 150) & (a.frequencies < 3.5e3)
    ratio = a.values[sel] / b.values[sel]
    # each half has ~38 segments, so log ratio sd is ~sqrt(2/27)
    assert abs(np.mean(np.log(ratio))) < 0.05
    assert np.mean(np.abs(np.log(ratio)) < 3 * np.sqrt(2 / 27)) > 0.98


def test_shot_noise():
    hf = CONSTANTS.h * CONSTANTS.c / 1064e-9
    # sqrt(2 h f / 1 mW) by hand: 1.93e-8 per rtHz
    assert relative_intensity_noise(1e-3, hf) == pytest.approx(1.93e-8, rel=2e-3)
    assert shot_noise_asd(4e-3, hf, 10.0) == pytest.approx(2 * shot_noise_asd(1e-3, hf, 10.0))
    assert shot_noise_asd(1e-3, hf, 0.0) == 0.0
    assert shot_noise_asd(1e-3, hf, 5.0) == pytest.approx(5.0 * np.sqrt(2 * hf * 1e-3))
    with pytest.raises(ValueError):
        shot_noise_asd(0.0, hf, 1.0)
