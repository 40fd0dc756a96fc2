import numpy as np
import pytest
import yaml

from optomech import io as fio
from optomech.config import ConfigError, load_config, parse_config
from optomech.delayline import synthetic_sweep
from optomech.spectral import TimeSeries


# --- config -----------------------------------------------------------------

def test_defaults_validate():
    cfg = parse_config({})
    assert cfg.cavity.detuning == -3.1
    assert cfg.oscillator.mass == 50e-12
    assert cfg.uncertainty.total == 0.051


def test_missing_field_named():
    with pytest.raises(ConfigError) as err:
        parse_config({"oscillator": {"resonance_hz": 876, "quality_factor": 25000}})
    assert err.value.field == "oscillator.mass"


@pytest.mark.parametrize("data,field", [
    ({"bogus": 1}, "bogus"),
    ({"grid": {"f_min": 1, "f_max": 2, "points": 3, "typo": 1}}, "grid.typo"),
    ({"grid": {"f_min": 2, "f_max": 1, "points": 3}}, "grid.f_max"),
    ({"budget": {"sql_mode": "weird"}}, "budget.sql_mode"),
    ({"budget": {"readout_efficiency": 1.5}}, "budget.readout_efficiency"),
    ({"oscillator": {"mass": "heavy", "resonance_hz": 1, "quality_factor": 1}},
     "oscillator.mass"),
    ({"seed": 1.5}, "seed"),
    ({"uncertainty": {"total": 0.2}}, "uncertainty.total"),
    ({"cavity": {"length": 0.01, "wavelength": 1e-6, "detuning": -1}},
     "cavity.circulating_power"),
    ({"fringe": {"locked_voltage": 9.0}}, "fringe.locked_voltage"),
])
def test_invalid_fields(data, field):
    with pytest.raises(ConfigError) as err:
        parse_config(data)
    assert err.value.field == field


def test_uncertainty_quadrature():
    cfg = parse_config({})
    u = cfg.uncertainty
    assert np.hypot(u.calibration_repeatability, u.sql_mass_fraction) == pytest.approx(
        u.total, abs=5e-4)


def test_yaml_and_json_files(tmp_path):
    data = {"seed": 4, "grid": {"f_min": 1e4, "f_max": 1e5, "points": 10}}
    (tmp_path / "c.yaml").write_text(yaml.safe_dump(data))
    (tmp_path / "c.json").write_text('{"seed": 4, "grid": {"f_min": 1e4, "f_max": 1e5, '
                                     '"points": 10}}')
    a, b = load_config(tmp_path / "c.yaml"), load_config(tmp_path / "c.json")
    assert a == b and a.seed == 4 and len(a.grid.build()) == 10
    (tmp_path / "bad.yaml").write_text("grid: [unclosed")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.yaml")


def test_yaml_exponent_without_sign(tmp_path):
    # plain YAML 1.1 reads 1e4 as a string
    (tmp_path / "c.yaml").write_text("grid: {f_min: 1e4, f_max: 2.0e5, points: 10}\n"
                                     "sweep: {targets_hz: [41.3e3, 6.78E4]}\n")
    cfg = load_config(tmp_path / "c.yaml")
    assert cfg.grid.f_min == 1e4 and cfg.grid.f_max == 2e5
    assert cfg.sweep.targets_hz == (41.3e3, 67.8e3)
    (tmp_path / "s.yaml").write_text("grid: {f_min: 1e4x, f_max: 2e5, points: 10}\n")
    with pytest.raises(ConfigError) as err:
        load_config(tmp_path / "s.yaml")
    assert err.value.field == "grid.f_min"


def test_seed_override():
    assert parse_config({}).with_seed(9).seed == 9
    assert parse_config({"seed": 3}).with_seed(None).seed == 3


# --- files ------------------------------------------------------------------

def test_spectra_csv_round_trip(tmp_path):
    cols = {"frequency_hz": np.array([1.0, 2.0]), "value_m_per_rtHz": np.array([0.1, 1 / 3])}
    path = fio.write_spectra_csv(tmp_path / "s.csv", cols)
    assert path.read_text().splitlines()[0] == f"# schema: {fio.SPECTRA_SCHEMA}"
    back = fio.read_spectra_csv(path)
    assert np.array_equal(back["value_m_per_rtHz"], cols["value_m_per_rtHz"])


def test_schema_mismatch_rejected(tmp_path):
    path = fio.write_spectra_csv(tmp_path / "s.csv", {"a": [1.0]})
    text = path.read_text().replace("spectra/1", "spectra/2")
    path.write_text(text)
    with pytest.raises(fio.SchemaError, match="does not match"):
        fio.read_spectra_csv(path)
    (tmp_path / "n.csv").write_text("a\n1\n")
    with pytest.raises(fio.SchemaError, match="missing schema"):
        fio.read_spectra_csv(tmp_path / "n.csv")


@pytest.mark.parametrize("writer", [fio.write_record_csv, fio.write_record_binary])
def test_record_round_trip(tmp_path, writer):
    rng = np.random.default_rng(0)
    ch1, ch2 = (TimeSeries(rng.standard_normal(100), 2e3) for _ in range(2))
    path = writer(tmp_path / "rec", ch1, ch2)
    a, b = fio.read_record(path)
    assert np.array_equal(a.samples, ch1.samples) and np.array_equal(b.samples, ch2.samples)
    assert a.sample_rate == pytest.approx(2e3)


def test_binary_layout(tmp_path):
    ch1, ch2 = TimeSeries([1.0, 2.0], 1.0), TimeSeries([3.0, 4.0], 1.0)
    raw = fio.write_record_binary(tmp_path / "r.bin", ch1, ch2).read_bytes()
    assert len(fio.BINARY_MAGIC) == 16 and raw[:16] == fio.BINARY_MAGIC
    assert np.frombuffer(raw[16:], "<f8").tolist() == [0, 1, 3, 1, 2, 4]
    (tmp_path / "v2.bin").write_bytes(b"OPTOMECH2CHv002\n" + raw[16:])
    with pytest.raises(fio.SchemaError):
        fio.read_record(tmp_path / "v2.bin")


def test_fringe_sweep_round_trip(tmp_path):
    sweep = synthetic_sweep(2.0, 1.0, n_samples=50)
    back = fio.read_fringe_sweep(fio.write_fringe_sweep(tmp_path / "f.csv", sweep))
    assert np.array_equal(back.volts, sweep.volts)


def test_json_is_deterministic_and_strict(tmp_path):
    a = fio.dumps_json({"b": np.float64(1.5), "a": np.array([1, 2]), "n": float("nan")})
    assert a == fio.dumps_json({"n": float("nan"), "a": [1, 2], "b": 1.5})
    assert '"n": null' in a


def test_atomic_write_leaves_no_temp(tmp_path):
    fio.atomic_write(tmp_path / "x.txt", "hello")
    fio.atomic_write(tmp_path / "x.txt", "again")
    assert [p.name for p in tmp_path.iterdir()] == ["x.txt"]
    assert (tmp_path / "x.txt").read_text() == "again"
