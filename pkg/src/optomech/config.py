"""Run configuration: a YAML (or JSON) key tree validated before any computation.

Each top-level section is optional and falls back to the cryogenic cantilever
parameter set in :mod:`optomech.presets`.  A section that *is* given is taken
as written: its required keys must all be present and unknown keys are
rejected, so a typo never silently falls back to a default.

Example
-------
.. code-block:: yaml

    seed: 7
    oscillator: {mass: 50.0e-12, resonance_hz: 876, quality_factor: 25000,
                 temperature: 29}
    cavity: {length: 0.01, wavelength: 1.064e-6, detuning: -3.1,
             circulating_power: 0.071, input_transmission: tuning_ceiling}
    grid: {f_min: 10.0e3, f_max: 200.0e3, points: 4000, spacing: log}
    sweep: {targets_hz: [41.3e3, 53.6e3, 67.8e3, 91.4e3]}
"""

from __future__ import annotations

import dataclasses
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import presets
from .budget import RATE_MODES, SQL_MODES, THERMAL_CONVENTIONS
from .core import CavityConfig, MechanicalOscillator
from .delayline import FIBER_INDEX, FringeCalibration, fiber_delay
from .spectrum import FrequencyGrid


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the dotted path of the culprit."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


def _opt(default):
    return field(default=default)


@dataclass(frozen=True)
class OscillatorSection:
    mass: float
    resonance_hz: float
    quality_factor: float
    temperature: float = 0.0
    damping_model: str = "structural"

    def build(self):
        return MechanicalOscillator.from_hz(self.mass, self.resonance_hz, self.quality_factor,
                                            self.temperature, self.damping_model)


@dataclass(frozen=True)
class CavitySection:
    """``input_transmission`` is a number or one of the preset anchor names.

    Exactly one of ``circulating_power`` and ``input_power`` must be given.
    """

    length: float
    wavelength: float
    detuning: float
    input_transmission: object = "tuning_ceiling"
    circulating_power: float | None = None
    input_power: float | None = None
    linewidth_hwhm: float | None = None

    def transmission(self, osc):
        if isinstance(self.input_transmission, str):
            return presets.input_transmission(self.input_transmission, osc)
        return float(self.input_transmission)

    def build(self, osc):
        T = self.transmission(osc)
        if self.circulating_power is not None:
            return CavityConfig.with_circulating_power(
                self.circulating_power, length=self.length, wavelength=self.wavelength,
                input_transmission=T, detuning=self.detuning,
                linewidth_hwhm=self.linewidth_hwhm)
        return CavityConfig(self.length, self.wavelength, T, self.input_power, self.detuning,
                            self.linewidth_hwhm)


@dataclass(frozen=True)
class GridSection:
    f_min: float
    f_max: float
    points: int
    spacing: str = "log"

    def build(self):
        make = FrequencyGrid.log if self.spacing == "log" else FrequencyGrid.linear
        return make(self.f_min, self.f_max, self.points)


@dataclass(frozen=True)
class BudgetSection:
    sql_mode: str = "free_mass"
    measurement_rate: object = "auto"
    readout_efficiency: float = presets.READOUT_EFFICIENCY
    thermal_convention: str = "one_sided"

    def options(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class SweepSection:
    targets_hz: tuple = presets.TUNING_LIMITS[:1] + (53.6e3, presets.BEST_SPRING_FREQUENCY,
                                                     presets.TUNING_LIMITS[1])
    hold: str = "circulating_power"
    branch: str = "far"


@dataclass(frozen=True)
class SignalSection:
    """Synthetic two-detector data for ``calibrate-demo``.

    ``mode="oracle"`` skips the time series and uses exact spectra.
    """

    sample_rate_hz: float = 1.0e6
    duration_s: float = 4.0
    averages: int = 64
    frequency_noise_hz_per_rthz: float = 0.3
    gain_ratio: float = 1.0
    detected_power: float = 1.0e-3
    responsivity_v_per_w: float = 1.0e3
    mode: str = "timeseries"


@dataclass(frozen=True)
class FringeSection:
    A: float = 2.0
    B: float = 1.0
    locked_voltage: float = 2.3
    fiber_length: float = presets.DELAY_FIBER_LENGTH
    fiber_index: float = FIBER_INDEX
    null_frequency_hz: float | None = None
    sweep_samples: int = 1000
    sweep_fringes: float = 3.0
    sweep_noise_v: float = 1.0e-3

    def null_frequency(self):
        if self.null_frequency_hz is not None:
            return self.null_frequency_hz
        return 2.0 / fiber_delay(self.fiber_length, self.fiber_index)

    def calibration(self):
        return FringeCalibration(self.A, self.B, 2.0 / self.null_frequency(),
                                 self.locked_voltage)


@dataclass(frozen=True)
class UncertaintySection:
    calibration_repeatability: float = 0.01
    sql_mass_fraction: float = 0.05
    total: float = 0.051


@dataclass(frozen=True)
class RunConfig:
    oscillator: OscillatorSection
    cavity: CavitySection
    grid: GridSection
    budget: BudgetSection = _opt(BudgetSection())
    sweep: SweepSection = _opt(SweepSection())
    signal: SignalSection = _opt(SignalSection())
    fringe: FringeSection = _opt(FringeSection())
    uncertainty: UncertaintySection = _opt(UncertaintySection())
    seed: int = 0

    def with_seed(self, seed):
        return self if seed is None else dataclasses.replace(self, seed=int(seed))

    def to_dict(self):
        return dataclasses.asdict(self)


DEFAULTS = {
    "oscillator": {"mass": presets.MASS, "resonance_hz": presets.RESONANCE,
                   "quality_factor": presets.QUALITY_FACTOR,
                   "temperature": presets.TEMPERATURE},
    "cavity": {"length": presets.LENGTH, "wavelength": presets.WAVELENGTH,
               "detuning": presets.DETUNING, "circulating_power": presets.CIRCULATING_POWER,
               "input_transmission": "tuning_ceiling",
               "linewidth_hwhm": presets.LINEWIDTH_HWHM},
    "grid": {"f_min": 10e3, "f_max": 200e3, "points": 4000, "spacing": "log"},
}

class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads YAML 1.2 floats such as ``1e4`` and ``41.3e3``."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
    |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
    |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
    |[-+]?\.(?:inf|Inf|INF)
    |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."),
)

_SECTIONS = {f.name: f.type for f in dataclasses.fields(RunConfig)}
_SECTION_TYPES = {
    "oscillator": OscillatorSection, "cavity": CavitySection, "grid": GridSection,
    "budget": BudgetSection, "sweep": SweepSection, "signal": SignalSection,
    "fringe": FringeSection, "uncertainty": UncertaintySection,
}


def _number(path, value, *, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    if integer:
        if value != int(value):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _coerce(path, f, value):
    kind = f.type
    if value is None and "None" in kind:
        return None
    if kind == "int":
        return _number(path, value, integer=True)
    if kind.startswith("float"):
        return _number(path, value)
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if kind == "tuple":
        if not isinstance(value, (list, tuple)):
            raise ConfigError(path, "expected a list")
        return tuple(_number(f"{path}[{i}]", v) for i, v in enumerate(value))
    # ``object``: number or string
    if isinstance(value, str):
        return value
    return _number(path, value)


def _section(name, data):
    cls = _SECTION_TYPES[name]
    if not isinstance(data, dict):
        raise ConfigError(name, "expected a mapping")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key in data:
        if key not in fields:
            raise ConfigError(f"{name}.{key}", f"unknown key (allowed: {sorted(fields)})")
    kwargs = {}
    for fname, f in fields.items():
        path = f"{name}.{fname}"
        required = f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING
        if fname not in data:
            if required:
                raise ConfigError(path, "required field is missing")
            continue
        kwargs[fname] = _coerce(path, f, data[fname])
    return cls(**kwargs)


def _check_choice(path, value, choices):
    if value not in choices:
        raise ConfigError(path, f"must be one of {list(choices)}, got {value!r}")


def _positive(path, value):
    if not value > 0:
        raise ConfigError(path, f"must be positive, got {value!r}")


def _validate(cfg):
    o, c, g = cfg.oscillator, cfg.cavity, cfg.grid
    for name in ("mass", "resonance_hz", "quality_factor"):
        _positive(f"oscillator.{name}", getattr(o, name))
    if o.temperature < 0:
        raise ConfigError("oscillator.temperature", "must be non-negative")
    _check_choice("oscillator.damping_model", o.damping_model, ("structural", "viscous"))

    _positive("cavity.length", c.length)
    _positive("cavity.wavelength", c.wavelength)
    if (c.circulating_power is None) == (c.input_power is None):
        raise ConfigError("cavity.circulating_power",
                          "give exactly one of circulating_power and input_power")
    if isinstance(c.input_transmission, str):
        _check_choice("cavity.input_transmission", c.input_transmission, presets.ANCHORS)
    elif not 0 < c.input_transmission < 1:
        raise ConfigError("cavity.input_transmission", "must lie in (0, 1)")

    _positive("grid.f_min", g.f_min)
    if not g.f_max > g.f_min:
        raise ConfigError("grid.f_max", "must exceed grid.f_min")
    if g.points < 2:
        raise ConfigError("grid.points", "need at least 2 points")
    _check_choice("grid.spacing", g.spacing, ("log", "linear"))

    b = cfg.budget
    _check_choice("budget.sql_mode", b.sql_mode, SQL_MODES)
    _check_choice("budget.thermal_convention", b.thermal_convention, THERMAL_CONVENTIONS)
    if isinstance(b.measurement_rate, str):
        _check_choice("budget.measurement_rate", b.measurement_rate, RATE_MODES)
    else:
        _positive("budget.measurement_rate", b.measurement_rate)
    if not 0 < b.readout_efficiency <= 1:
        raise ConfigError("budget.readout_efficiency", "must lie in (0, 1]")

    s = cfg.sweep
    _check_choice("sweep.hold", s.hold, ("circulating_power", "input_power"))
    _check_choice("sweep.branch", s.branch, ("far", "near"))
    for i, t in enumerate(s.targets_hz):
        _positive(f"sweep.targets_hz[{i}]", t)

    sig = cfg.signal
    for name in ("sample_rate_hz", "duration_s", "averages", "gain_ratio", "detected_power"):
        _positive(f"signal.{name}", getattr(sig, name))
    for name in ("frequency_noise_hz_per_rthz", "responsivity_v_per_w"):
        if getattr(sig, name) < 0:
            raise ConfigError(f"signal.{name}", "must be non-negative")
    _check_choice("signal.mode", sig.mode, ("timeseries", "oracle"))

    fr = cfg.fringe
    _positive("fringe.B", fr.B)
    if abs(fr.locked_voltage - fr.A) > fr.B:
        raise ConfigError("fringe.locked_voltage", "must lie within A +/- B")
    _positive("fringe.fiber_length", fr.fiber_length)
    if fr.null_frequency_hz is not None:
        _positive("fringe.null_frequency_hz", fr.null_frequency_hz)
    if fr.sweep_noise_v < 0:
        raise ConfigError("fringe.sweep_noise_v", "must be non-negative")

    u = cfg.uncertainty
    for name in ("calibration_repeatability", "sql_mass_fraction", "total"):
        if not 0 <= getattr(u, name) < 1:
            raise ConfigError(f"uncertainty.{name}", "must be a fraction in [0, 1)")
    combined = math.hypot(u.calibration_repeatability, u.sql_mass_fraction)
    # quoted to three decimals, so allow half a unit in the last place
    if abs(u.total - combined) > 5e-4:
        raise ConfigError("uncertainty.total",
                          f"{u.total} is not the quadrature sum {combined:.4f} of its parts")


def parse_config(data):
    """Build a validated :class:`RunConfig` from a plain dict."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("<root>", "configuration must be a mapping")
    for key in data:
        if key not in _SECTIONS:
            raise ConfigError(key, f"unknown key (allowed: {sorted(_SECTIONS)})")
    kwargs = {}
    for name in _SECTION_TYPES:
        if name in data:
            kwargs[name] = _section(name, data[name])
        elif name in DEFAULTS:
            kwargs[name] = _section(name, DEFAULTS[name])
    if "seed" in data:
        kwargs["seed"] = _number("seed", data["seed"], integer=True)
        if kwargs["seed"] < 0:
            raise ConfigError("seed", "must be non-negative")
    cfg = RunConfig(**kwargs)
    _validate(cfg)
    # constructing the physical objects runs their own invariant checks
    try:
        osc = cfg.oscillator.build()
        cfg.cavity.build(osc)
        cfg.grid.build()
        cfg.fringe.calibration()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("<config>", str(exc)) from exc
    return cfg


def load_config(path=None):
    """Read a YAML or JSON file (YAML is a superset) and validate it."""
    if path is None:
        return parse_config({})
    text = Path(path).read_text()
    try:
        data = json.loads(text) if str(path).endswith(".json") else yaml.load(text, Loader=_Loader)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError("<file>", f"cannot parse {path}: {exc}") from exc
    return parse_config(data)
