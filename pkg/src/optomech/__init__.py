"""Quantum and thermal noise budgets for optical-spring cavities, and the
two-detector calibration chain that turns detector volts into mirror motion."""

from .budget import (
    BudgetReport,
    SubSQLBand,
    UnreachableTargetError,
    build_budget,
    detuning_for_os_frequency,
    sub_sql_band,
    sweep_detunings,
)
from .constants import CONSTANTS, PhysicalConstants
from .core import (
    AntiSpringError,
    CavityConfig,
    MechanicalOscillator,
    MeasurementModel,
    NotAmplifiedError,
    OpticalSpringState,
    backaction_psd,
    backaction_to_sql_ratio,
    backaction_to_sql_ratio_at_spring,
    imprecision_psd,
    optical_spring,
    optical_spring_constant,
    optical_spring_frequency,
    optimal_measurement_rate,
    quantum_noise_psd,
    sql_psd,
    susceptibility,
    thermal_noise_psd,
)
from .delayline import (
    FringeCalibration,
    FringeFitError,
    FringeSweep,
    TurningPointError,
    calibrate,
    fit_fringe,
    fringe_slope,
    tau_from_null,
)
from .spectral import (
    SubtractionResult,
    TimeSeries,
    TwoChannelSpectra,
    cross_spectra,
    frequency_noise_subtract,
    hz_to_meters,
    volts_to_hz,
    welch_psd,
)
from .spectrum import FrequencyGrid, NoiseSpectrum
from .synth import SignalModel, generate_timeseries, oracle_spectra, shot_noise_asd

__version__ = "0.1.0"
