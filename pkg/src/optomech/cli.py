"""Command-line front end.

Verbs
-----
budget          noise budget of the configured cavity, referred to the SQL
sweep           budgets at a list of target spring frequencies
calibrate-demo  synthetic two-detector run through the full calibration chain
fringe-fit      fringe sweep file -> delay-line calibration JSON

Exit codes are 0 on success, 1 for runtime failures and 2 for invalid
configuration or input files.  Failures print one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as fio
from .budget import UnreachableTargetError, build_budget, detuning_for_os_frequency
from .config import ConfigError, load_config
from .constants import CONSTANTS
from .core import AntiSpringError, NotAmplifiedError, optical_spring, sql_beating_factor
from .delayline import (
    FringeFitError,
    TurningPointError,
    calibrate,
    fringe_slope,
    operating_phase,
    synthetic_sweep,
)
from .spectral import (
    c1_estimator_sigma,
    cross_spectra,
    frequency_noise_subtract,
    hz_to_meters,
    segment_length_for_averages,
    volts_to_hz,
)
from .spectrum import FrequencyGrid, NoiseSpectrum
from .synth import SignalModel, generate_timeseries, oracle_spectra, shot_noise_asd

EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION = 0, 1, 2
BUDGET_COLUMNS = ("frequency_hz", "quantum_asd_m_per_rtHz", "thermal_asd_m_per_rtHz",
                  "total_asd_m_per_rtHz", "sql_asd_m_per_rtHz", "ratio_db_power")


class InputError(ValueError):
    """Bad command-line input (exit code 2)."""


def _emit(event, **fields):
    sys.stderr.write(json.dumps({event: fields}, sort_keys=True) + "\n")


def _write_table(out, stem, columns, fmt):
    if fmt == "csv":
        return fio.write_spectra_csv(out / f"{stem}.csv", columns).name
    return fio.write_json(out / f"{stem}.json", {"schema": fio.SPECTRA_SCHEMA,
                                                 "columns": columns}).name


# --- budget ----------------------------------------------------------------

def _band_dict(band):
    if band is None:
        return None
    return {"f_lo_hz": band.f_lo, "f_hi_hz": band.f_hi, "f_min_hz": band.f_min,
            "depth_db": band.depth_db, "power_ratio": band.power_ratio,
            "amplitude_ratio": band.amplitude_ratio,
            "power_reduction_percent": 100 * (1 - band.power_ratio)}


def _budget_columns(report):
    c = report.components
    return {
        BUDGET_COLUMNS[0]: report.grid.values,
        BUDGET_COLUMNS[1]: c["quantum"].as_asd().values,
        BUDGET_COLUMNS[2]: c["thermal"].as_asd().values,
        BUDGET_COLUMNS[3]: c["total"].as_asd().values,
        BUDGET_COLUMNS[4]: c["sql"].as_asd().values,
        BUDGET_COLUMNS[5]: report.ratio_to_sql.values,
    }


def _derived(report):
    cav, osc = report.cavity, report.oscillator
    d = {
        "detuning": cav.detuning,
        "input_transmission": cav.input_transmission,
        "input_power_w": cav.input_power,
        "circulating_power_w": cav.circulating_power,
        "linewidth_hwhm_hz": cav.linewidth_hwhm,
        "measurement_rate_per_s": report.measurement_rate
        if np.ndim(report.measurement_rate) == 0 else None,
        "sql_mode": report.sql_mode,
        "mechanical_damping_rate_per_s": osc.damping_rate,
    }
    if report.spring is not None:
        d["spring_constant_n_per_m"] = report.spring.stiffness
        d["spring_frequency_hz"] = report.spring.angular_frequency / (2 * np.pi)
    try:
        factor = sql_beating_factor(cav.detuning)
        d["backaction_to_sql_amplitude_at_spring"] = factor
        d["backaction_to_sql_db_power_at_spring"] = 20 * np.log10(factor)
    except NotAmplifiedError:
        pass
    return d


def _budget(cfg, cavity=None):
    osc = cfg.oscillator.build()
    cavity = cavity or cfg.cavity.build(osc)
    return build_budget(cavity, osc, grid=cfg.grid.build(), **cfg.budget.options())


def cmd_budget(cfg, out, fmt):
    report = _budget(cfg)
    table = _write_table(out, "budget_spectra", _budget_columns(report), fmt)
    summary = {
        "command": "budget",
        "spectra_file": table,
        "band": _band_dict(report.band),
        "depth_db": report.band.depth_db if report.band else None,
        "min_ratio_db": report.min_ratio_db,
        "derived": _derived(report),
        "settings": report.settings,
        "uncertainty": vars(cfg.uncertainty),
        "config": cfg.to_dict(),
    }
    fio.write_json(out / "budget_summary.json", summary)
    return summary


# --- sweep -----------------------------------------------------------------

def cmd_sweep(cfg, out, fmt):
    sw = cfg.sweep
    seen, targets, duplicates = set(), [], []
    for t in sw.targets_hz:
        if t in seen:
            duplicates.append(t)
            continue
        seen.add(t)
        targets.append(t)
    for t in duplicates:
        _emit("warning", message=f"duplicate sweep target {t} Hz ignored", target_hz=t)

    osc = cfg.oscillator.build()
    template = cfg.cavity.build(osc)
    entries, errors = [], []
    for t in targets:
        try:
            delta = detuning_for_os_frequency(2 * np.pi * t, template, osc,
                                              hold=sw.hold, branch=sw.branch)
        except (UnreachableTargetError, AntiSpringError) as exc:
            errors.append({"target_hz": t, "error": str(exc)})
            continue
        report = _budget(cfg, template.with_detuning(delta, sw.hold))
        stem = f"sweep_{t:.6g}Hz"
        entries.append({
            "target_hz": t,
            "detuning": delta,
            "spring_frequency_hz": report.spring.angular_frequency / (2 * np.pi),
            "min_ratio_db": report.min_ratio_db,
            # signed: negative when the curve never dips below the SQL
            "depth_db": -report.min_ratio_db,
            "band": _band_dict(report.band),
            "spectra_file": _write_table(out, stem, _budget_columns(report), fmt),
        })
    entries.sort(key=lambda e: e["spring_frequency_hz"])
    summary = {
        "command": "sweep",
        "targets": entries,
        "errors": errors,
        "duplicates_ignored_hz": duplicates,
        "hold": sw.hold,
        "branch": sw.branch,
        "uncertainty": vars(cfg.uncertainty),
        "config": cfg.to_dict(),
    }
    fio.write_json(out / "sweep_summary.json", summary)
    return summary


# --- calibrate-demo --------------------------------------------------------

def _volts_per_meter(cal, cavity):
    # m -> Hz (c / L lambda) -> channel-2 volts (|dV/domega| 2 pi)
    return (CONSTANTS.c / (cavity.length * cavity.wavelength)
            * abs(fringe_slope(cal)) * 2 * np.pi)


def cmd_calibrate_demo(cfg, out, fmt):
    sig, fr = cfg.signal, cfg.fringe
    osc = cfg.oscillator.build()
    cavity = cfg.cavity.build(osc)
    report = _budget(cfg, cavity)
    grid = report.grid
    truth_m = report.components["total"].as_asd().values
    sql_m = report.components["sql"].as_asd().values

    # calibrate the delay line from a synthetic sweep, as in the lab
    true_cal = fr.calibration()
    sweep = synthetic_sweep(fr.A, fr.B, fr.sweep_samples, fr.sweep_fringes, fr.sweep_noise_v,
                            seed=cfg.seed)
    cal, fit = calibrate(sweep, fr.null_frequency(), fr.locked_voltage)

    k_true = _volts_per_meter(true_cal, cavity)
    freq_noise_v = sig.frequency_noise_hz_per_rthz * k_true / (
        CONSTANTS.c / (cavity.length * cavity.wavelength))
    sn = shot_noise_asd(sig.detected_power, cavity.photon_energy, sig.responsivity_v_per_w)
    model = SignalModel(grid, freq_noise_v, truth_m * k_true, sn, sig.gain_ratio, cfg.seed)

    if sig.mode == "oracle":
        spec = oracle_spectra(model)
        n_eq = None
    else:
        ch1, ch2 = generate_timeseries(model, sig.sample_rate_hz, sig.duration_s)
        spec = cross_spectra(ch1, ch2, segment_length_for_averages(len(ch1), sig.averages))
        n_eq = spec.equivalent_averages
        keep = (spec.grid.values >= grid.values[0]) & (spec.grid.values <= grid.values[-1])
        sub = FrequencyGrid(spec.grid.values[keep])
        spec = type(spec)(sub, spec.S11[keep], spec.S22[keep], spec.S12[keep],
                          spec.coherence[keep], spec.n_averages, spec.equivalent_averages)

    result = frequency_noise_subtract(spec, sn**2)
    recovered = hz_to_meters(volts_to_hz(result.C1, cal), cavity.length, cavity.wavelength)
    f = spec.grid.values
    truth = np.interp(f, grid.values, truth_m)
    sql = np.interp(f, grid.values, sql_m)
    ok = result.ok
    rel_err = np.abs(recovered.values - truth) / truth

    if n_eq is None:
        sigma_m = np.zeros_like(f)
        within = np.ones(f.shape, dtype=bool)
    else:
        F, C1, Sn = model.at(f)
        lam = model.gain_ratio
        sigma_v = c1_estimator_sigma((F**2 + C1**2) * lam**2, F**2 + Sn**2, lam * F**2,
                                     Sn**2, n_eq)
        sigma_m = sigma_v / k_true
        within = np.abs(recovered.values - truth) <= 3 * sigma_m

    ratio_db = 20 * np.log10(recovered.values / sql)
    # single Welch bins are noisy, so average the power over +/-0.5% around f_OS
    f_os = report.spring.angular_frequency / (2 * np.pi) if report.spring else None
    ratio_at_os = None
    if f_os is not None:
        win = ok & (np.abs(f - f_os) <= 0.005 * f_os)
        if not win.any():
            win = ok & (np.abs(f - f_os) == np.abs(f[ok] - f_os).min())
        ratio_at_os = float(10 * np.log10(np.mean(recovered.values[win] ** 2)
                                          / np.mean(sql[win] ** 2)))

    columns = {
        "frequency_hz": f,
        "recovered_asd_m_per_rtHz": recovered.values,
        "truth_asd_m_per_rtHz": truth,
        "sigma_asd_m_per_rtHz": sigma_m,
        "sql_asd_m_per_rtHz": sql,
        "ratio_db_power": ratio_db,
        "flag_ok": ok.astype(float),
    }
    table = _write_table(out, "calibrate_spectra", columns, fmt)
    summary = {
        "command": "calibrate-demo",
        "spectra_file": table,
        "mode": sig.mode,
        "welch_segments": spec.n_averages,
        "equivalent_averages": n_eq,
        "flags": result.flag_counts(),
        "max_relative_error": float(np.max(rel_err[ok])) if ok.any() else None,
        "median_relative_error": float(np.median(rel_err[ok])) if ok.any() else None,
        "fraction_within_3sigma": float(np.mean(within[ok])) if ok.any() else None,
        "spring_frequency_hz": f_os,
        "recovered_ratio_db_at_spring": ratio_at_os,
        "truth_ratio_db_at_spring": None if f_os is None else float(np.interp(
            f_os, grid.values, report.ratio_to_sql.values)),
        "calibration": {**cal.to_dict(), "slope_v_s_per_rad": fringe_slope(cal),
                        "operating_phase_rad": operating_phase(cal),
                        "fit_residual_rms_v": fit.residual_rms},
        "shot_noise_v_per_rthz": sn,
        "uncertainty": vars(cfg.uncertainty),
        "config": cfg.to_dict(),
    }
    fio.write_json(out / "calibrate_summary.json", summary)
    return summary


# --- fringe-fit ------------------------------------------------------------

def cmd_fringe_fit(cfg, out, sweep_path=None):
    fr = cfg.fringe
    if sweep_path is None:
        sweep = synthetic_sweep(fr.A, fr.B, fr.sweep_samples, fr.sweep_fringes,
                                fr.sweep_noise_v, seed=cfg.seed)
        source = "synthetic"
    else:
        try:
            sweep = fio.read_fringe_sweep(sweep_path)
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read fringe sweep {sweep_path}: {exc}") from exc
        source = str(sweep_path)
    cal, fit = calibrate(sweep, fr.null_frequency(), fr.locked_voltage)
    result = {
        "command": "fringe-fit",
        "source": source,
        **cal.to_dict(),
        "null_frequency_hz": fr.null_frequency(),
        "slope_v_s_per_rad": fringe_slope(cal),
        "volts_per_hz": abs(fringe_slope(cal)) * 2 * np.pi,
        "operating_phase_rad": operating_phase(cal),
        "fit": {"residual_rms_v": fit.residual_rms, "fringes_covered": fit.fringes_covered,
                "wavenumber_per_drive": fit.wavenumber, "phase0_rad": fit.phase0},
    }
    fio.write_json(out / "fringe_calibration.json", result)
    return result


# --- entry point -----------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML or JSON run configuration")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="spectra table format (summaries are always JSON)")
    p = argparse.ArgumentParser(prog="optomech", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("budget", parents=[common], help="SQL-referred noise budget")
    sub.add_parser("sweep", parents=[common], help="budgets across spring frequencies")
    sub.add_parser("calibrate-demo", parents=[common], help="synthetic calibration chain")
    ff = sub.add_parser("fringe-fit", parents=[common], help="fit a delay-line fringe sweep")
    ff.add_argument("--sweep", type=Path, help="fringe sweep CSV (synthetic if omitted)")
    return p


def _fail(code, exc, **extra):
    _emit("error", type=type(exc).__name__, message=str(exc), exit_code=code, **extra)
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION

    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError("seed", "must be non-negative")
        cfg = load_config(args.config).with_seed(args.seed)
    except ConfigError as exc:
        return _fail(EXIT_VALIDATION, exc, field=exc.field)
    except OSError as exc:
        return _fail(EXIT_VALIDATION, exc, field="--config")

    out = args.out
    try:
        if args.command == "budget":
            cmd_budget(cfg, out, args.format)
        elif args.command == "sweep":
            cmd_sweep(cfg, out, args.format)
        elif args.command == "calibrate-demo":
            cmd_calibrate_demo(cfg, out, args.format)
        else:
            cmd_fringe_fit(cfg, out, args.sweep)
    except InputError as exc:
        return _fail(EXIT_VALIDATION, exc)
    except (FringeFitError, TurningPointError, ValueError, ArithmeticError, OSError) as exc:
        return _fail(EXIT_RUNTIME, exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
