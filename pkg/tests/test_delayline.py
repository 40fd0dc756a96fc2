import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from optomech.delayline import (
    FringeCalibration,
    FringeFitError,
    FringeSweep,
    TurningPointError,
    calibrate,
    fiber_delay,
    fit_fringe,
    fringe_model,
    fringe_slope,
    operating_phase,
    synthetic_sweep,
    tau_from_null,
)


def test_fringe_model_landmarks():
    assert fringe_model(2, 1, 0) == 3
    assert fringe_model(2, 1, np.pi / 2) == pytest.approx(2)
    assert fringe_model(2, 1, np.pi) == pytest.approx(1)


def test_tau_from_null():
    assert tau_from_null(2.0) == 1.0
    assert tau_from_null(8e6) == pytest.approx(tau_from_null(4e6) / 2)
    with pytest.raises(ValueError):
        tau_from_null(0)


def test_hundred_metre_fiber():
    # 1.468 * 100 m / c = 4.897e-7 s; null at 2 / tau = 4.084 MHz
    tau = fiber_delay(100.0)
    assert tau == pytest.approx(4.897e-7, rel=1e-3)
    assert 2 / tau == pytest.approx(4.084e6, rel=1e-3)


def test_slope_at_mid_fringe_and_turning_points():
    assert abs(fringe_slope(FringeCalibration(2, 1, 4.89e-7, 2))) == pytest.approx(4.89e-7)
    assert fringe_slope(FringeCalibration(2, 1, 1e-6, 3)) == pytest.approx(0, abs=1e-20)
    assert fringe_slope(FringeCalibration(2, 1, 1e-6, 1)) == pytest.approx(0, abs=1e-20)


valid_cal = st.builds(
    lambda A, B, tau, x: FringeCalibration(A, B, tau, A + x * B),
    st.floats(-5, 5), st.floats(0.01, 10), st.floats(1e-9, 1e-3), st.floats(-1, 1))


@given(valid_cal)
def test_operating_phase_round_trip(cal):
    v = fringe_model(cal.A, cal.B, operating_phase(cal))
    assert v == pytest.approx(cal.V_L, rel=1e-12, abs=1e-12 * cal.B)


@given(valid_cal)
def test_slope_matches_numerical_derivative(cal):
    phi = operating_phase(cal)
    if abs(np.sin(phi)) < 0.1:
        return
    h = 1e-5
    dv_dphi = (fringe_model(cal.A, cal.B, phi + h) - fringe_model(cal.A, cal.B, phi - h)) / (2 * h)
    assert cal.tau * dv_dphi == pytest.approx(fringe_slope(cal), rel=1e-8)


def test_calibration_validation():
    with pytest.raises(ValueError):
        FringeCalibration(2, 0, 1e-6, 2)
    with pytest.raises(ValueError):
        FringeCalibration(2, 1, 1e-6, 3.5)
    assert FringeCalibration(2, 1, 1e-6, 2.999).is_turning_point()


def test_fit_noiseless():
    fit = fit_fringe(synthetic_sweep(2.0, 1.0))
    assert fit.A == pytest.approx(2.0, abs=1e-9)
    assert fit.B == pytest.approx(1.0, abs=1e-9)
    assert fit.fringes_covered == pytest.approx(3.0, rel=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_fit_with_noise(seed):
    fit = fit_fringe(synthetic_sweep(2.0, 1.0, noise=0.01, seed=seed, phase0=seed))
    assert fit.A == pytest.approx(2.0, rel=1e-2)
    assert fit.B == pytest.approx(1.0, rel=1e-2)


def test_fit_reduced_visibility():
    fit = fit_fringe(synthetic_sweep(5.0, 0.4, fringes=1.5))
    assert (fit.A, fit.B) == (pytest.approx(5.0, abs=1e-9), pytest.approx(0.4, abs=1e-9))


def test_constant_sweep_rejected():
    with pytest.raises(FringeFitError):
        fit_fringe(FringeSweep(np.linspace(0, 1, 100), np.full(100, 2.0)))


def test_partial_fringe_rejected():
    with pytest.raises(FringeFitError, match="fringe"):
        fit_fringe(synthetic_sweep(2.0, 1.0, fringes=0.6))


def test_short_sweep_rejected():
    with pytest.raises(ValueError):
        FringeSweep(np.arange(4.0), np.arange(4.0))


def test_calibrate_refuses_turning_point():
    sweep = synthetic_sweep(2.0, 1.0)
    cal, _ = calibrate(sweep, 4.084e6, 2.3)
    assert cal.tau == pytest.approx(2 / 4.084e6)
    with pytest.raises(TurningPointError):
        calibrate(sweep, 4.084e6, 2.999)
