import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import signal

from conftest import HARDWARE_MODELS
from oracles import chirp_torque, lti_response
from telesim.config import IdentOptions, PlantConfig
from telesim.excitation import ChirpSpec
from telesim.sysid import (UnidentifiableData, autocorrelation, fit_least_squares, fit_second_order,
                           nrmse_fit, run_identification, simulate, whiteness_test)
from telesim.tf import TransferFunction2

DT = 1e-3


def test_fit_perfect():
    y = np.array([0.0, 1.0, 2.0])
    assert nrmse_fit(y, y) == 100.0


def test_fit_mean_prediction():
    y = np.array([0.0, 1.0, 2.0])
    assert nrmse_fit(y, np.full(3, y.mean())) == pytest.approx(0.0)


def test_fit_hand_example():
    assert nrmse_fit(np.array([0.0, 1, 2]), np.array([0.0, 1, 3])) == pytest.approx(29.29, abs=5e-3)


def test_whiteness_zero_residuals():
    assert whiteness_test(np.zeros(1000)).passed


def test_whiteness_sinusoid_fails():
    t = np.arange(10000) * DT
    report = whiteness_test(np.sin(2 * np.pi * 0.5 * t))
    assert not report.passed
    assert report.lags_outside_band == 20


def test_whiteness_needs_enough_samples():
    with pytest.raises(ValueError):
        whiteness_test(np.ones(100), lags=20)


def test_autocorrelation_of_white_noise_is_small():
    r = autocorrelation(np.random.default_rng(0).standard_normal(10000), 20)
    assert np.all(np.abs(r) < 4 / math.sqrt(10000))


def test_reidentify_rigid_spring_entry():
    coeffs = HARDWARE_MODELS[("rigid", "spring")]
    _, u, y = lti_response(coeffs, chirp_torque())
    fit = fit_second_order(u, y, DT)
    np.testing.assert_allclose(fit.tf.coefficients(), coeffs, rtol=1e-3)


def test_mass_spring_dc_gain():
    # J theta'' + b theta' + K theta = u with K = 1 mNm/deg and a small inertia
    J, b, K = 0.01, 0.05, 1.0
    _, u, y = lti_response((0.0, 1 / J, b / J, K / J), chirp_torque(amplitude=20.0))
    fit = fit_second_order(u, y, DT)
    assert fit.tf.dc_gain == pytest.approx(1.0, rel=5e-3)


def test_constant_data_unidentifiable():
    with pytest.raises(UnidentifiableData):
        fit_least_squares(np.ones(5000), np.full(5000, 2.0), DT)
    with pytest.raises(UnidentifiableData):
        fit_second_order(np.ones(5000), np.full(5000, 2.0), DT)


def test_simulate_estimates_initial_conditions():
    tf = TransferFunction2(*HARDWARE_MODELS[("damped", "spring")])
    t = np.arange(5001) * DT
    u = 30 * np.sin(3 * t)
    sys = signal.StateSpace(*tf.state_space())
    _, y, _ = signal.lsim(sys, u, t, X0=[0.02, -0.1])
    assert nrmse_fit(y, simulate(tf, u, DT, y)) > 99.999
    assert nrmse_fit(y, simulate(tf, u, DT)) < 99.9


@settings(max_examples=15, deadline=None)
@given(st.floats(3.0, 25.0), st.floats(0.1, 1.0), st.floats(0.2, 3.0), st.floats(-3.0, 3.0))
def test_random_models_reidentified(wn, zeta, dc, b1):
    coeffs = (b1, dc * wn**2, 2 * zeta * wn, wn**2)
    t = np.arange(20001) * DT
    u = chirp_torque()(t)
    sys = signal.StateSpace(*TransferFunction2(*coeffs).state_space())
    _, y, _ = signal.lsim(sys, u, t)
    fit = fit_second_order(u, y, DT)
    got = fit.tf.coefficients()
    scale = np.abs(np.array(coeffs))
    # b1 may be near zero, so it is judged against the b0 scale
    scale[0] = max(scale[0], 0.01 * scale[1])
    assert np.all(np.abs(got - coeffs) <= 0.01 * scale)


ELASTIC_SPRING_DATA = lti_response(HARDWARE_MODELS[("elastic", "spring")], chirp_torque())


@settings(max_examples=10, deadline=None)
@given(st.floats(0.05, 20.0))
def test_input_scaling_covariance(factor):
    _, u, y = ELASTIC_SPRING_DATA
    base = fit_second_order(u, y, DT).tf
    scaled = fit_second_order(u * factor, y, DT).tf
    np.testing.assert_allclose(scaled.coefficients(), base.rescale_input(1 / factor).coefficients(),
                               rtol=1e-6, atol=1e-9)


def test_least_squares_close_to_refined():
    result = run_identification(PlantConfig(environment_kind="spring"), ChirpSpec(),
                                IdentOptions(refine=False))
    refined = run_identification(PlantConfig(environment_kind="spring"), ChirpSpec())
    assert not result.refined and refined.refined
    ls, ref = result.tf.coefficients(), refined.tf.coefficients()
    assert np.linalg.norm(ls - ref) <= 0.05 * np.linalg.norm(ref)


def test_rigid_spring_identification():
    result = run_identification(PlantConfig(environment_kind="spring"), ChirpSpec())
    assert result.fit_validation >= 99.0
    assert result.stable
    # rigid plant behind a 1 mNm/deg spring: DC gain 1 deg/mNm
    assert result.dc_gain == pytest.approx(1.0, rel=1e-3)
    doc = result.to_dict()
    assert doc["formatted"] == result.tf.format()
    assert set(doc["whiteness"]) >= {"passed", "statistic", "threshold", "lags"}
