import numpy as np
import pytest
from hypothesis import given, strategies as st

from telesim.excitation import (ChirpSpec, SineSpec, StepSpec, chirp_eval, cycle_bounds, from_document,
                                protocol_two_chirps, to_document)

SPEC = ChirpSpec()


def test_start():
    theta, omega, alpha = chirp_eval(SPEC, 0.0)
    assert theta == 0.0
    assert SPEC.frequency(0.0) == pytest.approx(0.1)


def test_end_after_21_cycles():
    assert SPEC.frequency(20.0) == pytest.approx(2.0)
    assert SPEC.phase(20.0) == pytest.approx(2 * np.pi * 21)
    assert chirp_eval(SPEC, 20.0)[0] == pytest.approx(0.0, abs=1e-12)


def test_peak_amplitude_is_90_degrees():
    t = np.linspace(0, 20, 2_000_001)
    assert np.degrees(np.max(np.abs(chirp_eval(SPEC, t)[0]))) == pytest.approx(90.0, abs=1e-6)


@pytest.mark.parametrize("t", [-0.1, 20.1])
def test_time_outside_range_rejected(t):
    with pytest.raises(ValueError):
        chirp_eval(SPEC, t)


@given(st.floats(1e-3, 20 - 1e-3))
def test_derivatives_match_finite_differences(t):
    h = 1e-6
    lo, hi = max(t - h, 0.0), min(t + h, 20.0)
    th_lo, w_lo, _ = chirp_eval(SPEC, lo)
    th_hi, w_hi, _ = chirp_eval(SPEC, hi)
    _, w, a = chirp_eval(SPEC, t)
    assert (th_hi - th_lo) / (hi - lo) == pytest.approx(w, abs=1e-6 * max(1, abs(w)) + 1e-4)
    assert (w_hi - w_lo) / (hi - lo) == pytest.approx(a, abs=1e-6 * max(1, abs(a)) + 1e-3)


def test_frequency_monotone():
    assert np.all(np.diff(SPEC.frequency(np.linspace(0, 20, 1001))) > 0)


def test_degenerate_chirp_is_a_sine():
    chirp = ChirpSpec(f0=1.0, f1=1.0, duration=5.0)
    t = np.linspace(0, 5, 501)
    for a, b in zip(chirp(t), SineSpec(90.0, 1.0, 5.0)(t)):
        np.testing.assert_allclose(a, b, atol=1e-9)


def test_two_identical_runs():
    est, val = protocol_two_chirps(SPEC)
    assert est == val


def test_cycle_bounds():
    start, end = cycle_bounds(SPEC, 0)
    assert start == 0.0
    assert SPEC.phase(end) == pytest.approx(2 * np.pi)
    start, end = cycle_bounds(SPEC, -1)
    assert SPEC.phase(start) == pytest.approx(2 * np.pi * 20)
    assert end == pytest.approx(20.0)
    with pytest.raises(IndexError):
        cycle_bounds(SPEC, 21)


def test_smooth_step_reaches_amplitude():
    spec = StepSpec(amplitude_deg=10.0, start=0.5, rise_time=0.2, duration=2.0)
    theta, omega, alpha = spec(np.array([0.0, 0.6, 1.0]))
    assert theta[0] == 0.0 and np.degrees(theta[2]) == pytest.approx(10.0)
    assert omega[1] > 0 and omega[2] == 0


@pytest.mark.parametrize("spec", [ChirpSpec(), SineSpec(), StepSpec()])
def test_document_round_trip(spec):
    assert from_document(to_document(spec)) == spec


def test_invalid_chirp():
    with pytest.raises(ValueError):
        ChirpSpec(f0=2.0, f1=1.0)
