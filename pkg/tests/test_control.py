import math

import pytest
from hypothesis import given, strategies as st

from telesim.control import EnvironmentLaw, PdGains, clamp, pd_bilateral, render_environment

GAINS = PdGains(0.05, 0.05)
SPRING = EnvironmentLaw("spring", stiffness=math.degrees(1e-3))  # 1 mNm/deg


def test_zero_error_zero_torque():
    assert pd_bilateral(0.3, 1.0, 0.3, 1.0, GAINS) == (0.0, -0.0)


def test_position_error():
    t_l, t_f = pd_bilateral(0.0, 0.0, 0.1, 0.0, GAINS)
    assert t_l * 1e3 == pytest.approx(5.0)
    assert t_f * 1e3 == pytest.approx(-5.0)


def test_velocity_error():
    t_l, _ = pd_bilateral(0.0, 0.0, 0.0, 2.0, GAINS)
    assert t_l * 1e3 == pytest.approx(100.0)


angles = st.floats(-10, 10)


@given(angles, angles, angles, angles)
def test_follower_torque_is_exact_negation(a, b, c, d):
    t_l, t_f = pd_bilateral(a, b, c, d, GAINS)
    assert t_f == -t_l


def test_negative_gains_rejected():
    with pytest.raises(ValueError):
        PdGains(-1.0, 0.0)


def test_spring_at_30_degrees():
    assert render_environment(SPRING, math.radians(30), 0.0) * 1e3 == pytest.approx(-30.0)


def test_spring_clamped():
    assert render_environment(SPRING, math.radians(500), 0.0) * 1e3 == pytest.approx(-467.0)


@given(angles, angles)
def test_freespace_is_zero(theta, omega):
    assert render_environment(EnvironmentLaw("freespace"), theta, omega) == 0.0


@given(st.sampled_from(["spring", "damper", "inertia", "pendulum"]), angles, angles, angles)
def test_all_laws_respect_torque_limit(kind, theta, omega, alpha):
    law = EnvironmentLaw(kind, stiffness=5.0, damping=5.0, inertia=5.0, mass=1.0, length=1.0)
    assert abs(render_environment(law, theta, omega, alpha)) <= law.torque_limit


def test_other_laws():
    assert render_environment(EnvironmentLaw("damper", damping=0.01), 0.0, 2.0) == pytest.approx(-0.02)
    assert render_environment(EnvironmentLaw("inertia", inertia=1e-3), 0.0, 0.0, 10.0) == pytest.approx(-0.01)
    law = EnvironmentLaw("pendulum", mass=0.1, length=0.1)
    assert render_environment(law, math.pi / 2, 0.0) == pytest.approx(-0.1 * 9.80665 * 0.1)


def test_clamp():
    assert clamp(1.0, None) == 1.0
    assert clamp(-1.0, 0.5) == -0.5
