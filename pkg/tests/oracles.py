"""Reference data generated independently of the package's own simulators."""
import numpy as np
from scipy.integrate import solve_ivp


def chirp_torque(amplitude=100.0, f0=0.1, f1=2.0, duration=20.0):
    rate = (f1 - f0) / duration
    return lambda t: amplitude * np.sin(2 * np.pi * (f0 * t + 0.5 * rate * t * t))


def lti_response(coeffs, u, duration=20.0, rate=1000.0):
    """Sampled output of (b1 s + b0)/(s^2 + a1 s + a0) driven by the continuous ``u(t)`` from rest."""
    b1, b0, a1, a0 = coeffs
    t = np.arange(int(round(duration * rate)) + 1) / rate

    def rhs(time, x):
        return [x[1], -a0 * x[0] - a1 * x[1] + u(time)]

    sol = solve_ivp(rhs, (0, duration), [0.0, 0.0], method="DOP853", t_eval=t, rtol=1e-11, atol=1e-12)
    return t, u(t), b0 * sol.y[0] + b1 * sol.y[1]
