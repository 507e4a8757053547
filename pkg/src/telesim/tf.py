"""Second-order continuous-time transfer functions and their analysis.

``G(s) = (b1 s + b0) / (s^2 + a1 s + a0)`` with torque in mNm as input and
angle in degrees as output.
"""
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import expm


@dataclass(frozen=True)
class TransferFunction2:
    b1: float
    b0: float
    a1: float
    a0: float
    input_unit: str = "mNm"
    output_unit: str = "deg"

    @property
    def stable(self):
        return self.a1 > 0 and self.a0 > 0

    @property
    def dc_gain(self):
        return self.b0 / self.a0 if self.a0 != 0 else math.copysign(math.inf, self.b0)

    def coefficients(self):
        return np.array([self.b1, self.b0, self.a1, self.a0])

    def state_space(self):
        """Controllable canonical realization ``(A, B, C, D)``."""
        A = np.array([[0.0, 1.0], [-self.a0, -self.a1]])
        B = np.array([[0.0], [1.0]])
        C = np.array([[self.b0, self.b1]])
        return A, B, C, np.zeros((1, 1))

    def __call__(self, s):
        s = np.asarray(s)
        return (self.b1 * s + self.b0) / (s * s + self.a1 * s + self.a0)

    def format(self, digits=2):
        def num(v):
            return f"{v:.{digits}f}"
        return f"({num(self.b1)}s + {num(self.b0)})/(s^2 + {num(self.a1)}s + {num(self.a0)})".replace("+ -", "- ")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, doc):
        return cls(**{k: doc[k] for k in ("b1", "b0", "a1", "a0")},
                   **{k: doc[k] for k in ("input_unit", "output_unit") if k in doc})

    def rescale_input(self, factor):
        """Model for an input expressed in units ``factor`` times larger."""
        return TransferFunction2(self.b1 * factor, self.b0 * factor, self.a1, self.a0,
                                 self.input_unit, self.output_unit)


def tf_analyze(tf):
    """DC gain, natural frequency, damping ratio and stability of ``tf``.

    Frequency and damping are ``None`` when ``a0 <= 0``.
    """
    out = {"dc_gain": tf.dc_gain if tf.a0 != 0 else None,
           "natural_frequency": None, "damping_ratio": None, "stable": tf.stable}
    if tf.a0 > 0:
        wn = math.sqrt(tf.a0)
        out["natural_frequency"] = wn
        out["damping_ratio"] = tf.a1 / (2 * wn)
    return out


def tf_bode(tf, omega):
    """Magnitude (dB) and unwrapped phase (deg) on the grid ``omega`` (rad/s)."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("bode frequencies must be positive")
    resp = tf(1j * omega)
    mag = 20 * np.log10(np.abs(resp))
    phase = np.degrees(np.unwrap(np.angle(resp)))
    return mag, phase


def default_bode_grid(n=200, lo=0.05, hi=100.0):
    return np.logspace(np.log10(lo), np.log10(hi), n)


def tf_step(tf, horizon, dt):
    """Response to a 1 mNm step applied at t = 0, from rest.

    Integrates the canonical state-space realization with its exact
    zero-order-hold transition matrix, which is exact for a step input.
    """
    if not tf.stable:
        raise ValueError("step response requested for an unstable transfer function")
    A, B, C, _ = tf.state_space()
    n = int(round(horizon / dt))
    M = expm(np.block([[A, B], [np.zeros((1, 3))]]) * dt)
    Ad, Bd = M[:2, :2], M[:2, 2]
    x = np.zeros(2)
    y = np.empty(n + 1)
    t = np.arange(n + 1) * dt
    c = C[0]
    for k in range(n + 1):
        y[k] = c @ x
        x = Ad @ x + Bd
    return t, y
