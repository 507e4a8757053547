"""Frequency and step responses of the hardware reference models.

Writes nothing; prints a few landmarks of each curve.
"""
# %%
import numpy as np

from telesim.tf import TransferFunction2, default_bode_grid, tf_analyze, tf_bode, tf_step

models = {
    "rigid / spring": TransferFunction2(-2.04, 163.26, 4.19, 195.11),
    "EM / freespace": TransferFunction2(-2.7, 174.31, 6.08, 48.88),
    "EM / spring": TransferFunction2(-2.82, 172.09, 6.33, 48.55),
}

# %% Bode landmarks on the default 0.05-100 rad/s grid
omega = default_bode_grid()
for name, tf in models.items():
    mag, phase = tf_bode(tf, omega)
    peak = np.argmax(mag)
    print(f"{name}: {tf.format()}  peak {mag[peak]:.1f} dB at {omega[peak]:.2f} rad/s, "
          f"phase at 100 rad/s {phase[-1]:.1f} deg")

# %% Step responses to a 1 mNm step
for name, tf in models.items():
    info = tf_analyze(tf)
    horizon = 10 / (info["damping_ratio"] * info["natural_frequency"])
    t, y = tf_step(tf, horizon, 1e-3)
    print(f"{name}: overshoot {100 * (y.max() / y[-1] - 1):.1f}%, final {y[-1]:.4f} "
          f"(b0/a0 = {info['dc_gain']:.4f}) deg")

# %% The two EM models are nearly the same curve, the masking effect the
# PD damping produces on hardware.
