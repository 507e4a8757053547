"""Analytic leader trajectories with exact first and second derivatives.

Every trajectory is a callable ``traj(t) -> (theta, omega, alpha)`` in
radians, rad/s and rad/s**2 that accepts scalars or numpy arrays. Amplitudes
are given in degrees at the boundary.
"""
from dataclasses import dataclass

import numpy as np

from .units import RAD_PER_DEG

KINDS = ("chirp", "sine", "step")


@dataclass(frozen=True)
class ChirpSpec:
    """Linear-frequency sine sweep ``A sin(phi(t))``.

    ``f0 == f1`` degenerates to a constant-frequency sine.
    """

    amplitude_deg: float = 90.0
    f0: float = 0.1
    f1: float = 2.0
    duration: float = 20.0

    def __post_init__(self):
        if not (np.isfinite(self.amplitude_deg) and self.amplitude_deg > 0):
            raise ValueError("chirp amplitude must be positive")
        if not (0 < self.f0 <= self.f1):
            raise ValueError("chirp frequencies must satisfy 0 < f0 <= f1")
        if not (np.isfinite(self.duration) and self.duration > 0):
            raise ValueError("chirp duration must be positive")

    @property
    def sweep_rate(self):
        """Frequency slope in Hz/s."""
        return (self.f1 - self.f0) / self.duration

    def phase(self, t):
        t = np.asarray(t, dtype=float)
        return 2 * np.pi * (self.f0 * t + 0.5 * self.sweep_rate * t**2)

    def frequency(self, t):
        """Instantaneous frequency in Hz."""
        return self.f0 + self.sweep_rate * np.asarray(t, dtype=float)

    def __call__(self, t):
        return chirp_eval(self, t)


@dataclass(frozen=True)
class SineSpec:
    amplitude_deg: float = 90.0
    frequency: float = 1.0
    duration: float = 20.0

    def __call__(self, t):
        t = _check_time(t, self.duration)
        a = self.amplitude_deg * RAD_PER_DEG
        w = 2 * np.pi * self.frequency
        return a * np.sin(w * t), a * w * np.cos(w * t), -a * w**2 * np.sin(w * t)


@dataclass(frozen=True)
class StepSpec:
    """Smooth step to ``amplitude_deg`` using a quintic blend.

    The quintic keeps acceleration continuous, so a kinematically driven
    leader never sees an impulse.
    """

    amplitude_deg: float = 10.0
    start: float = 0.0
    rise_time: float = 0.1
    duration: float = 5.0

    def __call__(self, t):
        t = _check_time(t, self.duration)
        a = self.amplitude_deg * RAD_PER_DEG
        s = np.clip((t - self.start) / self.rise_time, 0.0, 1.0)
        inside = (t > self.start) & (t < self.start + self.rise_time)
        pos = a * (10 * s**3 - 15 * s**4 + 6 * s**5)
        vel = np.where(inside, a * (30 * s**2 - 60 * s**3 + 30 * s**4) / self.rise_time, 0.0)
        acc = np.where(inside, a * (60 * s - 180 * s**2 + 120 * s**3) / self.rise_time**2, 0.0)
        return pos, vel, acc


def _check_time(t, duration):
    arr = np.asarray(t, dtype=float)
    # small slack so that k/rate grids ending exactly at T are accepted
    if np.any(arr < -1e-12) or np.any(arr > duration * (1 + 1e-12) + 1e-12):
        raise ValueError(f"time outside [0, {duration}]")
    return arr


def chirp_eval(spec, t):
    """Angle, angular velocity and acceleration of the chirp at ``t`` (rad)."""
    t = _check_time(t, spec.duration)
    a = spec.amplitude_deg * RAD_PER_DEG
    phi = spec.phase(t)
    dphi = 2 * np.pi * spec.frequency(t)
    ddphi = 2 * np.pi * spec.sweep_rate
    s, c = np.sin(phi), np.cos(phi)
    return a * s, a * c * dphi, a * (c * ddphi - s * dphi**2)


def protocol_two_chirps(spec):
    """Estimation and validation trajectories for one identification.

    Both runs replay the same sweep. Any difference between the resulting
    logs comes only from independently seeded sensor noise.
    """
    return spec, spec


def cycle_bounds(spec, cycle):
    """Start/end time of full chirp cycle ``cycle`` (0-based, phase 2*pi*k)."""
    def time_at_phase(cycles):
        if spec.sweep_rate == 0:
            return cycles / spec.f0
        # solve f0 t + r t^2 / 2 = cycles for t >= 0
        r = spec.sweep_rate
        return (-spec.f0 + np.sqrt(spec.f0**2 + 2 * r * cycles)) / r

    total = spec.f0 * spec.duration + 0.5 * spec.sweep_rate * spec.duration**2
    n_full = int(np.floor(total + 1e-9))
    if cycle < 0:
        cycle += n_full
    if not 0 <= cycle < n_full:
        raise IndexError(f"chirp has {n_full} full cycles")
    return time_at_phase(cycle), min(time_at_phase(cycle + 1), spec.duration)


def from_document(doc):
    """Build an excitation spec from the ``excitation`` block of a config."""
    doc = dict(doc or {})
    kind = doc.pop("kind", "chirp")
    if kind == "chirp":
        keys = {"amplitude_deg": "amplitude_deg", "f0_hz": "f0", "f1_hz": "f1", "duration_s": "duration"}
        cls = ChirpSpec
    elif kind == "sine":
        keys = {"amplitude_deg": "amplitude_deg", "frequency_hz": "frequency", "duration_s": "duration"}
        cls = SineSpec
    elif kind == "step":
        keys = {"amplitude_deg": "amplitude_deg", "start_s": "start", "rise_time_s": "rise_time",
                "duration_s": "duration"}
        cls = StepSpec
    else:
        raise ValueError(f"excitation.kind: unknown kind {kind!r}")
    unknown = sorted(set(doc) - set(keys))
    if unknown:
        raise ValueError(f"excitation: unknown field(s) {', '.join(unknown)}")
    return cls(**{keys[k]: float(v) for k, v in doc.items()})


def to_document(spec):
    if isinstance(spec, ChirpSpec):
        return {"kind": "chirp", "amplitude_deg": spec.amplitude_deg, "f0_hz": spec.f0,
                "f1_hz": spec.f1, "duration_s": spec.duration}
    if isinstance(spec, SineSpec):
        return {"kind": "sine", "amplitude_deg": spec.amplitude_deg,
                "frequency_hz": spec.frequency, "duration_s": spec.duration}
    return {"kind": "step", "amplitude_deg": spec.amplitude_deg, "start_s": spec.start,
            "rise_time_s": spec.rise_time, "duration_s": spec.duration}
