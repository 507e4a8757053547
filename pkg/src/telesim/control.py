"""Sampled bilateral PD coupling and virtual-environment rendering.

Both run once per control tick on sensed values and their outputs are held
(zero-order hold) until the next tick.
"""
import math
from dataclasses import dataclass

G = 9.80665


@dataclass(frozen=True)
class PdGains:
    kp: float = 0.05  # N*m/rad
    kd: float = 0.05  # N*m*s/rad

    def __post_init__(self):
        if self.kp < 0 or self.kd < 0:
            raise ValueError("PD gains must be non-negative")


@dataclass(frozen=True)
class EnvironmentLaw:
    kind: str = "freespace"
    stiffness: float = 0.0  # N*m/rad
    damping: float = 0.0  # N*m*s/rad
    inertia: float = 0.0  # kg*m^2
    mass: float = 0.0  # kg, pendulum bob
    length: float = 0.0  # m, pendulum arm
    torque_limit: float = 0.467  # N*m

    @classmethod
    def from_config(cls, cfg):
        return cls(kind=cfg.environment_kind, stiffness=cfg.environment_stiffness,
                   damping=cfg.environment_damping, inertia=cfg.environment_inertia,
                   mass=cfg.pendulum_mass, length=cfg.pendulum_length,
                   torque_limit=cfg.environment_torque_limit)


def pd_bilateral(theta_l, omega_l, theta_f, omega_f, gains):
    """Position-position PD torques ``(T_l, T_f)`` for leader and follower motors.

    ``T_l = kp (theta_f - theta_l) + kd (omega_f - omega_l)`` and ``T_f`` is its
    exact negation.
    """
    t_l = gains.kp * (theta_f - theta_l) + gains.kd * (omega_f - omega_l)
    return t_l, -t_l


def clamp(value, limit):
    if limit is None:
        return value
    return min(max(value, -limit), limit)


def render_environment(law, theta_f, omega_f, alpha_f=0.0):
    """Torque the environment motor applies to the follower (N*m), clamped.

    ``alpha_f`` is only used by the inertia law, which needs an acceleration
    estimate.
    """
    kind = law.kind
    if kind == "freespace":
        demand = 0.0
    elif kind == "spring":
        demand = -law.stiffness * theta_f
    elif kind == "damper":
        demand = -law.damping * omega_f
    elif kind == "inertia":
        demand = -law.inertia * alpha_f
    elif kind == "pendulum":
        demand = -law.mass * G * law.length * math.sin(theta_f)
    else:
        raise ValueError(f"unknown environment kind {kind!r}")
    return clamp(demand, law.torque_limit)
