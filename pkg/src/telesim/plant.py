"""Leader-transmission-follower dynamics, fixed-step RK4 and simulated sensing.

Two-inertia lumped model::

    J_l w_l' = T_op - b_l w_l - tau + T_l_cmd
    J_f w_f' = tau - b_f w_f + T_env + T_f_cmd

with ``tau`` the transmission torque on the follower. The rigid transmission
is a kinematic constraint: one body with ``J_l + J_f`` and ``b_l + b_f``.
Controller and environment torques are computed at the control rate from
sensed values and held over the period; the integrator takes
``cfg.decimation`` RK4 substeps per period.
"""
import csv
import io
import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .control import EnvironmentLaw, PdGains, clamp, pd_bilateral, render_environment
from .units import DEG_PER_RAD, MNM_PER_NM

DIVERGENCE_LIMIT = 1e6


class SimulationDiverged(RuntimeError):
    def __init__(self, time):
        self.time = time
        super().__init__(f"simulation diverged at t = {time:.6g} s")


@dataclass(frozen=True)
class TransmissionLaw:
    kind: str
    k_e: float = 0.0  # N*m/rad
    c_ve: float = 0.0  # N*m*s/rad, in parallel with the elastic rod
    c_d: float = 0.0  # N*m*s/rad

    @classmethod
    def from_config(cls, cfg):
        kind = cfg.transmission_kind
        k_e = cfg.elastic_stiffness if kind in ("elastic", "combined") else 0.0
        c_ve = cfg.elastic_parallel_damping if kind in ("elastic", "combined") else 0.0
        c_d = cfg.damper_coefficient if kind in ("damped", "combined") else 0.0
        return cls(kind, k_e, c_ve, c_d)

    @property
    def stiffness(self):
        return self.k_e

    @property
    def damping(self):
        return self.c_ve + self.c_d


def transmission_torque(law, dtheta, domega):
    """Torque on the follower for leader-minus-follower angle/velocity differences.

    The leader receives the reaction ``-tau``. Electromechanical coupling is
    carried by the motors, so the mechanical torque is zero.
    """
    if law.kind == "rigid":
        raise ValueError("rigid transmission is a constraint, not a force law")
    if law.kind == "electromechanical":
        return 0.0 * dtheta
    return law.k_e * dtheta + (law.c_ve + law.c_d) * domega


@dataclass(frozen=True)
class PlantState:
    theta_l: float = 0.0
    omega_l: float = 0.0
    theta_f: float = 0.0
    omega_f: float = 0.0
    T_l_cmd: float = 0.0
    T_f_cmd: float = 0.0
    T_env_hold: float = 0.0
    prev_theta_l: float = 0.0  # last sensed angles, for backward differences
    prev_theta_f: float = 0.0
    prev_omega_f: float = 0.0
    vel_l_filt: float = 0.0
    vel_f_filt: float = 0.0
    time: float = 0.0


@dataclass(frozen=True)
class Sample:
    """One sensor reading (SI units)."""

    theta_l: float
    theta_f: float
    omega_l: float
    omega_f: float
    alpha_f: float = 0.0


COLUMNS = ("time", "theta_l", "theta_f", "omega_l", "omega_f", "T_op", "T_env", "T_l_cmd", "T_f_cmd")
UNITS = ("s", "deg", "deg", "deg_s", "deg_s", "mNm", "mNm", "mNm", "mNm")


@dataclass
class TimeSeriesLog:
    """Control-rate record. Angles in deg, velocities in deg/s, torques in mNm."""

    time: np.ndarray
    theta_l: np.ndarray
    theta_f: np.ndarray
    omega_l: np.ndarray
    omega_f: np.ndarray
    T_op: np.ndarray
    T_env: np.ndarray
    T_l_cmd: np.ndarray
    T_f_cmd: np.ndarray

    def __len__(self):
        return len(self.time)

    @property
    def dt(self):
        return float(self.time[1] - self.time[0])

    def as_array(self):
        return np.column_stack([getattr(self, c) for c in COLUMNS])

    def __eq__(self, other):
        if not isinstance(other, TimeSeriesLog):
            return NotImplemented
        return all(np.array_equal(getattr(self, c), getattr(other, c)) for c in COLUMNS)

    def csv_text(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"{c}_{u}" for c, u in zip(COLUMNS, UNITS)])
        for row in self.as_array():
            writer.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(*(data[:, i].copy() for i in range(len(COLUMNS))))


def derivatives(state, T_op, cfg, law=None):
    """Time derivatives ``(theta_l', omega_l', theta_f', omega_f')``.

    Held torques are taken from ``state``. In rigid mode the follower is
    slaved to the leader and both accelerations are equal.
    """
    law = law or TransmissionLaw.from_config(cfg)
    s = state
    if law.kind == "rigid":
        inertia = cfg.leader_inertia + cfg.follower_inertia
        alpha = (T_op - (cfg.leader_viscous + cfg.follower_viscous) * s.omega_l + s.T_env_hold) / inertia
        return s.omega_l, alpha, s.omega_l, alpha
    tau = 0.0 if law.kind == "electromechanical" else transmission_torque(
        law, s.theta_l - s.theta_f, s.omega_l - s.omega_f)
    alpha_l = (T_op - cfg.leader_viscous * s.omega_l - tau + s.T_l_cmd) / cfg.leader_inertia
    alpha_f = (tau - cfg.follower_viscous * s.omega_f + s.T_env_hold + s.T_f_cmd) / cfg.follower_inertia
    return s.omega_l, alpha_l, s.omega_f, alpha_f


def step(state, cfg, T_op, law=None):
    """Advance ``state`` by one integrator step with classic RK4.

    ``T_op`` is the operator torque (N*m), a constant or a callable of time.
    Held controller and environment torques stay fixed over the step.
    """
    law = law or TransmissionLaw.from_config(cfg)
    h = cfg.integrator_step
    t0 = state.time
    torque = T_op if callable(T_op) else (lambda t: T_op)
    x0 = np.array([state.theta_l, state.omega_l, state.theta_f, state.omega_f])

    def f(t, x):
        s = dataclasses.replace(state, theta_l=x[0], omega_l=x[1], theta_f=x[2], omega_f=x[3])
        return np.array(derivatives(s, torque(t), cfg, law))

    k1 = f(t0, x0)
    k2 = f(t0 + h / 2, x0 + h / 2 * k1)
    k3 = f(t0 + h / 2, x0 + h / 2 * k2)
    k4 = f(t0 + h, x0 + h * k3)
    x = x0 + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    if law.kind == "rigid":
        x[2], x[3] = x[0], x[1]
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > DIVERGENCE_LIMIT:
        raise SimulationDiverged(t0 + h)
    return dataclasses.replace(state, theta_l=x[0], omega_l=x[1], theta_f=x[2], omega_f=x[3], time=t0 + h)


def quantize(theta, cfg):
    """Floor an angle onto the encoder grid of ``2*pi/counts`` rad."""
    res = 2 * math.pi / cfg.encoder_counts_per_rev
    return math.floor(theta / res) * res


def _lowpass_alpha(cfg):
    if cfg.pd_velocity_cutoff is None:
        return 1.0
    return 1.0 - math.exp(-2 * math.pi * cfg.pd_velocity_cutoff / cfg.control_rate)


def measure(state, cfg, noise=None):
    """Sensor sample for the current state.

    Angles are optionally quantized to the encoder grid and perturbed by
    ``noise`` (a pair of standard-normal draws, scaled by the configured
    angle std). Velocities are backward differences against the previous
    sensed angles stored in ``state``.
    """
    th_l, th_f = state.theta_l, state.theta_f
    if cfg.quantize_encoders:
        th_l, th_f = quantize(th_l, cfg), quantize(th_f, cfg)
    if noise is not None and cfg.angle_noise_std > 0:
        th_l += cfg.angle_noise_std * noise[0]
        th_f += cfg.angle_noise_std * noise[1]
    w_l = (th_l - state.prev_theta_l) * cfg.control_rate
    w_f = (th_f - state.prev_theta_f) * cfg.control_rate
    return Sample(th_l, th_f, w_l, w_f, (w_f - state.prev_omega_f) * cfg.control_rate)


def control_update(state, cfg, sample):
    """Run one control tick: filter velocities, compute and hold new torques."""
    a = _lowpass_alpha(cfg)
    v_l = state.vel_l_filt + a * (sample.omega_l - state.vel_l_filt)
    v_f = state.vel_f_filt + a * (sample.omega_f - state.vel_f_filt)
    t_l = t_f = 0.0
    if cfg.transmission_kind == "electromechanical":
        t_l, t_f = pd_bilateral(sample.theta_l, v_l, sample.theta_f, v_f, PdGains(cfg.kp, cfg.kd))
        t_l, t_f = clamp(t_l, cfg.leader_torque_limit), clamp(t_f, cfg.follower_torque_limit)
    t_env = render_environment(EnvironmentLaw.from_config(cfg), sample.theta_f, sample.omega_f, sample.alpha_f)
    return dataclasses.replace(state, T_l_cmd=t_l, T_f_cmd=t_f, T_env_hold=t_env,
                               prev_theta_l=sample.theta_l, prev_theta_f=sample.theta_f,
                               prev_omega_f=sample.omega_f, vel_l_filt=v_l, vel_f_filt=v_f)


def _n_ticks(cfg, duration):
    n = duration * cfg.control_rate
    if abs(n - round(n)) > 1e-9 * max(n, 1):
        raise ValueError("duration must be a whole number of control periods")
    return int(round(n))


def _noise_draws(cfg, rng, n):
    if rng is None or not cfg.noisy:
        return None, None
    return rng.standard_normal((n, 2)), rng.standard_normal((n, 2))


def _to_log(cols):
    arr = {k: np.asarray(v, dtype=float) for k, v in cols.items()}
    for k in ("theta_l", "theta_f", "omega_l", "omega_f"):
        arr[k] = arr[k] * DEG_PER_RAD
    for k in ("T_op", "T_env", "T_l_cmd", "T_f_cmd"):
        arr[k] = arr[k] * MNM_PER_NM
    return TimeSeriesLog(**arr)


def simulate_torque(cfg, torque, duration, state=None, rng=None):
    """Simulate with the operator torque prescribed (N*m, constant or callable).

    General-purpose but slow: every substep goes through :func:`step`.
    """
    law = TransmissionLaw.from_config(cfg)
    state = state or PlantState()
    state = dataclasses.replace(state, prev_theta_l=state.theta_l, prev_theta_f=state.theta_f)
    n = _n_ticks(cfg, duration)
    ang_noise, trq_noise = _noise_draws(cfg, rng, n + 1)
    torque_fn = torque if callable(torque) else (lambda t: torque)
    cols = {c: [] for c in COLUMNS}
    for k in range(n + 1):
        sample = measure(state, cfg, None if ang_noise is None else ang_noise[k])
        state = control_update(state, cfg, sample)
        t_op = torque_fn(state.time)
        t_env = state.T_env_hold
        if trq_noise is not None:
            t_op += cfg.torque_noise_std * trq_noise[k, 0]
            t_env += cfg.torque_noise_std * trq_noise[k, 1]
        for c, v in zip(COLUMNS, (k / cfg.control_rate, sample.theta_l, sample.theta_f, sample.omega_l,
                                  sample.omega_f, t_op, t_env, state.T_l_cmd, state.T_f_cmd)):
            cols[c].append(v)
        if k == n:
            break
        for _ in range(cfg.decimation):
            state = step(state, cfg, torque_fn, law)
    return _to_log(cols)


@dataclass(frozen=True)
class EnergyAudit:
    """Energy book-keeping of a kinematically driven run (J)."""

    injected_work: float
    kinetic_change: float
    potential_change: float
    dissipated: float

    @property
    def residual(self):
        return self.injected_work - (self.kinetic_change + self.potential_change + self.dissipated)

    @property
    def relative_residual(self):
        scale = max(abs(self.injected_work), self.dissipated + abs(self.kinetic_change))
        return abs(self.residual) / scale


def simulate_kinematic(cfg, trajectory, duration, rng=None):
    """Simulate with the leader motion prescribed exactly by ``trajectory``.

    ``trajectory(t) -> (theta, omega, alpha)`` in SI units, vectorized over
    ``t``. The operator torque needed to impose that motion is computed from
    the leader balance ``T_op = J_l a_l + b_l w_l + tau - T_l_cmd`` and
    logged; the follower evolves dynamically.
    """
    return _run_kinematic(cfg, trajectory, duration, rng, False)[0]


def energy_audit(cfg, trajectory, duration):
    """Run a noiseless kinematic simulation with energy accumulators.

    Only meaningful for mechanical transmissions in free space, where the
    operator is the sole energy source.
    """
    return _run_kinematic(cfg.replace(angle_noise_std=0.0, torque_noise_std=0.0), trajectory,
                          duration, None, True)[1]


def _run_kinematic(cfg, trajectory, duration, rng, track_energy):
    law = TransmissionLaw.from_config(cfg)
    env = EnvironmentLaw.from_config(cfg)
    rigid = law.kind == "rigid"
    em = law.kind == "electromechanical"
    n = _n_ticks(cfg, duration)
    dec = cfg.decimation
    h = cfg.integrator_step
    rate = cfg.control_rate
    T = 1.0 / rate

    # leader trajectory at every RK4 stage time (half-step grid)
    n_half = 2 * n * dec
    t_half = np.minimum(np.arange(n_half + 1) * (h / 2), duration)
    th_arr, w_arr, a_arr = (np.broadcast_to(np.asarray(v, dtype=float), t_half.shape)
                            for v in trajectory(t_half))
    TH, W, A = th_arr.tolist(), w_arr.tolist(), a_arr.tolist()

    Jl, Jf = cfg.leader_inertia, cfg.follower_inertia
    bl, bf = cfg.leader_viscous, cfg.follower_viscous
    ke, c = law.k_e, law.damping
    gains = PdGains(cfg.kp, cfg.kd)
    quant = cfg.quantize_encoders
    res = 2 * math.pi / cfg.encoder_counts_per_rev
    lp = _lowpass_alpha(cfg)
    ang_noise, trq_noise = _noise_draws(cfg, rng, n + 1)
    ang_std, trq_std = cfg.angle_noise_std, cfg.torque_noise_std

    # follower starts co-moving with the leader
    thf, wf = TH[0], W[0]

    def sense(x):
        return math.floor(x / res) * res if quant else x

    prev_l = sense(TH[0] - W[0] * T)
    prev_f = sense(thf - wf * T)
    prev_wf = wf
    vl_filt, vf_filt = W[0], wf

    log_time = np.arange(n + 1) / rate
    out = np.empty((n + 1, 8))
    work = diss = 0.0
    ke0 = 0.5 * Jl * W[0] ** 2 + 0.5 * Jf * wf ** 2

    for k in range(n + 1):
        i0 = 2 * k * dec
        thl, wl, al = TH[i0], W[i0], A[i0]
        if rigid:
            thf, wf = thl, wl
        if not (abs(thf) < DIVERGENCE_LIMIT and abs(wf) < DIVERGENCE_LIMIT):
            raise SimulationDiverged(k * T)

        # sensing
        sl, sf = sense(thl), sense(thf)
        if ang_noise is not None and ang_std > 0:
            sl += ang_std * ang_noise[k, 0]
            sf += ang_std * ang_noise[k, 1]
        vl, vf = (sl - prev_l) * rate, (sf - prev_f) * rate
        af = (vf - prev_wf) * rate
        prev_l, prev_f, prev_wf = sl, sf, vf

        # control tick
        vl_filt += lp * (vl - vl_filt)
        vf_filt += lp * (vf - vf_filt)
        t_l = t_f = 0.0
        if em:
            t_l, t_f = pd_bilateral(sl, vl_filt, sf, vf_filt, gains)
            t_l, t_f = clamp(t_l, cfg.leader_torque_limit), clamp(t_f, cfg.follower_torque_limit)
        t_env = render_environment(env, sf, vf, af)

        if rigid:
            t_op = (Jl + Jf) * al + (bl + bf) * wl - t_env
        else:
            t_op = Jl * al + bl * wl + ke * (thl - thf) + c * (wl - wf) - t_l
        m_op, m_env = t_op, t_env
        if trq_noise is not None and trq_std > 0:
            m_op += trq_std * trq_noise[k, 0]
            m_env += trq_std * trq_noise[k, 1]
        out[k] = (sl, sf, vl, vf, m_op, m_env, t_l, t_f)
        if k == n:
            break

        if rigid:
            if track_energy:
                # work and losses of the single body, Simpson over each substep
                for j in range(dec):
                    i = i0 + 2 * j
                    p = [((Jl + Jf) * A[m] + (bl + bf) * W[m] - t_env) * W[m] for m in (i, i + 1, i + 2)]
                    d = [(bl + bf) * W[m] ** 2 for m in (i, i + 1, i + 2)]
                    work += h / 6 * (p[0] + 4 * p[1] + p[2])
                    diss += h / 6 * (d[0] + 4 * d[1] + d[2])
            continue

        u = t_env + t_f
        for j in range(dec):
            i = i0 + 2 * j
            l0, v0 = TH[i], W[i]
            l1, v1 = TH[i + 1], W[i + 1]
            l2, v2 = TH[i + 2], W[i + 2]
            k1x = wf
            k1v = (ke * (l0 - thf) + c * (v0 - wf) - bf * wf + u) / Jf
            x2, w2 = thf + 0.5 * h * k1x, wf + 0.5 * h * k1v
            k2v = (ke * (l1 - x2) + c * (v1 - w2) - bf * w2 + u) / Jf
            x3, w3 = thf + 0.5 * h * w2, wf + 0.5 * h * k2v
            k3v = (ke * (l1 - x3) + c * (v1 - w3) - bf * w3 + u) / Jf
            x4, w4 = thf + h * w3, wf + h * k3v
            k4v = (ke * (l2 - x4) + c * (v2 - w4) - bf * w4 + u) / Jf
            if track_energy:
                # operator power and dissipation at the four RK4 stages
                def rates(ml, mv, ma, x, w):
                    tau = ke * (ml - x) + c * (mv - w)
                    p = (Jl * ma + bl * mv + tau - t_l) * mv
                    return p, bl * mv * mv + bf * w * w + c * (mv - w) ** 2
                p1, d1 = rates(l0, v0, A[i], thf, wf)
                p2, d2 = rates(l1, v1, A[i + 1], x2, w2)
                p3, d3 = rates(l1, v1, A[i + 1], x3, w3)
                p4, d4 = rates(l2, v2, A[i + 2], x4, w4)
                work += h / 6 * (p1 + 2 * p2 + 2 * p3 + p4)
                diss += h / 6 * (d1 + 2 * d2 + 2 * d3 + d4)
            thf += h / 6 * (k1x + 2 * w2 + 2 * w3 + w4)
            wf += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)

    log = _to_log({"time": log_time, "theta_l": out[:, 0], "theta_f": out[:, 1], "omega_l": out[:, 2],
                   "omega_f": out[:, 3], "T_op": out[:, 4], "T_env": out[:, 5], "T_l_cmd": out[:, 6],
                   "T_f_cmd": out[:, 7]})
    audit = None
    if track_energy:
        iN = 2 * n * dec
        wl_end = W[iN]
        if rigid:
            thf, wf = TH[iN], wl_end
        ke1 = 0.5 * Jl * wl_end ** 2 + 0.5 * Jf * wf ** 2
        # rod starts unstretched because the follower starts on the leader
        pe1 = 0.5 * ke * (TH[iN] - thf) ** 2
        audit = EnergyAudit(work, ke1 - ke0, pe1, diss)
    return log, audit
