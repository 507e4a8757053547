"""Continuous-time second-order identification from torque/angle records.

Pipeline: state-variable-filter least squares for a starting point, then
Gauss-Newton output-error refinement of the simulated output. Initial
conditions of the model are nuisance parameters, eliminated by linear least
squares inside every residual evaluation (variable projection). This matters
because the chirp starts with the leader already moving.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import signal, stats
from scipy.linalg import expm

from .config import IdentOptions, noise_generator
from .plant import simulate_kinematic
from .tf import TransferFunction2, tf_analyze


class UnidentifiableData(ValueError):
    pass


class RefinementWarning(RuntimeWarning):
    pass


def nrmse_fit(y, y_hat):
    """Percent fit ``100 (1 - |y - y_hat| / |y - mean(y)|)``."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape or y.size == 0:
        raise ValueError("series must have equal, nonzero length")
    spread = np.linalg.norm(y - y.mean())
    if spread == 0:
        raise ValueError("fit is undefined for a constant series")
    return 100.0 * (1.0 - np.linalg.norm(y - y_hat) / spread)


@dataclass
class WhitenessReport:
    lags: int
    statistic: float
    threshold: float
    autocorrelations: np.ndarray
    band: float
    passed: bool

    @property
    def lags_outside_band(self):
        return int(np.sum(np.abs(self.autocorrelations) > self.band))

    def to_dict(self):
        return {"lags": self.lags, "statistic": self.statistic, "threshold": self.threshold,
                "autocorrelations": [float(r) for r in self.autocorrelations],
                "band": self.band, "lags_outside_band": self.lags_outside_band, "passed": self.passed}


def autocorrelation(x, lags):
    x = np.asarray(x, dtype=float) - np.mean(x)
    denom = x @ x
    return np.array([x[:-k] @ x[k:] / denom for k in range(1, lags + 1)])


def whiteness_test(residuals, lags=20, confidence=0.95):
    """Ljung-Box portmanteau test of residual independence.

    Passes when ``Q = N (N + 2) sum r_k^2 / (N - k)`` is below the
    chi-square quantile with ``lags`` degrees of freedom. The per-lag band
    ``z / sqrt(N)`` is reported for inspection but does not decide.
    """
    e = np.asarray(residuals, dtype=float)
    n = e.size
    if n <= 10 * lags:
        raise ValueError(f"need more than {10 * lags} residuals for {lags} lags")
    threshold = float(stats.chi2.ppf(confidence, lags))
    band = float(stats.norm.ppf(0.5 + confidence / 2) / math.sqrt(n))
    if np.ptp(e) == 0:
        return WhitenessReport(lags, 0.0, threshold, np.zeros(lags), band, True)
    r = autocorrelation(e, lags)
    k = np.arange(1, lags + 1)
    q = float(n * (n + 2) * np.sum(r**2 / (n - k)))
    return WhitenessReport(lags, q, threshold, r, band, q < threshold)


def _foh(A, B, C, D, dt):
    """First-order-hold discretization (exact for piecewise-linear input).

    Same construction as ``scipy.signal.cont2discrete(method="foh")``; the
    extra return value ``m`` maps the discrete state back to the continuous
    one, ``x_k = xi_k + m u_k``.
    """
    n = A.shape[0]
    em = np.zeros((n + 2, n + 2))
    em[:n, :n] = A * dt
    em[:n, n] = B[:, 0] * dt
    em[n, n + 1] = 1.0
    ms = expm(em)
    ad, m12, m13 = ms[:n, :n], ms[:n, n], ms[:n, n + 1]
    bd = m12 - m13 + ad @ m13
    dd = D[:, 0] + C @ m13
    return ad, bd, dd, m13


def _zero_input(ad, C, x0, n):
    """Rows ``C ad^k x0`` for k = 0..n-1, one column per output row of C."""
    den = np.poly(ad)
    num = signal.ss2tf(ad, x0.reshape(-1, 1), C, np.zeros((C.shape[0], 1)))[0]
    impulse = np.zeros(n + 1)
    impulse[0] = 1.0
    return np.column_stack([signal.lfilter(row, den, impulse)[1:] for row in num])


def lsim_foh(A, B, C, D, u, dt, x0=None):
    """Response of a single-input continuous system to sampled ``u``.

    ``u`` is linearly interpolated between samples; the state starts at
    ``x0`` (default rest). Returns one column per output.
    """
    u = np.asarray(u, dtype=float)
    ad, bd, dd, m = _foh(A, B, C, D, dt)
    num, den = signal.ss2tf(ad, bd.reshape(-1, 1), C, dd.reshape(-1, 1))
    forced = np.column_stack([signal.lfilter(row, den, u) for row in num])
    xi0 = -m * u[0] if x0 is None else np.asarray(x0, dtype=float) - m * u[0]
    return forced + _zero_input(ad, C, xi0, len(u))


def _filter_outputs(v, dt, cutoff):
    """``F v``, ``s F v`` and ``s^2 F v`` for ``F = cutoff^2 / (s + cutoff)^2``."""
    lam = cutoff
    A = np.array([[0.0, 1.0], [-lam**2, -2 * lam]])
    B = np.array([[0.0], [lam**2]])
    C = np.array([[1.0, 0.0], [0.0, 1.0], [-lam**2, -2 * lam]])
    D = np.array([[0.0], [0.0], [lam**2]])
    out = lsim_foh(A, B, C, D, v, dt)
    return out[:, 0], out[:, 1], out[:, 2]


def _svf_regression(u, y, dt, cutoff):
    fy, dfy, ddfy = _filter_outputs(y, dt, cutoff)
    fu, dfu, _ = _filter_outputs(u, dt, cutoff)
    t = np.arange(len(y)) * dt
    lam = cutoff
    # filter impulse response and its derivative carry the initial conditions
    imp = lam**2 * t * np.exp(-lam * t)
    dimp = lam**2 * (1 - lam * t) * np.exp(-lam * t)
    phi = np.column_stack([dfu, fu, -dfy, -fy, dimp, imp])
    return phi, ddfy


def fit_least_squares(u, y, dt, svf_cutoff=25.0):
    """Equation-error estimate from state-variable-filtered derivatives."""
    phi, target = _svf_regression(u, y, dt, svf_cutoff)
    scale = np.linalg.norm(phi, axis=0)
    if np.any(scale == 0) or not np.all(np.isfinite(phi)):
        raise UnidentifiableData("unidentifiable data: a regressor is identically zero")
    sv = np.linalg.svd(phi / scale, compute_uv=False)
    if sv[-1] < 1e-9 * sv[0]:
        raise UnidentifiableData("unidentifiable data: regressors are (nearly) collinear")
    theta = np.linalg.lstsq(phi / scale, target, rcond=None)[0] / scale
    b1, b0, a1, a0 = theta[:4]
    return TransferFunction2(float(b1), float(b0), float(a1), float(a0))


def simulate(tf, u, dt, y=None):
    """Output of ``tf`` driven by samples ``u`` (linearly interpolated).

    Without ``y`` the model starts at rest. With ``y`` the two initial
    states are chosen to best match ``y`` in least squares.
    """
    A, B, C, D = tf.state_space()
    u = np.asarray(u, dtype=float)
    rest = lsim_foh(A, B, C, D, u, dt)[:, 0]
    if y is None:
        return rest
    ad = _foh(A, B, C, D, dt)[0]
    basis = np.column_stack([_zero_input(ad, C, e, len(u))[:, 0] for e in np.eye(2)])
    if not (np.all(np.isfinite(basis)) and np.all(np.isfinite(rest))):
        raise FloatingPointError("model response overflowed")
    x0 = np.linalg.lstsq(basis, np.asarray(y, dtype=float) - rest, rcond=None)[0]
    return rest + basis @ x0


def _oe_residual(p, u, y, dt):
    if not np.all(np.isfinite(p)):
        return np.full_like(y, np.inf)
    try:
        with np.errstate(all="ignore"):
            return y - simulate(TransferFunction2(*p), u, dt, y)
    except (np.linalg.LinAlgError, ValueError, FloatingPointError):
        return np.full_like(y, np.inf)


@dataclass
class SecondOrderFit:
    tf: TransferFunction2
    ls_tf: TransferFunction2
    refined: bool
    refine_failed: bool = False
    iterations: int = 0
    warnings: list = field(default_factory=list)


def refine_output_error(tf0, u, y, dt, max_iter=100, tol=1e-12):
    """Damped Gauss-Newton on the simulated-output error.

    Returns ``(tf, cost, iterations, ok)``. ``ok`` is False when the
    simulated output blows up, in which case ``tf0`` is returned unchanged.
    """
    p = tf0.coefficients().astype(float)
    with np.errstate(all="ignore"):
        r = _oe_residual(p, u, y, dt)
    if not np.all(np.isfinite(r)):
        return tf0, np.inf, 0, False
    cost = r @ r
    it = 0
    for it in range(1, max_iter + 1):
        scale = max(np.max(np.abs(p)), 1.0)
        jac = np.empty((len(r), 4))
        for i in range(4):
            h = 1e-6 * max(abs(p[i]), 1e-3 * scale)
            dp = np.zeros(4)
            dp[i] = h
            with np.errstate(all="ignore"):
                jac[:, i] = (_oe_residual(p + dp, u, y, dt) - _oe_residual(p - dp, u, y, dt)) / (2 * h)
        if not np.all(np.isfinite(jac)):
            return tf0, np.inf, it, False
        delta = np.linalg.lstsq(jac, -r, rcond=None)[0]
        step = 1.0
        improved = False
        while step > 1e-6:
            trial = p + step * delta
            with np.errstate(all="ignore"):
                r_new = _oe_residual(trial, u, y, dt)
            if np.all(np.isfinite(r_new)) and r_new @ r_new < cost:
                improved = True
                break
            step /= 2
        if not improved:
            break
        gain = (cost - r_new @ r_new) / max(cost, 1e-300)
        p, r, cost = trial, r_new, r_new @ r_new
        if gain < tol or np.linalg.norm(step * delta) < 1e-12 * np.linalg.norm(p):
            break
    return TransferFunction2(*map(float, p)), float(cost), it, True


# extra SVF cutoffs (multiples of the requested one) used as refinement starts
START_CUTOFF_FACTORS = (1.0, 0.5, 2.0, 4.0)


def fit_second_order(u, y, dt, svf_cutoff=25.0, refine=True):
    """Fit ``(b1 s + b0)/(s^2 + a1 s + a0)`` from input ``u`` (mNm) to output ``y`` (deg).

    The least-squares estimate at ``svf_cutoff`` is always computed. With
    ``refine`` the output-error search is started from it and from the
    estimates at a few other cutoffs; the lowest simulated-output error wins.
    """
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    if u.shape != y.shape or u.ndim != 1:
        raise ValueError("u and y must be 1-D series of equal length")
    if u.size < 100:
        raise ValueError("need at least 100 samples")
    if not dt > 0:
        raise ValueError("dt must be positive")
    if np.ptp(u) == 0 or np.ptp(y) == 0:
        raise UnidentifiableData("unidentifiable data: constant input or output")
    ls_tf = fit_least_squares(u, y, dt, svf_cutoff)
    if not refine:
        return SecondOrderFit(ls_tf, ls_tf, refined=False)

    best = None
    for factor in START_CUTOFF_FACTORS:
        try:
            start = ls_tf if factor == 1.0 else fit_least_squares(u, y, dt, svf_cutoff * factor)
        except UnidentifiableData:
            continue
        tf, cost, iterations, ok = refine_output_error(start, u, y, dt)
        if ok and (best is None or cost < best[1]):
            best = (tf, cost, iterations)
    if best is None:
        msg = "output-error refinement diverged; keeping the least-squares estimate"
        warnings.warn(msg, RefinementWarning, stacklevel=2)
        return SecondOrderFit(ls_tf, ls_tf, refined=False, refine_failed=True, warnings=[msg])
    return SecondOrderFit(best[0], ls_tf, refined=True, iterations=best[2])


@dataclass
class IdentResult:
    tf: TransferFunction2
    fit_estimation: float
    fit_validation: float
    whiteness: WhitenessReport
    dc_gain: float | None
    natural_frequency: float | None
    damping_ratio: float | None
    stable: bool
    refined: bool = True
    refine_failed: bool = False
    ls_tf: TransferFunction2 | None = None

    def to_dict(self):
        doc = {"transfer_function": self.tf.to_dict(), "formatted": self.tf.format(),
               "fit_estimation_pct": self.fit_estimation, "fit_validation_pct": self.fit_validation,
               "whiteness": self.whiteness.to_dict(),
               "dc_gain_deg_per_mNm": self.dc_gain, "natural_frequency_rad_s": self.natural_frequency,
               "damping_ratio": self.damping_ratio, "stable": self.stable,
               "refined": self.refined, "refine_failed": self.refine_failed}
        if self.ls_tf is not None:
            doc["least_squares_transfer_function"] = self.ls_tf.to_dict()
        return doc


def identify_logs(est_log, val_log, options=IdentOptions()):
    """Fit on the estimation log and score on the validation log.

    Input channel is the operator torque (mNm); output is the leader angle (deg).
    """
    dt = est_log.dt
    fit = fit_second_order(est_log.T_op, est_log.theta_l, dt, options.svf_cutoff, options.refine)
    y_est = simulate(fit.tf, est_log.T_op, dt, est_log.theta_l)
    y_val = simulate(fit.tf, val_log.T_op, val_log.dt, val_log.theta_l)
    whiteness = whiteness_test(val_log.theta_l - y_val, options.whiteness_lags, options.confidence)
    summary = tf_analyze(fit.tf)
    return IdentResult(
        tf=fit.tf,
        fit_estimation=float(nrmse_fit(est_log.theta_l, y_est)),
        fit_validation=float(nrmse_fit(val_log.theta_l, y_val)),
        whiteness=whiteness,
        dc_gain=summary["dc_gain"],
        natural_frequency=summary["natural_frequency"],
        damping_ratio=summary["damping_ratio"],
        stable=summary["stable"],
        refined=fit.refined,
        refine_failed=fit.refine_failed,
        ls_tf=fit.ls_tf,
    )


def run_identification(cfg, spec, options=IdentOptions(), return_logs=False):
    """Two-chirp protocol: simulate estimation and validation runs, fit, score.

    The runs share the excitation and differ only in their seeded noise
    streams (identical when the configuration is noiseless).
    """
    est = simulate_kinematic(cfg, spec, spec.duration, noise_generator(cfg.seed, 0))
    val = simulate_kinematic(cfg, spec, spec.duration, noise_generator(cfg.seed, 1))
    result = identify_logs(est, val, options)
    if return_logs:
        return result, est, val
    return result
