"""Transmission x environment sweep, ordinal findings and report rendering."""
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import TRANSMISSIONS, RunConfig
from .excitation import ChirpSpec, cycle_bounds
from .plant import SimulationDiverged
from .sysid import UnidentifiableData, run_identification

SWEEP_ENVIRONMENTS = ("freespace", "spring")
FIT_THRESHOLD = 99.0
EM_MASKING_MAX_GAP = 0.10
RIGID_MIN_GAP = 1.00


def tracking_ratio(log, t_start, t_end):
    """Peak follower angle over peak leader angle within ``[t_start, t_end]``."""
    sel = (log.time >= t_start) & (log.time <= t_end)
    return float(np.max(np.abs(log.theta_f[sel])) / np.max(np.abs(log.theta_l[sel])))


def dc_gain_gap(freespace_gain, spring_gain):
    """Relative DC-gain difference, referenced to the spring cell.

    An undefined gain (``a0 == 0``) counts as an infinite gap.
    """
    if freespace_gain is None or spring_gain is None or spring_gain == 0:
        return math.inf
    return abs(freespace_gain - spring_gain) / abs(spring_gain)


def _run_cell(args):
    run, kind, env = args
    cfg = run.plant.replace(transmission_kind=kind, environment_kind=env)
    cell = {"transmission": kind, "environment": env}
    try:
        result, est, _ = run_identification(cfg, run.excitation, run.ident, return_logs=True)
    except (SimulationDiverged, UnidentifiableData, ValueError, np.linalg.LinAlgError) as exc:
        cell.update(status="failed", error=str(exc))
        return cell
    cell.update(status="ok", result=result.to_dict())
    if isinstance(run.excitation, ChirpSpec):
        first, last = cycle_bounds(run.excitation, 0), cycle_bounds(run.excitation, -1)
        cell["tracking_ratio_first_cycle"] = tracking_ratio(est, *first)
        cell["tracking_ratio_last_cycle"] = tracking_ratio(est, *last)
    return cell


@dataclass
class SweepReport:
    cells: list
    findings: list = field(default_factory=list)
    settings: dict = field(default_factory=dict)

    def cell(self, kind, env):
        for c in self.cells:
            if c["transmission"] == kind and c["environment"] == env:
                return c
        return None

    @property
    def failed(self):
        return [c for c in self.cells if c["status"] != "ok"]

    def to_dict(self):
        return _finite({"settings": self.settings, "cells": self.cells, "findings": self.findings})

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    def to_markdown(self):
        lines = ["# Transfer functions at the leader-operator interface", "",
                 "Input: operator torque (mNm). Output: leader angle (deg). "
                 "Fit is the validation-run NRMSE fit in percent.", ""]
        if self.settings.get("quantize_encoders"):
            lines += ["Encoder quantization: enabled.", ""]
        if self.settings.get("noise_std"):
            lines += [f"Measurement noise std: {self.settings['noise_std']}.", ""]
        lines += ["| Transmission | FreeSpace | Virtual Spring |", "|---|---|---|"]
        kinds = [k for k in TRANSMISSIONS if any(c["transmission"] == k for c in self.cells)]
        for kind in kinds:
            row = [kind.capitalize()]
            for env in SWEEP_ENVIRONMENTS:
                c = self.cell(kind, env)
                if c is None:
                    row.append("-")
                elif c["status"] != "ok":
                    row.append(f"failed: {c['error']}")
                else:
                    r = c["result"]
                    row.append(f"{r['formatted']} (fit {r['fit_validation_pct']:.2f}%)")
            lines.append("| " + " | ".join(row) + " |")
        lines += ["", "## Findings", ""]
        for f in self.findings:
            mark = {True: "PASS", False: "FAIL", None: "n/a"}[f["passed"]]
            lines.append(f"- **{mark}** {f['name']}: {f['detail']}")
        return "\n".join(lines) + "\n"


def _finite(obj):
    """Replace non-finite floats by None so the JSON stays strict."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _gain(cell):
    if cell is None or cell["status"] != "ok":
        return None, False
    return cell["result"]["dc_gain_deg_per_mNm"], True


def evaluate_findings(report):
    """Ordinal checks of the sweep against the expected qualitative behaviour."""
    findings = []

    ok = [c for c in report.cells if c["status"] == "ok"]
    if ok:
        worst = min(c["result"]["fit_validation_pct"] for c in ok)
        below = [f"{c['transmission']}:{c['environment']}" for c in ok
                 if c["result"]["fit_validation_pct"] < FIT_THRESHOLD]
        findings.append({"name": "fit_quality", "passed": not below and not report.failed,
                         "value": worst,
                         "detail": f"minimum validation fit {worst:.2f}% (threshold {FIT_THRESHOLD}%)"
                                   + (f"; below threshold: {', '.join(below)}" if below else "")})

    for name, kind, cmp, limit in (("em_masking", "electromechanical", "<", EM_MASKING_MAX_GAP),
                                   ("rigid_contrast", "rigid", ">", RIGID_MIN_GAP)):
        g_fs, ok_fs = _gain(report.cell(kind, "freespace"))
        g_sp, ok_sp = _gain(report.cell(kind, "spring"))
        if not (ok_fs and ok_sp):
            findings.append({"name": name, "passed": None, "value": None,
                             "detail": f"{kind} freespace/spring cells not both available"})
            continue
        gap = dc_gain_gap(g_fs, g_sp)
        passed = gap < limit if cmp == "<" else gap > limit
        findings.append({"name": name, "passed": passed, "value": gap,
                         "detail": f"{kind} freespace vs spring DC-gain gap {gap:.1%} (required {cmp} {limit:.0%})"})

    c = report.cell("damped", "spring")
    if c is not None and c["status"] == "ok" and "tracking_ratio_first_cycle" in c:
        lo, hi = c["tracking_ratio_first_cycle"], c["tracking_ratio_last_cycle"]
        findings.append({"name": "damped_tracking", "passed": hi > lo, "value": [lo, hi],
                         "detail": f"damped spring follower/leader ratio {lo:.3f} (first cycle) -> "
                                   f"{hi:.3f} (last cycle)"})
    else:
        findings.append({"name": "damped_tracking", "passed": None, "value": None,
                         "detail": "damped spring chirp cell not available"})
    return findings


def run_sweep(run=None, only=None, workers=1):
    """Identify every transmission x environment cell.

    ``only`` restricts to a list of ``(kind, env)`` pairs. Cells are always
    reported in the canonical order, whatever ``workers`` is.
    """
    run = run or RunConfig()
    pairs = [(k, e) for k in TRANSMISSIONS for e in SWEEP_ENVIRONMENTS]
    if only:
        wanted = set(only)
        unknown = wanted - set(pairs)
        if unknown:
            raise ValueError(f"unknown sweep cell(s): {sorted(unknown)}")
        pairs = [p for p in pairs if p in wanted]
    jobs = [(run, k, e) for k, e in pairs]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            cells = list(pool.map(_run_cell, jobs))
    else:
        cells = [_run_cell(j) for j in jobs]
    noise = {}
    if run.plant.angle_noise_std > 0:
        noise["angle_deg"] = math.degrees(run.plant.angle_noise_std)
    if run.plant.torque_noise_std > 0:
        noise["torque_mNm"] = run.plant.torque_noise_std * 1000
    settings = {"seed": run.plant.seed, "quantize_encoders": run.plant.quantize_encoders,
                "noise_std": noise, "refine": run.ident.refine}
    report = SweepReport(cells, settings=settings)
    report.findings = evaluate_findings(report)
    return report
