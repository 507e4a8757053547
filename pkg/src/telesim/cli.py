"""``telesim`` command line.

Exit codes: 0 success, 2 config error, 3 I/O error, 4 numerical failure.
Every command computes all of its outputs before touching the output
directory, then writes each file through a temporary file and a rename, so a
failed run never leaves partial files behind.
"""
import argparse
import json
import math
import os
import sys
import tempfile
import warnings

import numpy as np

from . import config as config_mod
from .config import ConfigError, RunConfig
from .plant import SimulationDiverged, simulate_kinematic
from .report import run_sweep
from .sysid import UnidentifiableData, run_identification
from .tf import TransferFunction2, default_bode_grid, tf_analyze, tf_bode, tf_step

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _load_run(args):
    if args.config is None:
        run = RunConfig()
    else:
        try:
            run = config_mod.load_config(args.config)
        except FileNotFoundError as exc:
            raise CliError(f"cannot read config: {exc}", EXIT_IO)
        except OSError as exc:
            raise CliError(f"cannot read config: {exc}", EXIT_IO)
    plant, ident = run.plant, run.ident
    if args.seed is not None:
        plant = plant.replace(seed=args.seed)
    if args.quantize:
        plant = plant.replace(quantize_encoders=True)
    if args.noise_std is not None:
        angle_deg, torque_mnm = args.noise_std
        plant = plant.replace(angle_noise_std=math.radians(angle_deg), torque_noise_std=torque_mnm / 1000)
    if args.no_refine:
        ident = config_mod.IdentOptions(**{**ident.__dict__, "refine": False})
    config_mod.validate_config(plant)
    return RunConfig(plant=plant, excitation=run.excitation, ident=ident)


def _noise_pair(text):
    parts = text.split(",")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ANGLE_DEG[,TORQUE_MNM], got {text!r}")
    if len(values) == 1:
        values.append(0.0)
    if len(values) != 2 or any(not math.isfinite(v) or v < 0 for v in values):
        raise argparse.ArgumentTypeError(f"expected two non-negative numbers, got {text!r}")
    return tuple(values)


def _cell(text):
    kind, sep, env = text.partition(":")
    if not sep or not kind or not env:
        raise argparse.ArgumentTypeError(f"expected KIND:ENV, got {text!r}")
    return kind, env


def _json(doc):
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _finite(obj):
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _two_column(header, x, y):
    lines = [header]
    lines += [f"{float(a)!r},{float(b)!r}" for a, b in zip(x, y)]
    return "\n".join(lines) + "\n"


def write_outputs(out_dir, files):
    """Write ``{name: text}`` into ``out_dir`` atomically, file by file."""
    try:
        os.makedirs(out_dir, exist_ok=True)
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.", suffix=".tmp")
            try:
                with os.fdopen(fd, "w", newline="") as fh:
                    fh.write(text)
                os.replace(tmp, os.path.join(out_dir, name))
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise
    except OSError as exc:
        raise CliError(f"cannot write to {out_dir}: {exc}", EXIT_IO)


def _load_tf(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO)
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: malformed JSON ({exc})", EXIT_CONFIG)
    if isinstance(doc, dict) and isinstance(doc.get("transfer_function"), dict):
        doc = doc["transfer_function"]
    try:
        tf = TransferFunction2.from_dict(doc)
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)
                   for v in tf.coefficients().tolist()):
            raise ValueError("coefficients must be finite numbers")
        return TransferFunction2(*(float(v) for v in tf.coefficients()), tf.input_unit, tf.output_unit)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"{path}: not a transfer function document ({exc})", EXIT_CONFIG)


def _bode_files(tf, points=200):
    omega = default_bode_grid(points)
    mag, phase = tf_bode(tf, omega)
    return {"bode_magnitude.csv": _two_column("omega_rad_s,magnitude_dB", omega, mag),
            "bode_phase.csv": _two_column("omega_rad_s,phase_deg", omega, phase)}


def _step_files(tf, horizon, dt):
    t, y = tf_step(tf, horizon, dt)
    return {"step.csv": _two_column(f"time_s,{tf.output_unit}_per_{tf.input_unit}", t, y)}


def cmd_simulate(args):
    run = _load_run(args)
    log = simulate_kinematic(run.plant, run.excitation, run.excitation.duration,
                             config_mod.noise_generator(run.plant.seed, 0))
    files = {"run.csv": log.csv_text(), "config.json": _json(config_mod.run_to_document(run))}
    write_outputs(args.out, files)
    return EXIT_OK


def cmd_identify(args):
    run = _load_run(args)
    result = run_identification(run.plant, run.excitation, run.ident)
    files = {"identification.json": _json(_finite(result.to_dict()))}
    files.update(_bode_files(result.tf))
    if result.stable:
        files.update(_step_files(result.tf, args.horizon, args.dt))
    else:
        print("identified model is not stable; step.csv not written", file=sys.stderr)
    write_outputs(args.out, files)
    return EXIT_OK


def cmd_sweep(args):
    run = _load_run(args)
    try:
        report = run_sweep(run, only=args.only, workers=args.workers)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_CONFIG)
    write_outputs(args.out, {"sweep.json": report.to_json(), "sweep.md": report.to_markdown()})
    for f in report.findings:
        mark = {True: "PASS", False: "FAIL", None: "n/a"}[f["passed"]]
        print(f"{mark} {f['name']}: {f['detail']}")
    if report.failed:
        for c in report.failed:
            print(f"cell {c['transmission']}:{c['environment']} failed: {c['error']}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_analyze(args):
    tf = _load_tf(args.tf)
    summary = tf_analyze(tf)
    if not summary["stable"]:
        # an unstable pole pair has no meaningful natural frequency or damping
        summary["natural_frequency"] = summary["damping_ratio"] = None

    def show(v, fmt):
        return "undefined" if v is None else format(v, fmt)

    print(f"transfer function: {tf.format()}")
    print(f"dc gain: {show(summary['dc_gain'], '.4f')} {tf.output_unit}/{tf.input_unit}")
    print(f"natural frequency: {show(summary['natural_frequency'], '.2f')} rad/s")
    print(f"damping ratio: {show(summary['damping_ratio'], '.3f')}")
    print(f"stability: {'stable' if summary['stable'] else 'unstable'}")
    return EXIT_OK


def cmd_bode(args):
    tf = _load_tf(args.tf)
    write_outputs(args.out, _bode_files(tf, args.points))
    return EXIT_OK


def cmd_step(args):
    tf = _load_tf(args.tf)
    if not tf.stable:
        raise CliError("step response requested for an unstable transfer function", EXIT_NUMERIC)
    write_outputs(args.out, _step_files(tf, args.horizon, args.dt))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="telesim", description="1-DoF teleoperator testbed simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="JSON config document (defaults if omitted)")
    common.add_argument("-o", "--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--quantize", action="store_true", help="quantize encoder angles")
    common.add_argument("--noise-std", type=_noise_pair, metavar="ANGLE_DEG[,TORQUE_MNM]",
                        help="measurement noise standard deviations")
    common.add_argument("--no-refine", action="store_true", help="skip output-error refinement")

    step_opts = argparse.ArgumentParser(add_help=False)
    step_opts.add_argument("--horizon", type=float, default=5.0, help="step response length (s)")
    step_opts.add_argument("--dt", type=float, default=1e-3, help="step response sample time (s)")

    p = sub.add_parser("simulate", parents=[common], help="simulate one chirp run, write run.csv")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("identify", parents=[common, step_opts], help="identify a second-order model")
    p.set_defaults(func=cmd_identify)
    p = sub.add_parser("sweep", parents=[common], help="identify all transmission x environment cells")
    p.add_argument("--only", type=_cell, action="append", metavar="KIND:ENV", help="restrict to one cell")
    p.add_argument("--workers", type=int, default=1, help="parallel processes")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("analyze", help="summarize a transfer function JSON")
    p.add_argument("tf", help="transfer function JSON (or an identification.json)")
    p.set_defaults(func=cmd_analyze)
    p = sub.add_parser("bode", help="write Bode magnitude and phase CSVs")
    p.add_argument("tf")
    p.add_argument("-o", "--out", default=".")
    p.add_argument("--points", type=int, default=200)
    p.set_defaults(func=cmd_bode)
    p = sub.add_parser("step", parents=[step_opts], help="write a unit step response CSV")
    p.add_argument("tf")
    p.add_argument("-o", "--out", default=".")
    p.set_defaults(func=cmd_step)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return args.func(args)
    except CliError as exc:
        print(f"telesim: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationDiverged, UnidentifiableData, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
