"""Plant configuration: defaults, strict JSON schema and validation.

Internally every quantity is SI (rad, N*m, kg*m^2). The JSON document uses
boundary units that are spelled out in the key names, e.g.
``damper_mNm_per_rad_s`` or ``environment_stiffness_mNm_per_deg``.
"""
import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import excitation
from .units import DEG_PER_RAD, MNM_PER_NM

TRANSMISSIONS = ("rigid", "elastic", "damped", "combined", "electromechanical")
ENVIRONMENTS = ("freespace", "spring", "damper", "inertia", "pendulum")


def torsion_stiffness(youngs_modulus, diameter, length, poisson_ratio=0.5):
    """Torsional stiffness G*J/L of a solid round rod (N*m/rad).

    Parameters are SI: Pa, m, m. ``G = E / (2 (1 + nu))``; nu = 0.5 gives
    the incompressible-rubber value ``G = E / 3``.
    """
    shear = youngs_modulus / (2.0 * (1.0 + poisson_ratio))
    polar = math.pi * diameter**4 / 32.0
    return shear * polar / length


# Shore 40A neoprene, 6.3 mm x 50 mm
NEOPRENE_MODULUS = 1.69e6
ROD_DIAMETER = 6.3e-3
ROD_LENGTH = 50e-3
NEOPRENE_STIFFNESS = torsion_stiffness(NEOPRENE_MODULUS, ROD_DIAMETER, ROD_LENGTH)


class ConfigError(ValueError):
    """Raised with every violated constraint, one ``path: message`` per entry."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class PlantConfig:
    transmission_kind: str = "rigid"
    elastic_stiffness: float = NEOPRENE_STIFFNESS
    elastic_parallel_damping: float = 0.0
    damper_coefficient: float = 9.45e-3
    kp: float = 0.05
    kd: float = 0.05
    pd_velocity_cutoff: float | None = None  # Hz, None = unfiltered differences
    leader_inertia: float = 2e-4
    follower_inertia: float = 2e-4
    leader_viscous: float = 1e-4
    follower_viscous: float = 1e-4
    environment_kind: str = "freespace"
    environment_stiffness: float = 1e-3 * DEG_PER_RAD  # 1 mNm/deg
    environment_damping: float = 0.0
    environment_inertia: float = 0.0
    pendulum_mass: float = 0.1
    pendulum_length: float = 0.1
    environment_torque_limit: float = 0.467
    leader_torque_limit: float | None = None
    follower_torque_limit: float | None = None
    control_rate: float = 1000.0
    integrator_step: float = 1e-4
    encoder_counts_per_rev: int = 2000
    quantize_encoders: bool = False
    angle_noise_std: float = 0.0  # rad
    torque_noise_std: float = 0.0  # N*m
    seed: int = 0

    @property
    def control_period(self):
        return 1.0 / self.control_rate

    @property
    def decimation(self):
        """Integrator substeps per control period."""
        return int(round(self.control_period / self.integrator_step))

    @property
    def noisy(self):
        return self.angle_noise_std > 0 or self.torque_noise_std > 0

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class IdentOptions:
    svf_cutoff: float = 25.0  # rad/s
    refine: bool = True
    whiteness_lags: int = 20
    confidence: float = 0.95


@dataclass(frozen=True)
class RunConfig:
    """Everything one config document describes."""

    plant: PlantConfig = field(default_factory=PlantConfig)
    excitation: object = field(default_factory=excitation.ChirpSpec)
    ident: IdentOptions = field(default_factory=IdentOptions)


# document key -> (PlantConfig field, boundary->SI factor)
_SCALAR_FIELDS = {
    "elastic_stiffness_mNm_per_rad": ("elastic_stiffness", 1 / MNM_PER_NM),
    "elastic_parallel_damping_mNm_per_rad_s": ("elastic_parallel_damping", 1 / MNM_PER_NM),
    "damper_mNm_per_rad_s": ("damper_coefficient", 1 / MNM_PER_NM),
    "kp_Nm_per_rad": ("kp", 1.0),
    "kd_Nm_s_per_rad": ("kd", 1.0),
    "pd_velocity_cutoff_hz": ("pd_velocity_cutoff", 1.0),
    "leader_inertia_kg_m2": ("leader_inertia", 1.0),
    "follower_inertia_kg_m2": ("follower_inertia", 1.0),
    "leader_viscous_mNm_per_rad_s": ("leader_viscous", 1 / MNM_PER_NM),
    "follower_viscous_mNm_per_rad_s": ("follower_viscous", 1 / MNM_PER_NM),
    "environment_stiffness_mNm_per_deg": ("environment_stiffness", DEG_PER_RAD / MNM_PER_NM),
    "environment_damping_mNm_per_rad_s": ("environment_damping", 1 / MNM_PER_NM),
    "environment_inertia_kg_m2": ("environment_inertia", 1.0),
    "pendulum_mass_kg": ("pendulum_mass", 1.0),
    "pendulum_length_m": ("pendulum_length", 1.0),
    "environment_torque_limit_mNm": ("environment_torque_limit", 1 / MNM_PER_NM),
    "leader_torque_limit_mNm": ("leader_torque_limit", 1 / MNM_PER_NM),
    "follower_torque_limit_mNm": ("follower_torque_limit", 1 / MNM_PER_NM),
    "control_rate_hz": ("control_rate", 1.0),
    "integrator_step_s": ("integrator_step", 1.0),
}
_NULLABLE = {"pd_velocity_cutoff", "leader_torque_limit", "follower_torque_limit", "elastic_stiffness"}
_ROD_FIELDS = {
    "rod_youngs_modulus_MPa": 1e6,
    "rod_diameter_mm": 1e-3,
    "rod_length_mm": 1e-3,
    "rod_poisson_ratio": 1.0,
}
_NOISE_FIELDS = {"angle_deg": ("angle_noise_std", 1 / DEG_PER_RAD), "torque_mNm": ("torque_noise_std", 1 / MNM_PER_NM)}
_IDENT_FIELDS = {
    "svf_cutoff_rad_s": "svf_cutoff",
    "refine": "refine",
    "whiteness_lags": "whiteness_lags",
    "confidence": "confidence",
}
_TOP_LEVEL = ({"transmission", "environment", "encoder_counts_per_rev", "quantize_encoders", "noise_std",
               "seed", "excitation", "identification"} | set(_SCALAR_FIELDS) | set(_ROD_FIELDS))


def _number(value, path, errors):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{path}: expected a number, got {value!r}")
        return None
    if not math.isfinite(value):
        errors.append(f"{path}: must be finite")
        return None
    return float(value)


def _parse_plant(doc, errors):
    values = {}
    for key in sorted(set(doc) - _TOP_LEVEL):
        errors.append(f"{key}: unknown field")

    if "transmission" in doc:
        values["transmission_kind"] = doc["transmission"]
    if "environment" in doc:
        values["environment_kind"] = doc["environment"]

    for key, (name, factor) in _SCALAR_FIELDS.items():
        if key not in doc:
            continue
        if doc[key] is None and name in _NULLABLE:
            values[name] = None
            continue
        num = _number(doc[key], key, errors)
        if num is not None:
            values[name] = num * factor

    rod = {"rod_youngs_modulus_MPa": NEOPRENE_MODULUS / 1e6, "rod_diameter_mm": ROD_DIAMETER * 1e3,
           "rod_length_mm": ROD_LENGTH * 1e3, "rod_poisson_ratio": 0.5}
    rod_given = False
    for key in _ROD_FIELDS:
        if key in doc:
            rod_given = True
            num = _number(doc[key], key, errors)
            if num is not None:
                rod[key] = num
    if values.get("elastic_stiffness", None) is None:
        if rod_given and rod["rod_length_mm"] <= 0:
            errors.append("rod_length_mm: must be positive")
        elif "elastic_stiffness" in values or rod_given:
            values["elastic_stiffness"] = torsion_stiffness(
                rod["rod_youngs_modulus_MPa"] * _ROD_FIELDS["rod_youngs_modulus_MPa"],
                rod["rod_diameter_mm"] * _ROD_FIELDS["rod_diameter_mm"],
                rod["rod_length_mm"] * _ROD_FIELDS["rod_length_mm"],
                rod["rod_poisson_ratio"])
    elif rod_given:
        errors.append("elastic_stiffness_mNm_per_rad: give either the stiffness or rod_* geometry, not both")

    if "encoder_counts_per_rev" in doc:
        v = doc["encoder_counts_per_rev"]
        if isinstance(v, bool) or not isinstance(v, int):
            errors.append("encoder_counts_per_rev: expected an integer")
        else:
            values["encoder_counts_per_rev"] = v
    if "quantize_encoders" in doc:
        if not isinstance(doc["quantize_encoders"], bool):
            errors.append("quantize_encoders: expected true/false")
        else:
            values["quantize_encoders"] = doc["quantize_encoders"]
    if "seed" in doc:
        v = doc["seed"]
        if isinstance(v, bool) or not isinstance(v, int):
            errors.append("seed: expected an integer")
        else:
            values["seed"] = v
    noise = doc.get("noise_std", {})
    if not isinstance(noise, dict):
        errors.append("noise_std: expected an object")
        noise = {}
    for key in sorted(set(noise) - set(_NOISE_FIELDS)):
        errors.append(f"noise_std.{key}: unknown field")
    for key, (name, factor) in _NOISE_FIELDS.items():
        if key in noise:
            num = _number(noise[key], f"noise_std.{key}", errors)
            if num is not None:
                values[name] = num * factor
    return values


def _check(cfg):
    errors = []
    if cfg.transmission_kind not in TRANSMISSIONS:
        errors.append(f"transmission: unknown kind {cfg.transmission_kind!r} (expected one of {', '.join(TRANSMISSIONS)})")
    if cfg.environment_kind not in ENVIRONMENTS:
        errors.append(f"environment: unknown kind {cfg.environment_kind!r} (expected one of {', '.join(ENVIRONMENTS)})")
    for name in ("leader_inertia", "follower_inertia"):
        if not getattr(cfg, name) > 0:
            errors.append(f"{name}: inertia must be positive")
    for name in ("elastic_parallel_damping", "damper_coefficient", "kd", "leader_viscous",
                 "follower_viscous", "environment_damping"):
        if getattr(cfg, name) < 0:
            errors.append(f"{name}: damping must be non-negative")
    for name in ("kp", "elastic_stiffness", "environment_stiffness", "environment_inertia",
                 "pendulum_mass", "pendulum_length", "angle_noise_std", "torque_noise_std"):
        value = getattr(cfg, name)
        if value is None or value < 0:
            errors.append(f"{name}: must be non-negative")
    for name in ("environment_torque_limit", "leader_torque_limit", "follower_torque_limit",
                 "pd_velocity_cutoff"):
        value = getattr(cfg, name)
        if value is not None and not value > 0:
            errors.append(f"{name}: must be positive")
    if not cfg.control_rate > 0:
        errors.append("control_rate: must be positive")
    if not cfg.integrator_step > 0:
        errors.append("integrator_step: must be positive")
    if cfg.control_rate > 0 and cfg.integrator_step > 0:
        ratio = 1.0 / (cfg.control_rate * cfg.integrator_step)
        if ratio < 1 - 1e-9:
            errors.append("integrator_step: must not exceed the control period")
        elif abs(ratio - round(ratio)) > 1e-9 * ratio:
            errors.append(f"integrator_step: non-integer decimation (control period / step = {ratio:.6g})")
    if cfg.encoder_counts_per_rev <= 0:
        errors.append("encoder_counts_per_rev: must be positive")
    if cfg.seed < 0:
        errors.append("seed: must be non-negative")
    return errors


def validate_config(cfg):
    """Return a normalized :class:`PlantConfig` or raise :class:`ConfigError`.

    Accepts either a parsed JSON document (plant keys only; ``excitation``
    and ``identification`` blocks are ignored here) or an existing
    PlantConfig. Validation is idempotent.
    """
    if isinstance(cfg, PlantConfig):
        errors = _check(cfg)
        if errors:
            raise ConfigError(errors)
        return cfg
    if not isinstance(cfg, dict):
        raise ConfigError([f"<root>: expected a JSON object, got {type(cfg).__name__}"])
    errors = []
    values = _parse_plant(cfg, errors)
    # well-formed fields are range-checked too, so one pass reports everything
    plant = PlantConfig(**values)
    errors += _check(plant)
    if errors:
        raise ConfigError(errors)
    return plant


def parse_document(doc):
    """Validate a full config document into a :class:`RunConfig`."""
    if not isinstance(doc, dict):
        raise ConfigError([f"<root>: expected a JSON object, got {type(doc).__name__}"])
    errors = []
    plant = None
    try:
        plant = validate_config(doc)
    except ConfigError as exc:
        errors.extend(exc.errors)

    exc_spec = excitation.ChirpSpec()
    if "excitation" in doc:
        if not isinstance(doc["excitation"], dict):
            errors.append("excitation: expected an object")
        else:
            try:
                exc_spec = excitation.from_document(doc["excitation"])
            except (TypeError, ValueError) as exc:
                errors.append(f"excitation: {exc}")

    ident = {}
    block = doc.get("identification", {})
    if not isinstance(block, dict):
        errors.append("identification: expected an object")
        block = {}
    for key in sorted(set(block) - set(_IDENT_FIELDS)):
        errors.append(f"identification.{key}: unknown field")
    for key, name in _IDENT_FIELDS.items():
        if key not in block:
            continue
        value = block[key]
        if name == "refine":
            if not isinstance(value, bool):
                errors.append("identification.refine: expected true/false")
            else:
                ident[name] = value
        elif name == "whiteness_lags":
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                errors.append("identification.whiteness_lags: expected a positive integer")
            else:
                ident[name] = value
        else:
            num = _number(value, f"identification.{key}", errors)
            if num is not None:
                if name == "confidence" and not 0 < num < 1:
                    errors.append("identification.confidence: must lie in (0, 1)")
                elif name == "svf_cutoff" and not num > 0:
                    errors.append("identification.svf_cutoff_rad_s: must be positive")
                else:
                    ident[name] = num
    if errors:
        raise ConfigError(errors)
    return RunConfig(plant=plant, excitation=exc_spec, ident=IdentOptions(**ident))


def load_config(path):
    """Read and validate a JSON config file. An empty file means all defaults."""
    with open(path) as fh:
        text = fh.read()
    if not text.strip():
        return RunConfig()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<root>: malformed JSON ({exc})"])
    return parse_document(doc)


def to_document(cfg):
    """Inverse of :func:`validate_config` for a PlantConfig, in boundary units."""
    doc = {"transmission": cfg.transmission_kind, "environment": cfg.environment_kind}
    for key, (name, factor) in _SCALAR_FIELDS.items():
        value = getattr(cfg, name)
        doc[key] = None if value is None else value / factor
    doc["encoder_counts_per_rev"] = cfg.encoder_counts_per_rev
    doc["quantize_encoders"] = cfg.quantize_encoders
    doc["noise_std"] = {key: getattr(cfg, name) / factor for key, (name, factor) in _NOISE_FIELDS.items()}
    doc["seed"] = cfg.seed
    return doc


def run_to_document(run):
    doc = to_document(run.plant)
    doc["excitation"] = excitation.to_document(run.excitation)
    doc["identification"] = {key: getattr(run.ident, name) for key, name in _IDENT_FIELDS.items()}
    return doc


def noise_generator(seed, stream=0):
    """Independent, reproducible generator for run number ``stream``."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(stream + 1)[stream])
