import json

import pytest
from hypothesis import given, strategies as st

from telesim.config import (NEOPRENE_STIFFNESS, ConfigError, PlantConfig, RunConfig, load_config,
                            noise_generator, parse_document, run_to_document, to_document,
                            torsion_stiffness, validate_config)
from telesim.excitation import ChirpSpec


def test_empty_document_gives_defaults():
    cfg = validate_config({})
    assert cfg == PlantConfig()
    assert cfg.transmission_kind == "rigid"
    assert cfg.environment_kind == "freespace"


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("")
    assert load_config(path) == RunConfig()


def test_non_integer_decimation():
    with pytest.raises(ConfigError, match="non-integer decimation"):
        validate_config({"integrator_step_s": 3e-4, "control_rate_hz": 1000})


def test_negative_inertia():
    with pytest.raises(ConfigError, match="inertia must be positive") as info:
        validate_config({"leader_inertia_kg_m2": -1})
    assert any(e.startswith("leader_inertia") for e in info.value.errors)


def test_all_errors_reported_together():
    with pytest.raises(ConfigError) as info:
        validate_config({"leader_inertia_kg_m2": -1, "transmission": "rubber", "bogus": 1})
    assert len(info.value.errors) >= 2


def test_unknown_field_rejected():
    with pytest.raises(ConfigError, match="bogus: unknown field"):
        parse_document({"bogus": 1})


def test_unknown_excitation_field_rejected():
    with pytest.raises(ConfigError, match="excitation"):
        parse_document({"excitation": {"kind": "chirp", "amplitude": 3}})


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="malformed"):
        load_config(path)


def test_boundary_units_converted_to_si():
    cfg = validate_config({"environment_stiffness_mNm_per_deg": 1.0, "damper_mNm_per_rad_s": 9.45})
    assert cfg.environment_stiffness == pytest.approx(0.0572958, rel=1e-5)
    assert cfg.damper_coefficient == pytest.approx(9.45e-3)


def test_neoprene_stiffness_from_torsion_formula():
    # G = E/3 for an incompressible rubber, J_p = pi d^4 / 32
    assert NEOPRENE_STIFFNESS == pytest.approx(1.742e-3, rel=1e-3)
    assert torsion_stiffness(1.69e6, 6.3e-3, 50e-3) == NEOPRENE_STIFFNESS


def test_rod_geometry_fields():
    cfg = validate_config({"rod_length_mm": 100.0})
    assert cfg.elastic_stiffness == pytest.approx(NEOPRENE_STIFFNESS / 2)


def test_validation_idempotent():
    cfg = validate_config({"transmission": "combined", "environment": "spring", "seed": 7})
    assert validate_config(cfg) is cfg
    assert validate_config(to_document(cfg)) == cfg


def test_full_document_round_trip():
    run = parse_document({"transmission": "damped", "excitation": {"kind": "chirp", "f1_hz": 3.0},
                          "identification": {"refine": False}})
    assert run.excitation == ChirpSpec(f1=3.0)
    again = parse_document(json.loads(json.dumps(run_to_document(run))))
    assert again == run


@given(st.sampled_from(["rigid", "elastic", "damped", "combined", "electromechanical"]),
       st.sampled_from(["freespace", "spring", "damper", "inertia", "pendulum"]),
       st.floats(1e-5, 1e-2), st.floats(0, 1e-2), st.integers(0, 2**31))
def test_document_round_trip_property(kind, env, inertia, viscous, seed):
    cfg = PlantConfig(transmission_kind=kind, environment_kind=env, leader_inertia=inertia,
                      follower_viscous=viscous, seed=seed)
    back = validate_config(to_document(cfg))
    assert back.transmission_kind == kind and back.environment_kind == env and back.seed == seed
    assert back.leader_inertia == pytest.approx(inertia, rel=1e-12)
    assert back.follower_viscous == pytest.approx(viscous, rel=1e-12, abs=1e-18)


def test_noise_streams_independent_and_reproducible():
    a = noise_generator(3, 0).standard_normal(5)
    assert (a == noise_generator(3, 0).standard_normal(5)).all()
    assert not (a == noise_generator(3, 1).standard_normal(5)).any()
