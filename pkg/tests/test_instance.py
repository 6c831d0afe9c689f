import json

import pytest

from corrkit.dilation import weak_dilation_check
from corrkit.errors import InstanceFormatError
from corrkit.instance import (
    PROFILES,
    decode_instance,
    emit_instance,
    generate_instance,
    instances_equal,
    parse_instance,
)
from corrkit.hilbmod import validate_module

from conftest import TOL


def minimal_doc():
    return {
        "algebra": {"blocks": [1]},
        "modules": {
            "E": {
                "dim": 1,
                "right_action": [[[[1.0, 0.0]]]],
                "gram": [[[[[[1.0, 0.0]]]]]],
            }
        },
    }


def test_minimal_instance_parses(tmp_path):
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(minimal_doc()))
    inst = parse_instance(str(path))
    assert set(inst.modules) == {"E"}
    assert inst.module("E").dim == 1
    assert inst.config.levels == 4


def test_parse_error_reports_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"algebra": {"blocks": [1],}}')
    with pytest.raises(InstanceFormatError) as err:
        parse_instance(str(path))
    assert "line" in str(err.value)


def test_unknown_keys_rejected():
    doc = minimal_doc()
    doc["extra"] = 1
    with pytest.raises(InstanceFormatError, match="unknown keys"):
        decode_instance(doc)
    doc = minimal_doc()
    doc["modules"]["E"]["mystery"] = 1
    with pytest.raises(InstanceFormatError, match="unknown keys"):
        decode_instance(doc)


def test_norm_bound_enforced():
    doc = minimal_doc()
    doc["modules"]["E"]["right_action"] = [[[[32.0, 0.0]]]]
    with pytest.raises(InstanceFormatError, match="operator norm"):
        decode_instance(doc)


def test_invalid_gram_named():
    doc = minimal_doc()
    doc["modules"]["E"]["gram"][0][0][0][0][0] = [-1.0, 0.0]
    with pytest.raises(InstanceFormatError, match="gram-positive"):
        decode_instance(doc)


def test_missing_left_action_errors_at_task():
    doc = minimal_doc()
    inst = decode_instance(doc)
    with pytest.raises(InstanceFormatError, match="tensor.*left_action"):
        inst.correspondence("E", "tensor")


def test_unresolved_references():
    inst = decode_instance(minimal_doc())
    with pytest.raises(InstanceFormatError, match="unresolved"):
        inst.module("missing")
    with pytest.raises(InstanceFormatError, match="unresolved"):
        inst.vector("missing")


def test_vector_dimension_checked():
    doc = minimal_doc()
    doc["vectors"] = {"v": {"module": "E", "entries": [[1.0, 0.0], [0.0, 0.0]]}}
    with pytest.raises(InstanceFormatError, match="length"):
        decode_instance(doc)


def test_endomorphism_shape_checked():
    doc = minimal_doc()
    doc["endomorphism"] = {"on": "E", "matrix": [[[1.0, 0.0], [0.0, 0.0]],
                                                 [[0.0, 0.0], [1.0, 0.0]]]}
    with pytest.raises(InstanceFormatError, match="operator basis"):
        decode_instance(doc)


@pytest.mark.parametrize("profile", PROFILES)
@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_generated_instances_validate(profile, seed):
    inst = generate_instance(seed, profile)
    for mod in inst.modules.values():
        rep = validate_module(mod, inst.config.tol)
        assert rep.passed
        assert rep.max_deviation <= TOL


@pytest.mark.parametrize("profile", PROFILES)
def test_generation_is_deterministic(profile):
    a = generate_instance(5, profile)
    b = generate_instance(5, profile)
    assert instances_equal(a, b)
    assert emit_instance(a) == emit_instance(b)


@pytest.mark.parametrize("profile", PROFILES)
def test_round_trip(profile, tmp_path):
    inst = generate_instance(2, profile)
    path = tmp_path / "inst.json"
    path.write_text(emit_instance(inst))
    again = parse_instance(str(path))
    assert instances_equal(inst, again)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_weak_dilation_profile_passes_checker(seed):
    inst = generate_instance(seed, "weak-dilation")
    eplus, endo = inst.make_endo()
    _, vec = inst.vector("xi")
    wd = weak_dilation_check(eplus, endo, vec, levels=3)
    assert wd.ok


def test_unknown_profile():
    with pytest.raises(InstanceFormatError, match="profile"):
        generate_instance(0, "mystery")
