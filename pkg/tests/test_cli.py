import json

import numpy as np
import pytest

from corrkit.cli import (
    EXIT_DEGENERATE,
    EXIT_FAIL,
    EXIT_INVALID,
    EXIT_PASS,
    main,
    run,
)
from corrkit.gallery import (
    block_collapse_instance,
    doubled_swap_correspondence,
    identity_mixed_instance,
)
from corrkit.instance import Instance, emit_instance, generate_instance


def instance_from_endomorphism(inst_obj, include_vector=True) -> Instance:
    modules = {"E": inst_obj.eplus}
    inst = Instance(inst_obj.eplus.algebra, modules)
    inst.endomorphism = ("E", inst_obj.endo.matrix)
    if include_vector and inst_obj.unit_vectors:
        name, vec = next(iter(inst_obj.unit_vectors.items()))
        inst.vectors["xi"] = ("E", vec)
    return inst


def write(tmp_path, name, inst) -> str:
    path = tmp_path / name
    path.write_text(emit_instance(inst))
    return str(path)


@pytest.fixture(scope="module")
def spatial_file(tmp_path_factory):
    inst = instance_from_endomorphism(identity_mixed_instance())
    return write(tmp_path_factory.mktemp("cli"), "identity.json", inst)


@pytest.fixture(scope="module")
def collapse_file(tmp_path_factory):
    inst = instance_from_endomorphism(block_collapse_instance(), include_vector=False)
    return write(tmp_path_factory.mktemp("cli"), "collapse.json", inst)


def test_verify_main_passes(spatial_file, capsys):
    assert main(["verify-main", spatial_file]) == EXIT_PASS
    out = capsys.readouterr().out
    assert "status: pass" in out


def test_verify_main_not_applicable(collapse_file, capsys):
    assert main(["verify-main", collapse_file]) == EXIT_DEGENERATE
    out = capsys.readouterr().out
    assert "not applicable (non-spatial)" in out


def test_corrupted_gram_exits_invalid(tmp_path, spatial_file):
    doc = json.loads(open(spatial_file).read())
    doc["modules"]["E"]["gram"][0][0][0][0][0][0] = -5.0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["verify-main", str(bad)]) == EXIT_INVALID


def test_verify_supplement_exit(spatial_file):
    assert main(["verify-supplement", spatial_file, "--vector", "xi"]) == EXIT_PASS


def test_dilate_exit(spatial_file):
    assert main(["dilate", spatial_file, "--vector", "xi"]) == EXIT_PASS


def test_spatial_exit(spatial_file, collapse_file):
    assert main(["spatial", spatial_file]) == EXIT_PASS
    # a certified negative is a decided verdict, not a degenerate one
    assert main(["spatial", collapse_file]) == EXIT_PASS


def test_basis_emits_operators(spatial_file, capsys):
    assert main(["basis", spatial_file, "--module", "E"]) == EXIT_PASS
    doc = json.loads(capsys.readouterr().out)
    assert doc["module"] == "E"
    assert len(doc["operators"]) == 5


def test_tensor_requires_correspondence(tmp_path):
    inst = generate_instance(0, "module")
    path = write(tmp_path, "mod.json", inst)
    assert main(["tensor", path, "--left", "E", "--right", "E"]) == EXIT_INVALID


def test_tensor_on_correspondence(tmp_path):
    inst = generate_instance(0, "correspondence")
    path = write(tmp_path, "corr.json", inst)
    assert main(["tensor", path, "--left", "F", "--right", "F"]) == EXIT_PASS


def test_derive_ps(tmp_path):
    inst = generate_instance(1, "correspondence")
    path = write(tmp_path, "corr.json", inst)
    assert main(["derive-ps", path]) == EXIT_PASS


def test_compare_units_exits(tmp_path):
    corr = doubled_swap_correspondence()
    inst = Instance(corr.algebra, {"F": corr})
    inst.product_system = {
        "generator": "F",
        "levels": 3,
        "units": {
            "one": np.array([1.0, 1.0, 0.0, 0.0], dtype=complex),
            "two": np.array([0.0, 0.0, 1.0, 1.0], dtype=complex),
            "one-again": np.array([1.0, 1.0, 0.0, 0.0], dtype=complex),
        },
    }
    path = write(tmp_path, "units.json", inst)
    assert main(["compare-units", path, "--first", "one", "--second", "one-again"]) == EXIT_PASS
    assert main(["compare-units", path, "--first", "one", "--second", "two"]) == EXIT_FAIL


def test_generate_and_validate_chain(tmp_path):
    out = tmp_path / "gen.json"
    assert main(["generate", "--profile", "weak-dilation", "--seed", "7", "--out", str(out)]) == EXIT_PASS
    assert main(["validate", str(out)]) == EXIT_PASS
    assert main(["verify-supplement", str(out), "--vector", "xi"]) == EXIT_PASS


def test_machine_reports_are_byte_identical(spatial_file, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["verify-main", spatial_file, "--report", "machine", "--out", str(a)]) == EXIT_PASS
    assert main(["verify-main", spatial_file, "--report", "machine", "--out", str(b)]) == EXIT_PASS
    assert a.read_bytes() == b.read_bytes()


def test_run_dispatch_rejects_unknown_command(spatial_file):
    from corrkit.instance import parse_instance

    inst = parse_instance(spatial_file)
    with pytest.raises(Exception):
        run("mystery", inst, inst.config)


def test_missing_file_is_invalid():
    assert main(["validate", "/nonexistent/path.json"]) == EXIT_INVALID


def test_threads_env_sweeps_match(spatial_file, tmp_path, monkeypatch):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    monkeypatch.setenv("CORRKIT_THREADS", "1")
    assert main(["verify-main", spatial_file, "--report", "machine", "--out", str(a)]) == EXIT_PASS
    monkeypatch.setenv("CORRKIT_THREADS", "4")
    assert main(["verify-main", spatial_file, "--report", "machine", "--out", str(b)]) == EXIT_PASS
    assert a.read_bytes() == b.read_bytes()
