"""Instance files: parsing, validation, canonical serialization, generation.

An instance is a single JSON document; complex scalars are ``[re, im]``
pairs, matrices are row-major lists of rows, and algebra elements are lists
of per-block matrices.  Unknown keys are rejected everywhere, every supplied
matrix must have operator norm at most 16 (so absolute tolerances are
meaningful), and every presentation is validated before any task runs.
Serialization is canonical: identical instances produce byte-identical
files, and generation is a pure function of the seed and profile.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .algebra import NORM_BOUND, Algebra, make_algebra
from .endo import Endomorphism, endomorphism_from_conjugation, make_endomorphism
from .errors import InstanceFormatError
from .gallery import conjugated, random_unitary, standard_module, unit_vector_of_identity
from .hilbmod import Correspondence, ModulePresentation, adjointable_basis, validate_module

PROFILES = ("module", "correspondence", "spatial-endomorphism", "weak-dilation")
_ALGEBRA_CYCLE = ([1], [2], [1, 1], [1, 2])


@dataclass
class RunConfig:
    levels: int = 4
    tol: float = 1e-9
    budget: int = 4096
    seed: int = 0
    report: str = "text"

    def __post_init__(self):
        if self.levels < 1:
            raise InstanceFormatError("config.levels must be at least 1")
        if not self.tol > 0:
            raise InstanceFormatError("config.tol must be positive")
        if self.budget < 1:
            raise InstanceFormatError("config.budget must be positive")
        if self.report not in ("text", "machine"):
            raise InstanceFormatError(f"config.report {self.report!r} not in text|machine")


@dataclass
class Instance:
    algebra: Algebra
    modules: dict[str, ModulePresentation]
    vectors: dict[str, tuple[str, np.ndarray]] = field(default_factory=dict)
    endomorphism: tuple[str, np.ndarray] | None = None
    product_system: dict | None = None
    config: RunConfig = field(default_factory=RunConfig)

    def module(self, name: str) -> ModulePresentation:
        if name not in self.modules:
            raise InstanceFormatError(f"unresolved module reference {name!r}")
        return self.modules[name]

    def correspondence(self, name: str, task: str) -> Correspondence:
        mod = self.module(name)
        if not mod.is_correspondence:
            raise InstanceFormatError(
                f"{task}: module {name!r} has no left_action but a correspondence is required"
            )
        return mod

    def vector(self, name: str) -> tuple[ModulePresentation, np.ndarray]:
        if name not in self.vectors:
            raise InstanceFormatError(f"unresolved vector reference {name!r}")
        mod_name, entries = self.vectors[name]
        return self.module(mod_name), entries

    def make_endo(self) -> tuple[ModulePresentation, Endomorphism]:
        if self.endomorphism is None:
            raise InstanceFormatError("instance has no endomorphism")
        name, matrix = self.endomorphism
        eplus = self.module(name)
        ops = adjointable_basis(eplus, self.config.tol)
        if matrix.shape != (len(ops), len(ops)):
            raise InstanceFormatError(
                f"endomorphism matrix of shape {matrix.shape}; the operator basis "
                f"of {name!r} has dimension {len(ops)}"
            )
        return eplus, make_endomorphism(eplus, matrix, ops, self.config.tol)


# ---------------------------------------------------------------------------
# decoding
# ---------------------------------------------------------------------------

def _expect_keys(obj: dict, allowed: set[str], required: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise InstanceFormatError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise InstanceFormatError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise InstanceFormatError(f"{where}: missing keys {sorted(missing)}")


def _decode_scalar(value, where: str) -> complex:
    if (
        not isinstance(value, list)
        or len(value) != 2
        or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)
    ):
        raise InstanceFormatError(f"{where}: complex entries are [re, im] pairs")
    return complex(value[0], value[1])


def _decode_matrix(value, where: str, shape: tuple[int, int] | None = None) -> np.ndarray:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise InstanceFormatError(f"{where}: expected a list of rows")
    ncols = len(value[0])
    if any(len(r) != ncols for r in value):
        raise InstanceFormatError(f"{where}: ragged rows")
    out = np.array(
        [[_decode_scalar(x, where) for x in row] for row in value], dtype=complex
    )
    if shape is not None and out.shape != shape:
        raise InstanceFormatError(f"{where}: shape {out.shape}, expected {shape}")
    _check_norm(out, where)
    return out


def _decode_vector(value, where: str, dim: int | None = None) -> np.ndarray:
    if not isinstance(value, list):
        raise InstanceFormatError(f"{where}: expected a list of [re, im] pairs")
    out = np.array([_decode_scalar(x, where) for x in value], dtype=complex)
    if dim is not None and out.shape != (dim,):
        raise InstanceFormatError(f"{where}: length {out.shape[0]}, expected {dim}")
    _check_norm(out.reshape(1, -1), where)
    return out


def _check_norm(matrix: np.ndarray, where: str) -> None:
    if matrix.size == 0:
        return
    norm = float(np.linalg.svd(matrix, compute_uv=False)[0])
    if norm > NORM_BOUND:
        raise InstanceFormatError(
            f"{where}: operator norm {norm:.3f} exceeds the bound {NORM_BOUND}"
        )


def _decode_element(value, alg: Algebra, where: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != len(alg.blocks):
        raise InstanceFormatError(
            f"{where}: algebra elements are lists of {len(alg.blocks)} block matrices"
        )
    blocks = [
        _decode_matrix(b, f"{where}[block {i}]", (n, n))
        for i, (b, n) in enumerate(zip(value, alg.blocks))
    ]
    return alg.embed(blocks)


def _decode_module(value, alg: Algebra, name: str, tol: float) -> ModulePresentation:
    where = f"modules.{name}"
    _expect_keys(
        value, {"dim", "right_action", "gram", "left_action"}, {"dim", "right_action", "gram"}, where
    )
    m = value["dim"]
    if not isinstance(m, int) or m < 1:
        raise InstanceFormatError(f"{where}.dim: expected a positive integer")
    ra = value["right_action"]
    if not isinstance(ra, list) or len(ra) != alg.dim:
        raise InstanceFormatError(f"{where}.right_action: expected {alg.dim} matrices")
    right = np.stack(
        [_decode_matrix(mat, f"{where}.right_action[{c}]", (m, m)) for c, mat in enumerate(ra)]
    )
    gr = value["gram"]
    if not isinstance(gr, list) or len(gr) != m or any(len(row) != m for row in gr):
        raise InstanceFormatError(f"{where}.gram: expected an {m} x {m} grid of algebra elements")
    gram = np.zeros((m, m, alg.size, alg.size), dtype=complex)
    for i in range(m):
        for j in range(m):
            gram[i, j] = _decode_element(gr[i][j], alg, f"{where}.gram[{i}][{j}]")
    if "left_action" in value:
        la = value["left_action"]
        if not isinstance(la, list) or len(la) != alg.dim:
            raise InstanceFormatError(f"{where}.left_action: expected {alg.dim} matrices")
        left = np.stack(
            [_decode_matrix(mat, f"{where}.left_action[{c}]", (m, m)) for c, mat in enumerate(la)]
        )
        pres = Correspondence(alg, right, gram, left)
    else:
        pres = ModulePresentation(alg, right, gram)
    report = validate_module(pres, tol)
    if not report.passed:
        bad = ", ".join(c.name for c in report.failed_checks())
        raise InstanceFormatError(f"{where}: presentation fails invariants: {bad}")
    return pres


def decode_instance(doc: dict) -> Instance:
    _expect_keys(
        doc,
        {"algebra", "modules", "vectors", "endomorphism", "product_system", "config"},
        {"algebra", "modules"},
        "instance",
    )
    _expect_keys(doc["algebra"], {"blocks"}, {"blocks"}, "algebra")
    blocks = doc["algebra"]["blocks"]
    if not isinstance(blocks, list) or not all(isinstance(b, int) for b in blocks):
        raise InstanceFormatError("algebra.blocks: expected a list of integers")
    try:
        alg = make_algebra(blocks)
    except Exception as exc:
        raise InstanceFormatError(f"algebra: {exc}") from exc

    cfg_doc = doc.get("config", {})
    _expect_keys(
        cfg_doc, {"levels", "tol", "budget", "seed", "report"}, set(), "config"
    )
    config = RunConfig(**cfg_doc)

    modules = {}
    if not isinstance(doc["modules"], dict) or not doc["modules"]:
        raise InstanceFormatError("modules: expected a nonempty object")
    for name, value in doc["modules"].items():
        modules[name] = _decode_module(value, alg, name, config.tol)

    inst = Instance(alg, modules, config=config)

    for name, value in doc.get("vectors", {}).items():
        where = f"vectors.{name}"
        _expect_keys(value, {"module", "entries"}, {"module", "entries"}, where)
        mod = inst.module(value["module"])
        inst.vectors[name] = (
            value["module"],
            _decode_vector(value["entries"], where, mod.dim),
        )

    if "endomorphism" in doc:
        where = "endomorphism"
        _expect_keys(doc[where], {"on", "matrix"}, {"on", "matrix"}, where)
        mod = inst.module(doc[where]["on"])
        matrix = _decode_matrix(doc[where]["matrix"], f"{where}.matrix")
        inst.endomorphism = (doc[where]["on"], matrix)
        inst.make_endo()  # shape check against the operator basis

    if "product_system" in doc:
        where = "product_system"
        _expect_keys(
            doc[where], {"generator", "levels", "units"}, {"generator", "levels"}, where
        )
        gen = inst.correspondence(doc[where]["generator"], where)
        levels = doc[where]["levels"]
        if not isinstance(levels, int) or levels < 1:
            raise InstanceFormatError(f"{where}.levels: expected a positive integer")
        if config.budget < gen.dim:
            raise InstanceFormatError(
                f"{where}: budget {config.budget} below generator dimension {gen.dim}"
            )
        units = {}
        for uname, vec in doc[where].get("units", {}).items():
            units[uname] = _decode_vector(vec, f"{where}.units.{uname}", gen.dim)
        inst.product_system = {
            "generator": doc[where]["generator"],
            "levels": levels,
            "units": units,
        }
    return inst


def parse_instance(path: str) -> Instance:
    """Load and fully validate an instance file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InstanceFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(
            f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return decode_instance(doc)


# ---------------------------------------------------------------------------
# encoding
# ---------------------------------------------------------------------------

def _encode_scalar(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _encode_matrix(m: np.ndarray) -> list:
    return [[_encode_scalar(x) for x in row] for row in np.asarray(m)]


def _encode_vector(v: np.ndarray) -> list:
    return [_encode_scalar(x) for x in np.asarray(v)]


def _encode_element(a: np.ndarray, alg: Algebra) -> list:
    return [_encode_matrix(b) for b in alg.split(a)]


def encode_instance(inst: Instance) -> dict:
    alg = inst.algebra
    doc: dict = {"algebra": {"blocks": list(alg.blocks)}, "modules": {}}
    for name in sorted(inst.modules):
        mod = inst.modules[name]
        entry = {
            "dim": mod.dim,
            "right_action": [_encode_matrix(mod.right_action[c]) for c in range(alg.dim)],
            "gram": [
                [_encode_element(mod.gram[i, j], alg) for j in range(mod.dim)]
                for i in range(mod.dim)
            ],
        }
        if mod.is_correspondence:
            entry["left_action"] = [
                _encode_matrix(mod.left_action[c]) for c in range(alg.dim)
            ]
        doc["modules"][name] = entry
    if inst.vectors:
        doc["vectors"] = {
            name: {"module": mod_name, "entries": _encode_vector(vec)}
            for name, (mod_name, vec) in sorted(inst.vectors.items())
        }
    if inst.endomorphism is not None:
        doc["endomorphism"] = {
            "on": inst.endomorphism[0],
            "matrix": _encode_matrix(inst.endomorphism[1]),
        }
    if inst.product_system is not None:
        doc["product_system"] = {
            "generator": inst.product_system["generator"],
            "levels": inst.product_system["levels"],
            "units": {
                name: _encode_vector(vec)
                for name, vec in sorted(inst.product_system["units"].items())
            },
        }
    doc["config"] = {
        "levels": inst.config.levels,
        "tol": inst.config.tol,
        "budget": inst.config.budget,
        "seed": inst.config.seed,
        "report": inst.config.report,
    }
    return doc


def emit_instance(inst: Instance) -> str:
    """Canonical byte-stable serialization."""
    return json.dumps(encode_instance(inst), sort_keys=True, indent=1)


def instances_equal(a: Instance, b: Instance) -> bool:
    return emit_instance(a) == emit_instance(b)


# ---------------------------------------------------------------------------
# seeded generation
# ---------------------------------------------------------------------------

def _random_row_counts(alg: Algebra, rng: np.random.Generator) -> list[int]:
    return [int(rng.integers(1, 3)) * n for n in alg.blocks]


def _random_multiplicities(alg: Algebra, rng: np.random.Generator) -> tuple[list[int], list[list[int]]]:
    mult = []
    counts = []
    for _ in alg.blocks:
        row = [int(rng.integers(0, 2)) for _ in alg.blocks]
        if not any(row):
            row[int(rng.integers(0, len(alg.blocks)))] = 1
        mult.append(row)
        counts.append(sum(mu * n for mu, n in zip(row, alg.blocks)))
    return counts, mult


def generate_instance(seed: int, profile: str) -> Instance:
    """Deterministic instance from a fixed generator; same seed, same bytes.

    Profiles: plain ``module``, ``correspondence`` (multiplicity left action,
    unitary change of basis), ``spatial-endomorphism`` (conjugation by a
    seeded unitary, spatial by construction since inner maps admit a central
    unital unit), and ``weak-dilation`` (the algebra over itself with the
    identity as distinguished unit vector and an inner endomorphism, so the
    vector projection is increasing by construction).
    """
    if profile not in PROFILES:
        raise InstanceFormatError(f"unknown profile {profile!r}; choose from {PROFILES}")
    rng = np.random.default_rng(seed)
    alg = make_algebra(_ALGEBRA_CYCLE[seed % len(_ALGEBRA_CYCLE)])
    config = RunConfig(seed=seed)

    if profile == "module":
        pres = standard_module(alg, _random_row_counts(alg, rng))
        pres = conjugated(pres, random_unitary(rng, pres.dim))
        return Instance(alg, {"E": pres}, config=config)

    if profile == "correspondence":
        counts, mult = _random_multiplicities(alg, rng)
        pres = standard_module(alg, counts, multiplicities=mult)
        pres = conjugated(pres, random_unitary(rng, pres.dim))
        inst = Instance(alg, {"F": pres}, config=config)
        inst.product_system = {"generator": "F", "levels": 2, "units": {}}
        return inst

    if profile == "spatial-endomorphism":
        counts = [n for n in alg.blocks]
        eplus = standard_module(alg, counts)
        carrier = random_unitary(rng, eplus.dim)
        eplus = conjugated(eplus, carrier)
        # a unitary in the commutant: conjugate a blockwise unitary on the
        # row coordinates into the new basis
        v_std = _blockwise_row_unitary(alg, counts, rng)
        v = carrier.conj().T @ v_std @ carrier
        endo = endomorphism_from_conjugation(eplus, v)
        inst = Instance(alg, {"E": eplus}, config=config)
        inst.endomorphism = ("E", endo.matrix)
        return inst

    # weak-dilation: the algebra over itself, identity unit vector, inner map
    counts = [n for n in alg.blocks]
    eplus = standard_module(alg, counts)
    g = _blockwise_algebra_unitary(alg, rng)
    v = _left_multiplication_matrix(alg, counts, g.conj().T)
    endo = endomorphism_from_conjugation(eplus, v)
    inst = Instance(alg, {"E": eplus}, config=config)
    inst.endomorphism = ("E", endo.matrix)
    inst.vectors["xi"] = ("E", unit_vector_of_identity(alg, counts))
    return inst


def _direct_sum(mats: list[np.ndarray]) -> np.ndarray:
    total = sum(m.shape[0] for m in mats)
    out = np.zeros((total, total), dtype=complex)
    at = 0
    for m in mats:
        out[at : at + m.shape[0], at : at + m.shape[0]] = m
        at += m.shape[0]
    return out


def _blockwise_row_unitary(alg: Algebra, counts: list[int], rng: np.random.Generator) -> np.ndarray:
    """Unitary in the commutant: acts on the row index of each group."""
    return _direct_sum(
        [np.kron(random_unitary(rng, k), np.eye(n)) for k, n in zip(counts, alg.blocks)]
    )


def _blockwise_algebra_unitary(alg: Algebra, rng: np.random.Generator) -> np.ndarray:
    return alg.embed([random_unitary(rng, n) for n in alg.blocks])


def _left_multiplication_matrix(alg: Algebra, counts: list[int], g: np.ndarray) -> np.ndarray:
    """Left multiplication by an algebra element when the module is the
    algebra itself (row count equal to block size)."""
    if list(counts) != list(alg.blocks):
        raise InstanceFormatError("left multiplication needs the algebra over itself")
    blocks = alg.split(g)
    return _direct_sum([np.kron(b, np.eye(n)) for b, n in zip(blocks, alg.blocks)])
