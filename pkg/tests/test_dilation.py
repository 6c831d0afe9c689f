import numpy as np
import pytest

from corrkit.algebra import make_algebra
from corrkit.dilation import (
    DilationPipeline,
    build_action_stages,
    build_w,
    compare_unit_limits,
    left_limit,
    primary_check,
    primary_span_ranks,
    right_limit,
    spatiality_report,
    unit_pairing_check,
    verify_main,
    verify_supplement,
    weak_dilation_check,
)
from corrkit.endo import make_endomorphism
from corrkit.errors import PreconditionError
from corrkit.gallery import (
    block_collapse_instance,
    doubled_swap_correspondence,
    endomorphism_gallery,
    identity_mixed_instance,
    identity_scalar_instance,
    inner_rotation_instance,
    plane_correspondence,
    standard_module,
    weak_dilation_gallery,
)
from corrkit.hilbmod import adjointable_basis, algebra_correspondence
from corrkit.prodsys import build_powers, find_central_unital_unit

from conftest import TOL, max_dev


# ---------------------------------------------------------------------------
# truncated limits
# ---------------------------------------------------------------------------

def test_right_limit_over_algebra():
    alg = make_algebra([1, 2])
    ps = build_powers(algebra_correspondence(alg), 4)
    lim = right_limit(ps, alg.coords(alg.unit))
    assert lim.report.passed
    assert lim.report.max_deviation < TOL


def test_right_limit_plane_doubling():
    ps = build_powers(plane_correspondence(), 4)
    lim = right_limit(ps, np.array([1.0, 0.0]))
    assert lim.report.passed
    assert [e.shape for e in lim.embeddings] == [(2, 1), (4, 2), (8, 4), (16, 8)]


def test_right_limit_increasing_with_eigen_oracle():
    rng = np.random.default_rng(5)
    ps = build_powers(plane_correspondence(), 3)
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    v = v / np.linalg.norm(v)
    lim = right_limit(ps, v)
    assert lim.report.passed
    # oracle: sampled expectation values of the projection difference
    from corrkit.hilbmod import amplify, map_adjoint, rank_one

    unit = lim.unit
    e1, e2 = ps.power(1), ps.power(2)
    p1 = rank_one(e1, unit.levels[1], unit.levels[1]).matrix
    u = ps.u(1, 1)
    lifted = u @ amplify(p1, ps.tensor(1, 1)[1], side="left") @ map_adjoint(
        u, ps.tensor(1, 1)[0], e2
    )
    diff = lifted - rank_one(e2, unit.levels[2], unit.levels[2]).matrix
    s = e2.scalar_gram
    for _ in range(50):
        x = rng.standard_normal(e2.dim) + 1j * rng.standard_normal(e2.dim)
        val = np.real(x.conj() @ s @ diff @ x)
        assert val >= -1e-9


def test_right_limit_needs_unital_unit():
    ps = build_powers(plane_correspondence(), 3)
    with pytest.raises(PreconditionError):
        right_limit(ps, np.array([2.0, 0.0]))


def test_left_limit_over_algebra():
    alg = make_algebra([1, 2])
    ps = build_powers(algebra_correspondence(alg), 4)
    search = find_central_unital_unit(ps.generator)
    lim = left_limit(ps, search.vector)
    assert lim.report.passed
    names = {c.name for c in lim.report.checks}
    assert "central-vector-expectation[4]" in names
    assert "left-faithful[4]" in names


def test_left_limit_rejects_noncentral_vector():
    ps = build_powers(doubled_swap_correspondence(), 2)
    # unital but not central: supported on the swapped copy
    with pytest.raises(PreconditionError):
        left_limit(ps, np.array([0.0, 0.0, 1.0, 1.0]))


# ---------------------------------------------------------------------------
# staged unitaries
# ---------------------------------------------------------------------------

def test_staged_unitaries_identity_instance():
    inst = identity_mixed_instance()
    pipe = DilationPipeline(inst.eplus, inst.endo, levels=4)
    w, rep = pipe.w()
    assert rep.passed
    assert rep.max_deviation < TOL
    names = {c.name for c in rep.checks}
    assert "w-identity[0]" in names
    assert "w-semigroup[1,1,1]" in names
    assert "w-embedding-square[1,1]" in names


def test_staged_unitaries_rotation_instance():
    inst = inner_rotation_instance()
    pipe = DilationPipeline(inst.eplus, inst.endo, levels=4)
    _, rep = pipe.w()
    assert rep.passed, [c.name for c in rep.failed_checks()]


def test_w_requires_spatial_instance():
    inst = block_collapse_instance()
    pipe = DilationPipeline(inst.eplus, inst.endo, levels=3)
    with pytest.raises(PreconditionError) as err:
        pipe.w()
    assert "non-spatial" in str(err.value)


# ---------------------------------------------------------------------------
# main verification
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("inst", endomorphism_gallery(), ids=lambda i: i.name)
def test_verify_main_over_gallery(inst):
    rep = verify_main(inst.eplus, inst.endo, levels=4)
    if inst.spatial:
        assert rep.status == "pass", [c.name for c in rep.failed_checks()]
        assert rep.max_deviation < TOL
    else:
        assert rep.status == "not-applicable"
        assert "not applicable (non-spatial)" in rep.detail


def test_verify_main_independent_of_basis_order():
    inst = identity_mixed_instance()
    rep1 = verify_main(inst.eplus, inst.endo, levels=3)
    ops = adjointable_basis(inst.eplus)
    perm = list(reversed(range(len(ops))))
    permuted_ops = [ops[i] for i in perm]
    p = np.zeros((len(ops), len(ops)))
    for new, old in enumerate(perm):
        p[new, old] = 1.0
    matrix = p @ inst.endo.matrix @ p.T
    endo = make_endomorphism(inst.eplus, matrix, permuted_ops)
    rep2 = verify_main(inst.eplus, endo, levels=3)
    assert rep1.status == rep2.status == "pass"
    assert rep2.max_deviation < TOL


def test_restriction_chain_checked_independently():
    inst = inner_rotation_instance()
    rep = verify_main(inst.eplus, inst.endo, levels=3)
    names = {c.name for c in rep.checks}
    assert "restriction-identity[1,1]" in names
    assert "restriction-chain-agree[1,2]" in names
    assert "amplification-injective[3]" in names


# ---------------------------------------------------------------------------
# weak dilations and the vector expectation
# ---------------------------------------------------------------------------

def test_weak_dilation_identity():
    inst = identity_mixed_instance()
    wd = weak_dilation_check(inst.eplus, inst.endo, inst.unit_vectors["xi"], levels=4)
    assert wd.ok
    alg = inst.eplus.algebra
    for t in wd.cp_matrices:
        assert max_dev(t, np.eye(alg.dim)) < TOL


def test_weak_dilation_rotation_nontrivial():
    inst = inner_rotation_instance()
    wd = weak_dilation_check(inst.eplus, inst.endo, inst.unit_vectors["xi"], levels=4)
    assert wd.ok
    assert max_dev(wd.cp_matrices[0], np.eye(inst.eplus.algebra.dim)) > 1e-3


def test_weak_dilation_rotation_closed_form():
    """For conjugation by left multiplication with a unitary g*, the
    compression at the identity vector is b -> g* b g; the pipeline must
    reproduce that closed form at every level."""
    angle = np.pi / 5
    inst = inner_rotation_instance(angle)
    alg = inst.eplus.algebra
    g = np.array(
        [[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]], dtype=complex
    )
    wd = weak_dilation_check(inst.eplus, inst.endo, inst.unit_vectors["xi"], levels=4)
    for t, tmat in enumerate(wd.cp_matrices, start=1):
        gt = np.linalg.matrix_power(g, t)
        cols = []
        for c in range(alg.dim):
            block = alg.split(alg.basis[c])[0]
            cols.append(alg.coords(alg.embed([gt.conj().T @ block @ gt])))
        assert max_dev(tmat, np.stack(cols, axis=1)) < TOL


def test_weak_dilation_needs_unit_vector():
    inst = identity_mixed_instance()
    with pytest.raises(PreconditionError):
        weak_dilation_check(inst.eplus, inst.endo, 2.0 * inst.unit_vectors["xi"])


@pytest.mark.parametrize("pair", weak_dilation_gallery(), ids=lambda p: p[0].name)
def test_verify_supplement_gallery(pair):
    inst, xi = pair
    rep = verify_supplement(inst.eplus, inst.endo, xi, levels=4)
    assert rep.status == "pass", [c.name for c in rep.failed_checks()]
    assert rep.max_deviation < TOL
    names = {c.name for c in rep.checks}
    assert "expectation-identity[1,0]" in names
    assert "dilation-diagram[1,1]" in names
    assert "filtration-projection[2,1]" in names


def test_weak_dilation_fails_when_projection_moves():
    # the collapse sends this vector projection to an incomparable one
    inst = block_collapse_instance()
    xi = np.array([1.0, 0.0, 0.0, 1.0])
    wd = weak_dilation_check(inst.eplus, inst.endo, xi, levels=3)
    assert not wd.ok
    failed = {c.name for c in wd.report.failed_checks()}
    assert any(name.startswith("projection-increasing") for name in failed)
    # the expectation verifier treats this as a precondition failure
    with pytest.raises(PreconditionError, match="not a weak dilation"):
        verify_supplement(inst.eplus, inst.endo, xi, levels=3)


def test_collapse_carries_idempotent_compression():
    """With both rows aligned the collapse fixes the vector projection and
    compresses to a nontrivial idempotent map; the expectation checks are
    still not applicable because the instance is non-spatial."""
    inst = block_collapse_instance()
    xi = np.array([1.0, 0.0, 1.0, 0.0])
    wd = weak_dilation_check(inst.eplus, inst.endo, xi, levels=3)
    assert wd.ok
    t1 = wd.cp_matrices[0]
    assert max_dev(t1 @ t1, t1) < TOL
    assert max_dev(t1, np.eye(2)) > 0.5
    rep = verify_supplement(inst.eplus, inst.endo, xi, levels=3)
    assert rep.status == "not-applicable"


# ---------------------------------------------------------------------------
# primary dilations
# ---------------------------------------------------------------------------

def test_primary_for_algebra_module():
    inst = identity_mixed_instance()
    assert primary_check(inst.eplus, inst.endo, inst.unit_vectors["xi"], levels=4)


def test_not_primary_on_larger_module():
    inst = identity_scalar_instance()
    assert not primary_check(inst.eplus, inst.endo, inst.unit_vectors["xi"], levels=4)
    assert primary_span_ranks(inst.eplus, inst.endo, inst.unit_vectors["xi"], 4) == [1] * 5


def test_primary_ranks_on_collapse_by_oracle():
    inst = block_collapse_instance()
    xi = np.array([1.0, 0.0, 1.0, 0.0])
    ranks = primary_span_ranks(inst.eplus, inst.endo, xi, levels=3)
    # by hand: the moved projections keep their ranges inside two coordinates
    assert ranks == [2, 2, 2, 2]
    assert not primary_check(inst.eplus, inst.endo, xi, levels=3)


# ---------------------------------------------------------------------------
# unit pairing
# ---------------------------------------------------------------------------

def test_unit_pairing_equal_units():
    alg = make_algebra([1, 2])
    ps = build_powers(algebra_correspondence(alg), 4)
    one = alg.coords(alg.unit)
    rep = unit_pairing_check(ps, one, one)
    assert rep.passed
    names = {c.name for c in rep.checks}
    assert "unit-coincide[4]" in names and "projection-equal[2]" in names


def test_unit_pairing_vacuous_branch():
    ps = build_powers(plane_correspondence(), 3)
    rep = unit_pairing_check(ps, np.array([0.0, 1.0]), np.array([1.0, 0.0]))
    assert rep.passed
    assert any(c.name == "pairing-vacuous" for c in rep.checks)
    assert "vacuous" in rep.detail


def test_unit_pairing_orthogonal_perturbation_forces_zero():
    """A unit pairing to the identity against a central unit must equal it:
    perturbing orthogonally breaks unitality unless the perturbation is zero."""
    e1 = plane_correspondence()
    ps = build_powers(e1, 3)
    omega = np.array([1.0, 0.0])
    v = np.array([0.0, 1.0])
    assert max_dev(e1.inner(omega, v), 0) == 0.0
    for eps in (1.0, 0.1):
        xi = omega + eps * v
        norm_defect = max_dev(e1.inner(xi, xi), np.eye(1))
        assert norm_defect > 1e-6  # unitality forces the perturbation to vanish
        with pytest.raises(PreconditionError):
            unit_pairing_check(ps, xi, omega)
    rep = unit_pairing_check(ps, omega, omega)
    assert rep.passed
    assert any(c.name == "unit-coincide[3]" for c in rep.checks)


def test_unit_pairing_rejects_bad_flags():
    ps = build_powers(plane_correspondence(), 2)
    with pytest.raises(PreconditionError):
        unit_pairing_check(ps, np.array([2.0, 0.0]), np.array([1.0, 0.0]))


# ---------------------------------------------------------------------------
# comparing limits over two units
# ---------------------------------------------------------------------------

def test_compare_units_identity():
    ps = build_powers(plane_correspondence(), 3)
    xi = np.array([1.0, 0.0])
    out = compare_unit_limits(ps, xi, xi)
    assert out.verdict == "automorphism-found"
    assert out.report.passed


def test_compare_units_coordinate_swap():
    ps = build_powers(plane_correspondence(), 3)
    out = compare_unit_limits(ps, np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert out.verdict == "automorphism-found"
    assert out.report.passed
    assert max_dev(out.unitary @ np.array([1.0, 0.0]), np.array([0.0, 1.0])) < TOL


def test_compare_units_distinct_compressions():
    ps = build_powers(doubled_swap_correspondence(), 3)
    out = compare_unit_limits(
        ps, np.array([1.0, 1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0, 1.0])
    )
    assert out.verdict == "necessary-condition-fails"
    assert "refutes only the automorphism route" in out.report.detail


# ---------------------------------------------------------------------------
# spatiality report
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("inst", endomorphism_gallery(), ids=lambda i: i.name)
def test_spatiality_report_gallery(inst):
    status, rep = spatiality_report(inst.eplus, inst.endo, levels=3)
    assert status == ("found" if inst.spatial else "none-exists")
    assert rep.passed, [c.name for c in rep.failed_checks()]
    if inst.spatial:
        names = {c.name for c in rep.checks}
        assert "isometry[3]" in names
        assert "isometry-semigroup[1,2]" in names
        assert "fullness-necessary-condition" in names
