"""Hilbert modules and correspondences over a block-diagonal C*-algebra.

A module presentation is a finite carrier ``C^m`` together with

* a right action ``R``: for each algebra basis element a complex ``m x m``
  matrix acting on coordinate columns, so ``coords(x . b) = R(b) coords(x)``
  and consequently ``R(b b') = R(b') R(b)``;
* an algebra-valued Gram tensor ``gram[i, j] = <e_i, e_j>``, conjugate-linear
  in the first slot and linear in the second.

A correspondence adds a unital *-homomorphic left action ``L`` commuting
with ``R``.  All maps between presentations are plain matrices on carrier
coordinates.  The internal tensor product of a module with a correspondence
is realized by forming the algebraic tensor carrier with the balanced
pre-inner product ``<x (x) y, x' (x) y'> = <y, L(<x, x'>) y'>`` and then
quotienting out length-zero vectors; the quotient map is returned as a
:class:`FactorMap` with orthonormal rows, so its conjugate transpose is a
section.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .algebra import DEFAULT_TOL, Algebra
from .errors import (
    ConstructionError,
    IncompatibleOperandsError,
    InvalidPresentationError,
)
from .report import VerificationReport

RANK_RTOL = 1e-10


def _dev(a, b=None) -> float:
    arr = np.abs(np.asarray(a) - (0 if b is None else np.asarray(b)))
    return float(arr.max()) if arr.size else 0.0


def matrix_rank_tol(m: np.ndarray, rtol: float = RANK_RTOL) -> int:
    m = np.atleast_2d(np.asarray(m))
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def null_space(m: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis of the kernel, as columns."""
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    _, s, vh = np.linalg.svd(m, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        rank = 0
    else:
        rank = int(np.sum(s > rtol * s[0]))
    return vh[rank:].conj().T


def _canonical_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest entry is real positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        mags = np.abs(col)
        top = mags.max()
        if top == 0.0:
            continue
        k = int(np.nonzero(mags >= top * (1 - 1e-7))[0][0])
        out[:, j] = col * (np.conj(col[k]) / np.abs(col[k]))
    return out


def _lex_key(vec: np.ndarray) -> tuple:
    r = np.round(vec, 9) + 0.0
    return tuple(float(x) for pair in zip(r.real, r.imag) for x in pair)


@dataclass
class ModulePresentation:
    """Right Hilbert module over ``algebra`` on the carrier ``C^m``."""

    algebra: Algebra
    right_action: np.ndarray  # (d, m, m)
    gram: np.ndarray          # (m, m, n, n)

    def __post_init__(self):
        self.right_action = np.asarray(self.right_action, dtype=complex)
        self.gram = np.asarray(self.gram, dtype=complex)
        d, n, m = self.algebra.dim, self.algebra.size, self.dim
        if self.right_action.shape != (d, m, m):
            raise InvalidPresentationError(
                f"right action of shape {self.right_action.shape}, expected {(d, m, m)}"
            )
        if self.gram.shape != (m, m, n, n):
            raise InvalidPresentationError(
                f"gram of shape {self.gram.shape}, expected {(m, m, n, n)}"
            )

    @property
    def dim(self) -> int:
        return self.right_action.shape[1]

    @property
    def is_correspondence(self) -> bool:
        return isinstance(self, Correspondence)

    @cached_property
    def gram_coords(self) -> np.ndarray:
        """Gram entries in algebra coordinates, shape (m, m, d)."""
        return self.algebra.coords(self.gram)

    @cached_property
    def scalar_gram(self) -> np.ndarray:
        """State applied to the Gram: an ordinary PSD matrix on the carrier."""
        return np.trace(self.gram, axis1=2, axis2=3) / self.algebra.size

    @cached_property
    def _scalar_sqrts(self) -> tuple[np.ndarray, np.ndarray]:
        vals, vecs = np.linalg.eigh(self.scalar_gram)
        vals = np.clip(vals, 0.0, None)
        root = np.sqrt(vals)
        cutoff = (vals.max(initial=0.0)) * RANK_RTOL
        inv = np.where(vals > cutoff, 1.0 / np.where(vals > cutoff, root, 1.0), 0.0)
        make = lambda w: (vecs * w) @ vecs.conj().T
        return make(root), make(inv)

    @property
    def scalar_sqrt(self) -> np.ndarray:
        return self._scalar_sqrts[0]

    @property
    def scalar_isqrt(self) -> np.ndarray:
        return self._scalar_sqrts[1]

    # -- pointwise operations ----------------------------------------------

    def right_of(self, b: np.ndarray) -> np.ndarray:
        """Matrix of the right action of the algebra element ``b``."""
        return np.einsum("c,cuv->uv", self.algebra.coords(b), self.right_action)

    def inner(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Algebra-valued inner product ``<x, y>``."""
        return np.einsum("i,j,ijab->ab", np.conj(x), y, self.gram)

    def module_adjoint(self, a: np.ndarray) -> np.ndarray:
        """Adjoint with respect to the scalarized Gram."""
        return np.linalg.solve(self.scalar_gram, a.conj().T @ self.scalar_gram)

    def positivity_defect(self, a: np.ndarray) -> float:
        """How far the operator ``a`` is from being positive in B^a(E)."""
        w = self.scalar_sqrt @ a @ self.scalar_isqrt
        herm = _dev(w, w.conj().T)
        eigs = np.linalg.eigvalsh((w + w.conj().T) / 2.0)
        return max(herm, float(max(0.0, -eigs.min(initial=0.0))))


@dataclass
class Correspondence(ModulePresentation):
    """Module presentation with a unital adjointable left action."""

    left_action: np.ndarray = None  # (d, m, m)

    def __post_init__(self):
        super().__post_init__()
        if self.left_action is None:
            raise InvalidPresentationError("correspondence requires a left action")
        self.left_action = np.asarray(self.left_action, dtype=complex)
        if self.left_action.shape != self.right_action.shape:
            raise InvalidPresentationError(
                f"left action of shape {self.left_action.shape}, "
                f"expected {self.right_action.shape}"
            )

    def left_of(self, b: np.ndarray) -> np.ndarray:
        return np.einsum("c,cuv->uv", self.algebra.coords(b), self.left_action)


@dataclass
class AdjointableOperator:
    """Carrier map together with its algebra-valued adjoint."""

    matrix: np.ndarray
    adjoint: np.ndarray


@dataclass
class FactorMap:
    """Surjection from an algebraic tensor carrier onto its realization.

    The matrix has orthonormal rows, so ``section`` (the conjugate
    transpose) picks distinguished representatives.
    """

    matrix: np.ndarray
    source_dims: tuple[int, int]
    target: ModulePresentation

    @property
    def section(self) -> np.ndarray:
        return self.matrix.conj().T


def map_adjoint(v: np.ndarray, dom: ModulePresentation, cod: ModulePresentation) -> np.ndarray:
    """Adjoint of a map between presentations, via the scalarized Grams."""
    return np.linalg.solve(dom.scalar_gram, v.conj().T @ cod.scalar_gram)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validate_module(
    pres: ModulePresentation,
    tol: float = DEFAULT_TOL,
    *,
    check_nondegenerate: bool = True,
) -> VerificationReport:
    """Check every structural axiom of a module presentation.

    One named check per axiom; the left-action axioms are included exactly
    when the presentation is a correspondence.
    """
    alg = pres.algebra
    d, m = alg.dim, pres.dim
    rep = VerificationReport(f"module axioms (dim {m} over {list(alg.blocks)})")
    r = pres.right_action

    rep.add("right-action-unit", _dev(pres.right_of(alg.unit), np.eye(m)), tol)

    # R(b b') = R(b') R(b) on all basis pairs.
    prod = alg.basis_products  # (d, d, d) coordinates of basis[i] @ basis[j]
    lhs = np.einsum("ijc,cuv->ijuv", prod, r)
    rhs = np.einsum("juw,iwv->ijuv", r, r)
    rep.add("right-action-composition", _dev(lhs, rhs), tol)

    rep.add(
        "gram-hermitian",
        _dev(pres.gram.transpose(0, 1, 3, 2).conj(), pres.gram.transpose(1, 0, 2, 3)),
        tol,
    )

    off = np.where(alg.support_mask, 0.0, pres.gram).astype(complex)
    rep.add("gram-block-support", float(np.abs(off).max()) if off.size else 0.0, tol)

    # <e_i, e_j . b> = <e_i, e_j> b for every basis element b.
    lhs = np.einsum("clj,ilab->cijab", r, pres.gram)
    rhs = np.einsum("ijab,cbq->cijaq", pres.gram, alg.basis)
    rep.add("gram-right-linearity", _dev(lhs, rhs), tol)

    big = pres.gram.transpose(0, 2, 1, 3).reshape(m * alg.size, m * alg.size)
    if big.size:
        eigs = np.linalg.eigvalsh((big + big.conj().T) / 2.0)
        scale = max(1.0, float(eigs.max(initial=0.0)))
        rep.add("gram-positive", max(0.0, -float(eigs.min())), tol * scale)
    else:
        rep.add("gram-positive", 0.0, tol)

    if check_nondegenerate:
        s = pres.scalar_gram
        vals = np.linalg.eigvalsh((s + s.conj().T) / 2.0) if s.size else np.array([1.0])
        thresh = tol * max(float(vals.max(initial=0.0)), 0.0)
        rep.add("scalar-gram-nondegenerate", max(0.0, thresh - float(vals.min())), 0.0)

    if pres.is_correspondence:
        _validate_left_action(pres, rep, tol)
    return rep


def _validate_left_action(corr: Correspondence, rep: VerificationReport, tol: float) -> None:
    alg = corr.algebra
    m = corr.dim
    left = corr.left_action

    rep.add("left-action-unital", _dev(corr.left_of(alg.unit), np.eye(m)), tol)

    prod = alg.basis_products
    lhs = np.einsum("ijc,cuv->ijuv", prod, left)
    rhs = np.einsum("iuw,jwv->ijuv", left, left)
    rep.add("left-action-multiplicative", _dev(lhs, rhs), tol)

    # <L(b) e_i, e_j> = <e_i, L(b*) e_j>
    star = left[alg.star_index]
    lhs = np.einsum("cli,ljab->cijab", left.conj(), corr.gram)
    rhs = np.einsum("clj,ilab->cijab", star, corr.gram)
    rep.add("left-action-star", _dev(lhs, rhs), tol)

    comm = np.einsum("cuw,ewv->ceuv", left, corr.right_action) - np.einsum(
        "euw,cwv->ceuv", corr.right_action, left
    )
    rep.add("left-right-commute", float(np.abs(comm).max()) if comm.size else 0.0, tol)


def is_nondegenerate(pres: ModulePresentation, tol: float = DEFAULT_TOL) -> bool:
    s = pres.scalar_gram
    if s.size == 0:
        return True
    vals = np.linalg.eigvalsh((s + s.conj().T) / 2.0)
    return bool(vals.min() > tol * max(float(vals.max()), 0.0))


# ---------------------------------------------------------------------------
# quotient by length-zero vectors
# ---------------------------------------------------------------------------

def _quotient(pres: ModulePresentation, tol: float) -> tuple[ModulePresentation, np.ndarray]:
    """Realize the quotient by the kernel of the scalarized Gram.

    Returns the reduced presentation and the coordinate projection, a matrix
    with orthonormal rows preserving the algebra-valued inner product.
    Nondegenerate input is returned unchanged with the identity projection.
    """
    m = pres.dim
    s = (pres.scalar_gram + pres.scalar_gram.conj().T) / 2.0
    vals, vecs = np.linalg.eigh(s)
    lam_max = float(vals.max(initial=0.0))
    thresh = tol * max(lam_max, 0.0)
    if m and float(vals.min()) > thresh:
        return pres, np.eye(m, dtype=complex)

    keep = np.nonzero(vals > thresh)[0]
    kept = _canonical_phase(vecs[:, keep])
    # order kept eigenvectors by descending eigenvalue; break ties on the
    # rounded coordinate vectors so the realization is reproducible
    order = sorted(
        range(kept.shape[1]),
        key=lambda j: (-np.round(vals[keep[j]], 9), _lex_key(kept[:, j])),
    )
    kept = kept[:, order]
    proj = kept.conj().T  # (r, m)

    new_gram = np.einsum("ua,vb,uvxy->abxy", kept.conj(), kept, pres.gram)
    new_r = np.einsum("au,cuv,bv->cab", proj, pres.right_action, proj.conj())
    if pres.is_correspondence:
        new_l = np.einsum("au,cuv,bv->cab", proj, pres.left_action, proj.conj())
        reduced = Correspondence(pres.algebra, new_r, new_gram, new_l)
    else:
        reduced = ModulePresentation(pres.algebra, new_r, new_gram)
    return reduced, proj


def reduce_presentation(
    pres: ModulePresentation, tol: float = DEFAULT_TOL
) -> tuple[ModulePresentation, np.ndarray]:
    """Quotient a possibly degenerate presentation by its length-zero vectors.

    Every axiom except nondegeneracy must hold; otherwise the presentation
    is rejected.
    """
    rep = validate_module(pres, tol, check_nondegenerate=False)
    if not rep.passed:
        names = ", ".join(c.name for c in rep.failed_checks())
        raise InvalidPresentationError(f"axiom violations besides degeneracy: {names}")
    return _quotient(pres, tol)


# ---------------------------------------------------------------------------
# internal tensor product
# ---------------------------------------------------------------------------

def _require_same_algebra(e: ModulePresentation, f: ModulePresentation) -> None:
    if e.algebra.blocks != f.algebra.blocks:
        raise IncompatibleOperandsError(
            f"operands over different algebras: {list(e.algebra.blocks)} "
            f"vs {list(f.algebra.blocks)}"
        )


def tensor_pre_gram(e: ModulePresentation, f: Correspondence) -> np.ndarray:
    """Balanced pre-inner product on the algebraic tensor carrier."""
    lg = np.einsum("ikc,cpq->ikpq", e.gram_coords, f.left_action)
    pre = np.einsum("ikql,jqab->ijklab", lg, f.gram)
    me, mf = e.dim, f.dim
    n = e.algebra.size
    return pre.reshape(me * mf, me * mf, n, n)


def internal_tensor(
    e: ModulePresentation, f: ModulePresentation, tol: float = DEFAULT_TOL
) -> tuple[ModulePresentation, FactorMap]:
    """Internal tensor product of a module with a correspondence.

    The result is a correspondence exactly when the left factor is one; the
    returned factor map records the quotient from the algebraic tensor.
    """
    _require_same_algebra(e, f)
    if not f.is_correspondence:
        raise IncompatibleOperandsError("right tensor factor must be a correspondence")
    me, mf = e.dim, f.dim
    gram = tensor_pre_gram(e, f)
    right = np.stack([np.kron(np.eye(me), f.right_action[c]) for c in range(e.algebra.dim)])
    if e.is_correspondence:
        left = np.stack([np.kron(e.left_action[c], np.eye(mf)) for c in range(e.algebra.dim)])
        pre = Correspondence(e.algebra, right, gram, left)
    else:
        pre = ModulePresentation(e.algebra, right, gram)
    reduced, proj = _quotient(pre, tol)
    return reduced, FactorMap(proj, (me, mf), reduced)


# ---------------------------------------------------------------------------
# adjointable, rank-one and compact operators
# ---------------------------------------------------------------------------

def adjointable_basis(
    e: ModulePresentation, tol: float = DEFAULT_TOL
) -> list[AdjointableOperator]:
    """Deterministic basis of the adjointable operators on ``e``.

    Solves the commutant of the right action, computes each candidate's
    adjoint through the scalarized Gram, and keeps the candidates whose
    algebra-valued adjoint relation verifies.  The basis order is fixed by
    phase normalization and lexicographic sorting, so callers can address
    operators by index.
    """
    if not is_nondegenerate(e, tol):
        raise InvalidPresentationError("adjointable operators need a reduced presentation")
    m = e.dim
    eye = np.eye(m)
    rows = [np.kron(eye, rc.T) - np.kron(rc, eye) for rc in e.right_action]
    system = np.concatenate(rows, axis=0) if rows else np.zeros((0, m * m))
    kernel = null_space(system)
    kernel = _canonical_phase(kernel)
    cols = sorted(range(kernel.shape[1]), key=lambda j: _lex_key(kernel[:, j]))
    out = []
    scale = max(1.0, float(np.abs(e.gram).max(initial=0.0)))
    for j in cols:
        a = kernel[:, j].reshape(m, m)
        adj = e.module_adjoint(a)
        lhs = np.einsum("li,ljab->ijab", a.conj(), e.gram)
        rhs = np.einsum("lj,ilab->ijab", adj, e.gram)
        if _dev(lhs, rhs) <= tol * scale:
            out.append(AdjointableOperator(a, adj))
    return out


def rank_one(e: ModulePresentation, x: np.ndarray, y: np.ndarray) -> AdjointableOperator:
    """The operator ``z -> x <y, z>`` together with its adjoint ``y x*``."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if x.shape != (e.dim,) or y.shape != (e.dim,):
        raise IncompatibleOperandsError(
            f"vectors of shapes {x.shape}, {y.shape} on a carrier of dimension {e.dim}"
        )

    def mat(u, v):
        gy = np.einsum("l,ljc->jc", np.conj(v), e.gram_coords)
        return np.einsum("jc,cuw,w->uj", gy, e.right_action, u)

    return AdjointableOperator(mat(x, y), mat(y, x))


def rank_one_stack(e: ModulePresentation) -> np.ndarray:
    """All basis rank-one operators ``e_i e_j*`` as a (m, m, m, m) stack."""
    return np.einsum("jvc,cui->ijuv", e.gram_coords, e.right_action)


def compacts_span_check(e: ModulePresentation, rtol: float = RANK_RTOL) -> bool:
    """Whether the rank-one operators span all adjointable operators."""
    m = e.dim
    r1 = rank_one_stack(e).reshape(m * m, m * m)
    ops = adjointable_basis(e)
    if not ops:
        return m == 0
    stack = np.stack([op.matrix.reshape(-1) for op in ops])
    both = np.concatenate([r1, stack], axis=0)
    ranks = {matrix_rank_tol(r1, rtol), matrix_rank_tol(stack, rtol), matrix_rank_tol(both, rtol)}
    return len(ranks) == 1


def fullness_check(e: ModulePresentation, rtol: float = RANK_RTOL) -> bool:
    """Whether the inner products span the whole algebra."""
    m = e.dim
    coords = e.gram_coords.reshape(m * m, e.algebra.dim)
    return matrix_rank_tol(coords, rtol) == e.algebra.dim


def left_faithful_check(f: Correspondence, rtol: float = RANK_RTOL) -> bool:
    """Whether the left action annihilates only the zero element."""
    d = f.algebra.dim
    flat = f.left_action.reshape(d, -1)
    return matrix_rank_tol(flat, rtol) == d


# ---------------------------------------------------------------------------
# lifted maps and canonical identifications
# ---------------------------------------------------------------------------

def amplify(a: np.ndarray, fm: FactorMap, *, side: str = "left") -> np.ndarray:
    """Descend ``a (x) id`` (or ``id (x) a``) through a factor map."""
    me, mf = fm.source_dims
    if side == "left":
        k = np.kron(a, np.eye(mf))
    else:
        k = np.kron(np.eye(me), a)
    return fm.matrix @ k @ fm.section


def tensor_lift(
    v: np.ndarray, fm_dom: FactorMap, fm_cod: FactorMap, *, side: str = "left"
) -> np.ndarray:
    """Descend ``v (x) id`` (or ``id (x) v``) between two realized tensors."""
    if side == "left":
        other = fm_dom.source_dims[1]
        if fm_cod.source_dims[1] != other:
            raise IncompatibleOperandsError("lifted map does not match the shared factor")
        k = np.kron(v, np.eye(other))
    else:
        other = fm_dom.source_dims[0]
        if fm_cod.source_dims[0] != other:
            raise IncompatibleOperandsError("lifted map does not match the shared factor")
        k = np.kron(np.eye(other), v)
    return fm_cod.matrix @ k @ fm_dom.section


def left_unitor(f: Correspondence, fm: FactorMap) -> np.ndarray:
    """Canonical map realize(B (.) F) -> F, ``b (x) y -> L(b) y``."""
    c = f.left_action.transpose(1, 0, 2).reshape(f.dim, -1)
    return c @ fm.section


def right_unitor(e: ModulePresentation, fm: FactorMap) -> np.ndarray:
    """Canonical map realize(E (.) B) -> E, ``x (x) b -> x . b``."""
    c = e.right_action.transpose(1, 2, 0).reshape(e.dim, -1)
    return c @ fm.section


# ---------------------------------------------------------------------------
# associator
# ---------------------------------------------------------------------------

@dataclass
class AssociatorResult:
    """Rebracketing unitary realize((E.F).G) -> realize(E.(F.G))."""

    matrix: np.ndarray
    left_module: ModulePresentation
    left_factor: FactorMap      # over (E.F)-realized (x) G
    right_module: ModulePresentation
    right_factor: FactorMap     # over E (x) (F.G)-realized
    ef: tuple[ModulePresentation, FactorMap]
    fg: tuple[ModulePresentation, FactorMap]
    report: VerificationReport


def associator(
    e: ModulePresentation,
    f: Correspondence,
    g: Correspondence,
    tol: float = DEFAULT_TOL,
    *,
    ef: tuple[ModulePresentation, FactorMap] | None = None,
    fg: tuple[ModulePresentation, FactorMap] | None = None,
    t2: tuple[ModulePresentation, FactorMap] | None = None,
    t4: tuple[ModulePresentation, FactorMap] | None = None,
) -> AssociatorResult:
    """Compute and verify the canonical rebracketing unitary.

    Both iterated tensors are realized (reusing precomputed pieces when
    supplied) and the unitary is induced from the identity on the triple
    algebraic tensor through the two realization chains.
    """
    _require_same_algebra(e, f)
    _require_same_algebra(f, g)
    ef = ef or internal_tensor(e, f, tol)
    fg = fg or internal_tensor(f, g, tol)
    t2 = t2 or internal_tensor(ef[0], g, tol)
    t4 = t4 or internal_tensor(e, fg[0], tol)
    left_mod, p2 = t2
    right_mod, p4 = t4
    if left_mod.dim != right_mod.dim:
        raise ConstructionError(
            f"bracketings realize different dimensions {left_mod.dim} vs {right_mod.dim}",
            residual=abs(left_mod.dim - right_mod.dim),
        )
    a_left = p2.matrix @ np.kron(ef[1].matrix, np.eye(g.dim))
    a_right = p4.matrix @ np.kron(np.eye(e.dim), fg[1].matrix)
    alpha = a_right @ a_left.conj().T

    rep = VerificationReport("associator")
    transported = np.einsum("ui,vj,uvab->ijab", alpha.conj(), alpha, right_mod.gram)
    rep.add("associator-gram", _dev(transported, left_mod.gram), tol)
    adj = map_adjoint(alpha, left_mod, right_mod)
    rep.add("associator-unitary", max(
        _dev(adj @ alpha, np.eye(left_mod.dim)),
        _dev(alpha @ adj, np.eye(right_mod.dim)),
    ), tol)
    rep.add("associator-right-linear", max(
        _dev(alpha @ left_mod.right_action[c], right_mod.right_action[c] @ alpha)
        for c in range(e.algebra.dim)
    ), tol)
    if left_mod.is_correspondence and right_mod.is_correspondence:
        rep.add("associator-left-linear", max(
            _dev(alpha @ left_mod.left_action[c], right_mod.left_action[c] @ alpha)
            for c in range(e.algebra.dim)
        ), tol)
    return AssociatorResult(alpha, left_mod, p2, right_mod, p4, ef, fg, rep)


# ---------------------------------------------------------------------------
# the algebra as a correspondence over itself
# ---------------------------------------------------------------------------

def algebra_correspondence(alg: Algebra) -> Correspondence:
    """The algebra as a correspondence over itself: ``<a, b> = a* b``."""
    prod = alg.basis_products  # coordinates of basis[i] @ basis[j]
    right = prod.transpose(1, 2, 0)  # right[c][w, u] = coords(basis_u basis_c)[w]
    left = prod.transpose(0, 2, 1)   # left[c][w, u] = coords(basis_c basis_u)[w]
    gram = np.einsum("iba,jbc->ijac", alg.basis.conj(), alg.basis)
    return Correspondence(alg, np.ascontiguousarray(right), gram, np.ascontiguousarray(left))
