"""Unital *-endomorphisms of the adjointable operators of a Hilbert module.

An endomorphism is given as a square matrix in the deterministic operator
basis computed by :func:`corrkit.hilbmod.adjointable_basis`.  From it the
package builds, for each time ``t >= 1``, the associated correspondence:
the conjugate carrier tensored with the carrier, reduced under the inner
product ``<x* (x) y, x'* (x) y'> = <y, theta^t(x x'*) y'>``, with left
action ``b . (x* (x) y) = (x b*)* (x) y`` and right action on the second
slot.  The identification unitaries between these realizations use the
type-checked product rule ``(x* . x') (x) (y* . y') -> x* . theta^t(x' y*) y'``,
and the action unitary ``u_t : E+ . E_t -> E+`` sends
``x (x) (y* . z)`` to ``theta^t(x y*) z`` and recovers the endomorphism as
``theta^t(a) = u_t (a . id) u_t*``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .algebra import DEFAULT_TOL
from .errors import (
    ConstructionError,
    InvalidPresentationError,
    PreconditionError,
)
from .hilbmod import (
    AdjointableOperator,
    Correspondence,
    FactorMap,
    ModulePresentation,
    _dev,
    _quotient,
    adjointable_basis,
    algebra_correspondence,
    amplify,
    compacts_span_check,
    fullness_check,
    internal_tensor,
    map_adjoint,
    null_space,
    rank_one_stack,
)
from .report import VerificationReport


@dataclass
class Endomorphism:
    """Linear map on the adjointable operators, in a fixed operator basis."""

    module: ModulePresentation
    ops: list[AdjointableOperator]
    matrix: np.ndarray  # (q, q); column i holds the coordinates of the image of ops[i]

    def __post_init__(self):
        q = len(self.ops)
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.shape != (q, q):
            raise InvalidPresentationError(
                f"endomorphism matrix of shape {self.matrix.shape}, expected {(q, q)}"
            )
        self._powers: dict[int, np.ndarray] = {}

    @cached_property
    def op_stack(self) -> np.ndarray:
        return np.stack([op.matrix for op in self.ops])

    @cached_property
    def _flat(self) -> np.ndarray:
        q = len(self.ops)
        return self.op_stack.reshape(q, -1)

    @cached_property
    def _pinv(self) -> np.ndarray:
        return np.linalg.pinv(self._flat.T)

    def power(self, t: int) -> np.ndarray:
        if t not in self._powers:
            self._powers[t] = np.linalg.matrix_power(self.matrix, t)
        return self._powers[t]

    def expand(self, a: np.ndarray) -> tuple[np.ndarray, float]:
        """Coordinates of a carrier operator in the basis, with residual."""
        coeffs = self._pinv @ a.reshape(-1)
        recon = (coeffs @ self._flat).reshape(a.shape)
        return coeffs, _dev(recon, a)

    def apply(self, a: np.ndarray, t: int = 1) -> np.ndarray:
        """Image of a carrier operator under the t-th iterate."""
        coeffs, _ = self.expand(a)
        out = self.power(t) @ coeffs
        return (out @ self._flat).reshape(a.shape)

    def image_ops(self, t: int) -> np.ndarray:
        """Images of the basis operators under the t-th iterate, stacked."""
        out = self.power(t).T @ self._flat
        return out.reshape(self.op_stack.shape)


def make_endomorphism(
    eplus: ModulePresentation,
    matrix: np.ndarray,
    ops: list[AdjointableOperator] | None = None,
    tol: float = DEFAULT_TOL,
) -> Endomorphism:
    """Attach an endomorphism matrix to the operator basis of a module."""
    if ops is None:
        ops = adjointable_basis(eplus, tol)
    return Endomorphism(eplus, ops, matrix)


def endomorphism_from_conjugation(
    eplus: ModulePresentation,
    v: np.ndarray,
    ops: list[AdjointableOperator] | None = None,
    tol: float = DEFAULT_TOL,
) -> Endomorphism:
    """The inner map ``a -> v a v^{-1}`` expressed in the operator basis."""
    if ops is None:
        ops = adjointable_basis(eplus, tol)
    vinv = np.linalg.inv(v)
    probe = Endomorphism(eplus, ops, np.eye(len(ops)))
    cols = []
    for op in ops:
        coeffs, resid = probe.expand(v @ op.matrix @ vinv)
        if resid > tol * max(1.0, float(np.abs(v).max()) ** 2):
            raise ConstructionError(
                "conjugation leaves the adjointable operators", residual=resid
            )
        cols.append(coeffs)
    return Endomorphism(eplus, ops, np.stack(cols, axis=1))


def validate_endomorphism(endo: Endomorphism, tol: float = DEFAULT_TOL) -> VerificationReport:
    """Multiplicativity, *-preservation, unitality, and the strictness certificate."""
    eplus = endo.module
    q = len(endo.ops)
    rep = VerificationReport(f"endomorphism checks (operator dimension {q})")
    stack = endo.op_stack
    images = endo.image_ops(1)

    closure = 0.0
    mult = 0.0
    for i in range(q):
        for j in range(q):
            prod = stack[i] @ stack[j]
            coeffs, resid = endo.expand(prod)
            closure = max(closure, resid)
            mult = max(mult, _dev(endo.apply(prod), images[i] @ images[j]))
    rep.add("operator-basis-closure", closure, tol)
    rep.add("endomorphism-multiplicative", mult, tol)

    star = max(
        _dev(endo.apply(op.adjoint), eplus.module_adjoint(images[i]))
        for i, op in enumerate(endo.ops)
    )
    rep.add("endomorphism-star", star, tol)
    rep.add("endomorphism-unital", _dev(endo.apply(np.eye(eplus.dim)), np.eye(eplus.dim)), tol)

    strict = compacts_span_check(eplus)
    rep.add_flag("strictness-compacts-span", strict)
    if strict:
        rep.detail = (
            "rank-one operators span all adjointable operators, so every "
            "unital endomorphism acts nondegenerately on the module"
        )
    return rep


# ---------------------------------------------------------------------------
# the associated correspondence
# ---------------------------------------------------------------------------

@dataclass
class AssociatedCorrespondence:
    """Reduced conjugate-tensor realization for one time step."""

    level: int
    corr: Correspondence
    factor: FactorMap | None      # from the m^2 conjugate-tensor carrier
    warnings: list[str] = field(default_factory=list)


def _theta_rank_ones(endo: Endomorphism, t: int) -> tuple[np.ndarray, float]:
    """Images ``theta^t(e_i e_j*)`` of all basis rank-ones, stacked (m,m,m,m)."""
    m = endo.module.dim
    flat = rank_one_stack(endo.module).reshape(m * m, m * m)
    coeffs = flat @ endo._pinv.T
    resid = _dev(coeffs @ endo._flat, flat)
    applied = coeffs @ endo.power(t).T @ endo._flat
    return applied.reshape(m, m, m, m), resid


def associated_correspondence(
    eplus: ModulePresentation,
    endo: Endomorphism,
    t: int,
    tol: float = DEFAULT_TOL,
) -> AssociatedCorrespondence:
    """Realize the correspondence carrying the t-th step of the semigroup.

    At ``t = 0`` the algebra itself is returned.  For ``t >= 1`` the
    conjugate-tensor carrier is reduced under the inner product
    ``<x* (x) y, x'* (x) y'> = <y, theta^t(x x'*) y'>``.
    """
    alg = eplus.algebra
    if t == 0:
        return AssociatedCorrespondence(0, algebra_correspondence(alg), None)
    warnings = []
    if not fullness_check(eplus):
        warnings.append("module is not full; the dual span may be degenerate")

    m = eplus.dim
    images, resid = _theta_rank_ones(endo, t)
    if resid > tol * max(1.0, float(np.abs(eplus.gram).max())):
        raise ConstructionError("rank-one operators leave the operator basis", residual=resid)

    gram = np.einsum("ikpl,jpab->ijklab", images, eplus.gram).reshape(
        m * m, m * m, alg.size, alg.size
    )
    right = np.stack([np.kron(np.eye(m), eplus.right_action[c]) for c in range(alg.dim)])
    star = alg.star_index
    left = np.stack(
        [np.kron(eplus.right_action[star[c]].conj(), np.eye(m)) for c in range(alg.dim)]
    )
    pre = Correspondence(alg, right, gram, left)
    reduced, proj = _quotient(pre, tol)
    return AssociatedCorrespondence(
        t, reduced, FactorMap(proj, (m, m), reduced), warnings
    )


def power_coherence(
    endo: Endomorphism,
    es: AssociatedCorrespondence,
    et: AssociatedCorrespondence,
    est: AssociatedCorrespondence,
    tol: float = DEFAULT_TOL,
) -> tuple[np.ndarray, VerificationReport]:
    """Identification realize(E_s . E_t) -> E_{s+t} via the product rule.

    On representatives the map sends ``(x* . x') (x) (y* . y')`` to
    ``x* . theta^t(x' y*) y'``; the report certifies that it preserves inner
    products (so the rule is the type-correct one) and is a bilinear unitary.
    """
    eplus = endo.module
    m = eplus.dim
    s, t = es.level, et.level
    if est.level != s + t or min(s, t) < 1:
        raise PreconditionError("power coherence needs levels s, t >= 1 with their sum realized")
    tensor, fm = internal_tensor(es.corr, et.corr, tol)
    images, _ = _theta_rank_ones(endo, t)

    block = np.zeros((m, m, m, m, m, m), dtype=complex)
    for i in range(m):
        block[i, :, i] = images.transpose(2, 0, 1, 3)  # [a, j, k, l] = theta^t(e_j e_k*)[a, l]
    bridge = block.reshape(m * m, m * m * m * m)

    u = (
        est.factor.matrix
        @ bridge
        @ np.kron(es.factor.section, et.factor.section)
        @ fm.section
    )
    rep = VerificationReport(f"power coherence [{s},{t}]")
    cod = est.corr
    transported = np.einsum("ui,vj,uvab->ijab", u.conj(), u, cod.gram)
    rep.add(f"product-rule-isometric[{s},{t}]", _dev(transported, tensor.gram), tol)
    if tensor.dim != cod.dim:
        rep.add_flag(f"product-rule-dimensions[{s},{t}]", False)
        return u, rep
    adj = map_adjoint(u, tensor, cod)
    rep.add(f"product-rule-unitary[{s},{t}]", max(
        _dev(adj @ u, np.eye(tensor.dim)), _dev(u @ adj, np.eye(cod.dim))
    ), tol)
    dev_bil = max(
        max(
            _dev(u @ tensor.right_action[c], cod.right_action[c] @ u),
            _dev(u @ tensor.left_action[c], cod.left_action[c] @ u),
        )
        for c in range(eplus.algebra.dim)
    )
    rep.add(f"product-rule-bilinear[{s},{t}]", dev_bil, tol)
    return u, rep


# ---------------------------------------------------------------------------
# the action unitary and recovery of the endomorphism
# ---------------------------------------------------------------------------

@dataclass
class ActionUnitary:
    """Unitary realize(E+ . E_t) -> E+ implementing the module action."""

    level: int
    matrix: np.ndarray
    tensor: ModulePresentation
    factor: FactorMap
    et: Correspondence
    report: VerificationReport


def u_unitary(
    eplus: ModulePresentation,
    endo: Endomorphism,
    t: int,
    et: AssociatedCorrespondence | None = None,
    tol: float = DEFAULT_TOL,
) -> ActionUnitary:
    """Build and verify ``u_t : x (x) (y* . z) -> theta^t(x y*) z``.

    Requires a full module; the recovery identity
    ``theta^t(a) = u_t (a . id) u_t*`` is verified over the operator basis.
    """
    if t < 1:
        raise PreconditionError("the action unitary is built for t >= 1")
    if not fullness_check(eplus):
        raise PreconditionError("the module must be full")
    if et is None:
        et = associated_correspondence(eplus, endo, t, tol)
    m = eplus.dim
    tensor, fm = internal_tensor(eplus, et.corr, tol)
    images, _ = _theta_rank_ones(endo, t)
    bridge = images.transpose(2, 0, 1, 3).reshape(m, m * m * m)  # [u,(i,k,l)]
    u = bridge @ np.kron(np.eye(m), et.factor.section) @ fm.section

    rep = VerificationReport(f"action unitary [t={t}]")
    transported = np.einsum("ui,vj,uvab->ijab", u.conj(), u, eplus.gram)
    iso_dev = _dev(transported, tensor.gram)
    rep.add(f"action-isometric[{t}]", iso_dev, tol)
    if iso_dev > tol:
        raise ConstructionError(
            f"action map at t={t} is not well defined", residual=iso_dev
        )
    if tensor.dim != m:
        raise ConstructionError(
            f"action map at t={t} is not surjective: tensor dimension "
            f"{tensor.dim} != {m}",
            residual=float(abs(tensor.dim - m)),
        )
    adj = map_adjoint(u, tensor, eplus)
    rep.add(f"action-unitary[{t}]", max(
        _dev(adj @ u, np.eye(tensor.dim)), _dev(u @ adj, np.eye(m))
    ), tol)
    rec = max(
        _dev(u @ amplify(op.matrix, fm, side="left") @ adj, endo.apply(op.matrix, t))
        for op in endo.ops
    )
    rep.add(f"recovery-identity[{t}]", rec, tol)
    return ActionUnitary(t, u, tensor, fm, et.corr, rep)


# ---------------------------------------------------------------------------
# intertwining isometries
# ---------------------------------------------------------------------------

@dataclass
class IntertwinerSearch:
    status: str                        # "found" | "none-exists" | "unknown"
    operator: AdjointableOperator | None
    certificate: str
    residuals: dict


def _isometry_defect(eplus: ModulePresentation, endo: Endomorphism, v: np.ndarray) -> float:
    images = endo.image_ops(1)
    inter = max(_dev(images[i] @ v, v @ op.matrix) for i, op in enumerate(endo.ops))
    return max(inter, _dev(eplus.module_adjoint(v) @ v, np.eye(eplus.dim)))


def find_intertwining_isometry(
    eplus: ModulePresentation,
    endo: Endomorphism,
    tol: float = DEFAULT_TOL,
    starts: int = 32,
) -> IntertwinerSearch:
    """Search for an isometry ``v`` with ``theta(a) v = v a``.

    The linear intertwiner space is computed exactly; one-dimensional spaces
    are settled in closed form, two-dimensional ones carry a determinant
    sampling certificate when every intertwiner is singular, and otherwise a
    seeded alternating projection between the intertwiner space and the
    isometries is attempted.
    """
    m = eplus.dim
    q = len(endo.ops)
    stack = endo.op_stack
    images = endo.image_ops(1)
    cols = []
    for w in range(q):
        rows = [(images[i] @ stack[w] - stack[w] @ stack[i]).reshape(-1) for i in range(q)]
        cols.append(np.concatenate(rows))
    system = np.stack(cols, axis=1)
    kernel = null_space(system)
    k = kernel.shape[1]
    if k == 0:
        return IntertwinerSearch("none-exists", None, "intertwiner-space-trivial", {})

    basis = np.einsum("wk,wuv->kuv", kernel, stack)  # (k, m, m)

    def assemble(c):
        return np.einsum("k,kuv->uv", c, basis)

    if k == 1:
        v0 = basis[0]
        g = eplus.module_adjoint(v0) @ v0
        lam = float(np.real(np.trace(g)) / m)
        if lam > tol and _dev(g, lam * np.eye(m)) <= tol * max(1.0, lam):
            v = v0 / np.sqrt(lam)
            defect = _isometry_defect(eplus, endo, v)
            if defect <= tol:
                return IntertwinerSearch(
                    "found", AdjointableOperator(v, eplus.module_adjoint(v)),
                    "one-dimensional-rescaling", {"defect": defect},
                )
        return IntertwinerSearch(
            "none-exists", None, "one-dimensional-space-not-scalable-to-isometry",
            {"length-defect": _dev(g, lam * np.eye(m))},
        )

    if k == 2:
        # determinant of c1 B1 + c2 B2 is a polynomial of degree <= m;
        # vanishing at m+2 generic samples means every intertwiner is singular
        samples = [np.array([1.0, 0.0])] + [
            np.array([np.exp(2j * np.pi * j / (m + 1)), 1.0]) for j in range(m + 1)
        ]
        scale = max(float(np.abs(b).max()) for b in basis)
        if all(
            np.linalg.svd(assemble(c), compute_uv=False)[-1] <= 1e-8 * max(1.0, scale)
            for c in samples
        ):
            return IntertwinerSearch(
                "none-exists", None, "every-intertwiner-singular", {"space-dimension": k}
            )

    sq, isq = eplus.scalar_sqrt, eplus.scalar_isqrt
    bcols = basis.reshape(k, -1).T  # columns spanning the intertwiner space
    proj = bcols @ np.linalg.pinv(bcols)

    def polar_iso(v):
        w = sq @ v @ isq
        uu, _, vh = np.linalg.svd(w)
        return isq @ (uu @ vh) @ sq

    rng = np.random.default_rng(11)
    for trial in range(starts):
        c = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        v = assemble(c / np.linalg.norm(c))
        best = np.inf
        for _ in range(400):
            v = polar_iso(v)
            v = (proj @ v.reshape(-1)).reshape(m, m)
            defect = _isometry_defect(eplus, endo, v)
            if defect <= tol:
                return IntertwinerSearch(
                    "found", AdjointableOperator(v, eplus.module_adjoint(v)),
                    "alternating-projection", {"defect": defect, "trial": trial},
                )
            if defect > best - 1e-15:
                break
            best = defect
    return IntertwinerSearch("unknown", None, "search-exhausted", {"space-dimension": k})


def isometry_from_unit(
    eplus: ModulePresentation,
    endo: Endomorphism,
    t: int,
    u_matrix: np.ndarray,
    tensor_factor: FactorMap,
    et: Correspondence,
    omega_t: np.ndarray,
    tol: float = DEFAULT_TOL,
) -> tuple[AdjointableOperator, VerificationReport]:
    """The intertwining isometry ``x -> u_t(x (x) omega_t)``.

    ``omega_t`` must be a central unital vector of the correspondence at
    level ``t``; the report verifies the isometry and intertwining relations.
    """
    omega_t = np.asarray(omega_t, dtype=complex)
    unit_dev = _dev(et.inner(omega_t, omega_t), eplus.algebra.unit)
    cent_dev = max(
        _dev(et.left_action[c] @ omega_t, et.right_action[c] @ omega_t)
        for c in range(eplus.algebra.dim)
    )
    if unit_dev > tol or cent_dev > tol:
        raise PreconditionError(
            f"vector is not central unital (unitality {unit_dev:.3e}, "
            f"centrality {cent_dev:.3e})"
        )
    m = eplus.dim
    v = u_matrix @ tensor_factor.matrix @ np.kron(np.eye(m), omega_t.reshape(-1, 1))
    rep = VerificationReport(f"intertwining isometry from unit [t={t}]")
    rep.add(f"isometry[{t}]", _dev(eplus.module_adjoint(v) @ v, np.eye(m)), tol)
    images = endo.image_ops(t)
    inter = max(
        _dev(images[i] @ v, v @ op.matrix) for i, op in enumerate(endo.ops)
    )
    rep.add(f"intertwining[{t}]", inter, tol)
    return AdjointableOperator(v, eplus.module_adjoint(v)), rep
