"""Named desk-scale instances used by the test suite, docs, and generators.

Modules over a block algebra are built in a standard form: the carrier is a
direct sum of row spaces, one group of ``k_i`` rows of length ``n_i`` per
algebra block, with blockwise matrix multiplication from the right and the
blockwise ``x* y`` Gram.  Left actions come from a multiplicity matrix
assigning algebra blocks to operator blocks.  A unitary change of basis
produces presentations with no visible block structure while preserving
every axiom exactly.

In finite dimensions an intertwining isometry is automatically unitary, so
an endomorphism semigroup admits a central unital unit exactly when it is
inner; the gallery therefore pairs inner instances (spatial) with a
block-collapsing and an outer automorphism instance (certified non-spatial).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import Algebra, make_algebra
from .endo import Endomorphism, endomorphism_from_conjugation, make_endomorphism
from .errors import InvalidPresentationError
from .hilbmod import (
    Correspondence,
    ModulePresentation,
    adjointable_basis,
    algebra_correspondence,
)


def standard_module(
    alg: Algebra,
    row_counts: list[int],
    multiplicities: list[list[int]] | None = None,
) -> ModulePresentation | Correspondence:
    """Blockwise row-space module, optionally with a multiplicity left action.

    ``row_counts[i]`` rows of length ``blocks[i]`` form the i-th carrier
    group.  When ``multiplicities`` is given, group ``i`` must decompose as
    ``sum_j multiplicities[i][j] * blocks[j]`` rows and the left action
    embeds algebra block ``j`` with that multiplicity.
    """
    if len(row_counts) != len(alg.blocks):
        raise InvalidPresentationError("one row count per algebra block is required")
    index = []
    for i, (k, n) in enumerate(zip(row_counts, alg.blocks)):
        for r in range(k):
            for c in range(n):
                index.append((i, r, c))
    m = len(index)
    pos = {key: w for w, key in enumerate(index)}
    rows_of, cols_of = alg.basis_positions
    d = alg.dim

    right = np.zeros((d, m, m), dtype=complex)
    block_of = []
    offset = 0
    for i, n in enumerate(alg.blocks):
        block_of.extend([i] * (n * n))
        offset += n * n
    starts = np.cumsum([0] + list(alg.blocks))
    for kappa in range(d):
        b = block_of[kappa]
        p = rows_of[kappa] - starts[b]
        q = cols_of[kappa] - starts[b]
        for r in range(row_counts[b]):
            right[kappa, pos[(b, r, q)], pos[(b, r, p)]] = 1.0

    gram = np.zeros((m, m, alg.size, alg.size), dtype=complex)
    for w, (i, r, c) in enumerate(index):
        for w2, (i2, r2, c2) in enumerate(index):
            if i == i2 and r == r2:
                gram[w, w2, starts[i] + c, starts[i2] + c2] = 1.0

    if multiplicities is None:
        return ModulePresentation(alg, right, gram)

    left = np.zeros((d, m, m), dtype=complex)
    for i, k in enumerate(row_counts):
        if sum(mu * n for mu, n in zip(multiplicities[i], alg.blocks)) != k:
            raise InvalidPresentationError(
                f"row group {i} of size {k} does not match its multiplicities"
            )
        segments = []  # (algebra block j, copy, local row) in order
        for j, n in enumerate(alg.blocks):
            for copy in range(multiplicities[i][j]):
                for p in range(n):
                    segments.append((j, copy, p))
        for kappa in range(d):
            b = block_of[kappa]
            p = rows_of[kappa] - starts[b]
            q = cols_of[kappa] - starts[b]
            for ridx, (j, copy, local) in enumerate(segments):
                if j == b and local == q:
                    target = segments.index((j, copy, p))
                    for c in range(alg.blocks[i]):
                        left[kappa, pos[(i, target, c)], pos[(i, ridx, c)]] = 1.0
    return Correspondence(alg, right, gram, left)


def conjugated(pres: ModulePresentation, u: np.ndarray):
    """Unitary change of carrier basis; preserves every axiom exactly."""
    uh = u.conj().T
    right = np.einsum("au,cuv,vb->cab", uh, pres.right_action, u)
    gram = np.einsum("ua,vb,uvxy->abxy", u.conj(), u, pres.gram)
    if pres.is_correspondence:
        left = np.einsum("au,cuv,vb->cab", uh, pres.left_action, u)
        return Correspondence(pres.algebra, right, gram, left)
    return ModulePresentation(pres.algebra, right, gram)


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def unit_vector_of_identity(alg: Algebra, row_counts: list[int]) -> np.ndarray:
    """Coordinates of the identity when the module is the algebra itself."""
    if list(row_counts) != list(alg.blocks):
        raise InvalidPresentationError("the module is not the algebra over itself")
    out = []
    for n in alg.blocks:
        block = np.eye(n, dtype=complex).reshape(-1)
        out.append(block)
    return np.concatenate(out)


# ---------------------------------------------------------------------------
# correspondences for product-system experiments
# ---------------------------------------------------------------------------

def block_swap_correspondence() -> Correspondence:
    """The algebra over two scalar blocks with the left action swapped."""
    alg = make_algebra([1, 1])
    e0 = algebra_correspondence(alg)
    return Correspondence(alg, e0.right_action, e0.gram, e0.left_action[[1, 0]])


def plane_correspondence() -> Correspondence:
    """Two-dimensional space over the scalars with trivial actions."""
    alg = make_algebra([1])
    eye = np.eye(2, dtype=complex)[None, :, :]
    return Correspondence(alg, eye.copy(), np.eye(2, dtype=complex).reshape(2, 2, 1, 1), eye.copy())


def doubled_swap_correspondence() -> Correspondence:
    """Two copies of the algebra over two scalar blocks, one with the
    left action swapped; its unital units generate different compressions."""
    alg = make_algebra([1, 1])
    e0 = algebra_correspondence(alg)
    d = alg.dim
    right = np.zeros((d, 4, 4), dtype=complex)
    left = np.zeros((d, 4, 4), dtype=complex)
    gram = np.zeros((4, 4, 2, 2), dtype=complex)
    swapped = e0.left_action[[1, 0]]
    for c in range(d):
        right[c][:2, :2] = e0.right_action[c]
        right[c][2:, 2:] = e0.right_action[c]
        left[c][:2, :2] = e0.left_action[c]
        left[c][2:, 2:] = swapped[c]
    gram[:2, :2] = e0.gram
    gram[2:, 2:] = e0.gram
    return Correspondence(alg, right, gram, left)


# ---------------------------------------------------------------------------
# endomorphism instances
# ---------------------------------------------------------------------------

@dataclass
class EndomorphismInstance:
    name: str
    eplus: ModulePresentation
    endo: Endomorphism
    spatial: bool
    unit_vectors: dict[str, np.ndarray] = field(default_factory=dict)


def _endo_from_carrier_map(eplus, mapping, ops=None) -> Endomorphism:
    """Express an abstract operator map through the computed basis."""
    if ops is None:
        ops = adjointable_basis(eplus)
    probe = make_endomorphism(eplus, np.eye(len(ops)), ops)
    cols = []
    for op in ops:
        coeffs, resid = probe.expand(mapping(op.matrix))
        if resid > 1e-9:
            raise InvalidPresentationError("map leaves the adjointable operators")
        cols.append(coeffs)
    return Endomorphism(eplus, ops, np.stack(cols, axis=1))


def identity_scalar_instance() -> EndomorphismInstance:
    alg = make_algebra([1])
    eplus = standard_module(alg, [2])
    ops = adjointable_basis(eplus)
    endo = make_endomorphism(eplus, np.eye(len(ops)), ops)
    xi = np.zeros(2, dtype=complex)
    xi[0] = 1.0
    return EndomorphismInstance("identity-scalar", eplus, endo, True, {"xi": xi})


def identity_mixed_instance() -> EndomorphismInstance:
    alg = make_algebra([1, 2])
    eplus = standard_module(alg, list(alg.blocks))
    ops = adjointable_basis(eplus)
    endo = make_endomorphism(eplus, np.eye(len(ops)), ops)
    one = unit_vector_of_identity(alg, list(alg.blocks))
    return EndomorphismInstance("identity-mixed", eplus, endo, True, {"xi": one})


def inner_rotation_instance(angle: float = np.pi / 5) -> EndomorphismInstance:
    """Conjugation by left multiplication with a noncentral unitary.

    Spatial, and the distinguished unit vector compresses it to a
    nontrivial automorphism semigroup of the base algebra.
    """
    alg = make_algebra([2])
    eplus = standard_module(alg, [2])
    g = np.array(
        [[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]], dtype=complex
    )
    v = np.kron(g.conj().T, np.eye(2))  # left multiplication by g* on row coordinates
    endo = endomorphism_from_conjugation(eplus, v)
    one = unit_vector_of_identity(alg, [2])
    return EndomorphismInstance("inner-rotation", eplus, endo, True, {"xi": one})


def inner_two_block_instance(seed: int = 5) -> EndomorphismInstance:
    """Conjugation by a seeded unitary on a two-block operator algebra."""
    alg = make_algebra([1, 1])
    eplus = standard_module(alg, [2, 2])
    rng = np.random.default_rng(seed)
    v = np.zeros((4, 4), dtype=complex)
    v[:2, :2] = random_unitary(rng, 2)
    v[2:, 2:] = random_unitary(rng, 2)
    endo = endomorphism_from_conjugation(eplus, v)
    return EndomorphismInstance("inner-two-block", eplus, endo, True, {})


def block_collapse_instance() -> EndomorphismInstance:
    """Proper endomorphism collapsing both operator blocks onto the second.

    Not injective, hence certified non-spatial; the recovery identity and
    the associated product system remain fully verifiable.
    """
    alg = make_algebra([1, 1])
    eplus = standard_module(alg, [2, 2])

    def collapse(a):
        out = np.zeros_like(a)
        out[:2, :2] = a[2:, 2:]
        out[2:, 2:] = a[2:, 2:]
        return out

    endo = _endo_from_carrier_map(eplus, collapse)
    return EndomorphismInstance("block-collapse", eplus, endo, False, {})


def outer_swap_instance() -> EndomorphismInstance:
    """The flip automorphism of a two-block commutative operator algebra.

    An automorphism, but not inner, hence certified non-spatial.
    """
    alg = make_algebra([1, 1])
    eplus = standard_module(alg, [1, 1])

    def swap(a):
        out = np.zeros_like(a)
        out[0, 0] = a[1, 1]
        out[1, 1] = a[0, 0]
        return out

    endo = _endo_from_carrier_map(eplus, swap)
    return EndomorphismInstance("outer-swap", eplus, endo, False, {})


def endomorphism_gallery() -> list[EndomorphismInstance]:
    return [
        identity_scalar_instance(),
        identity_mixed_instance(),
        inner_rotation_instance(),
        inner_two_block_instance(),
        block_collapse_instance(),
        outer_swap_instance(),
    ]


def weak_dilation_gallery() -> list[tuple[EndomorphismInstance, np.ndarray]]:
    """Instances carrying a distinguished unit vector; the rotation one
    compresses to a nontrivial semigroup."""
    out = []
    for inst in (identity_scalar_instance(), identity_mixed_instance(), inner_rotation_instance()):
        out.append((inst, inst.unit_vectors["xi"]))
    return out
