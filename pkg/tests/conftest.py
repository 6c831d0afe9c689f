"""Shared fixtures and independent oracles for the test suite.

Oracles here recompute quantities by explicit loops and SVD-based ranks,
independently of the vectorized library paths they check.
"""
from __future__ import annotations

import numpy as np
import pytest

from corrkit.algebra import Algebra, make_algebra
from corrkit.gallery import (
    block_swap_correspondence,
    conjugated,
    random_unitary,
    standard_module,
)
from corrkit.hilbmod import Correspondence, ModulePresentation, algebra_correspondence

ALGEBRA_SIGNATURES = ([1], [2], [1, 1], [1, 2])
TOL = 1e-9


@pytest.fixture(scope="session")
def algebras():
    return {tuple(sig): make_algebra(sig) for sig in ALGEBRA_SIGNATURES}


def seeded_module(seed: int) -> ModulePresentation:
    """Deterministic plain module over the cycling algebra list."""
    rng = np.random.default_rng(seed)
    alg = make_algebra(ALGEBRA_SIGNATURES[seed % len(ALGEBRA_SIGNATURES)])
    counts = [int(rng.integers(1, 3)) for _ in alg.blocks]
    pres = standard_module(alg, [k * n for k, n in zip(counts, alg.blocks)])
    return conjugated(pres, random_unitary(rng, pres.dim))


def seeded_correspondence(seed: int) -> Correspondence:
    """Deterministic correspondence over the same algebra as seeded_module(seed)."""
    rng = np.random.default_rng(1000 + seed)
    alg = make_algebra(ALGEBRA_SIGNATURES[seed % len(ALGEBRA_SIGNATURES)])
    mult = []
    for _ in alg.blocks:
        row = [int(rng.integers(0, 2)) for _ in alg.blocks]
        if not any(row):
            row[int(rng.integers(0, len(alg.blocks)))] = 1
        mult.append(row)
    counts = [sum(mu * n for mu, n in zip(row, alg.blocks)) for row in mult]
    pres = standard_module(alg, counts, multiplicities=mult)
    return conjugated(pres, random_unitary(rng, pres.dim))


def small_generator(seed: int) -> Correspondence:
    """Seeded correspondences safe as level-4 product-system generators."""
    rng = np.random.default_rng(2000 + seed)
    kind = seed % 4
    if kind == 0:
        alg = make_algebra(ALGEBRA_SIGNATURES[seed % len(ALGEBRA_SIGNATURES)])
        base = algebra_correspondence(alg)
    elif kind == 1:
        base = block_swap_correspondence()
    elif kind == 2:
        alg = make_algebra([1])
        m = 2 + (seed // 4) % 2
        c = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        gram = (c.conj().T @ c + np.eye(m)).reshape(m, m, 1, 1) / m
        eye = np.eye(m, dtype=complex)[None, :, :]
        base = Correspondence(alg, eye.copy(), gram, eye.copy())
    else:
        alg = make_algebra([1, 1])
        base = standard_module(alg, [2, 1], multiplicities=[[1, 1], [0, 1]])
    return conjugated(base, random_unitary(rng, base.dim))


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def oracle_pre_gram(e: ModulePresentation, f: Correspondence) -> np.ndarray:
    """Loop-based balanced pre-inner product on the algebraic tensor."""
    alg = e.algebra
    me, mf, n = e.dim, f.dim, alg.size
    out = np.zeros((me * mf, me * mf, n, n), dtype=complex)
    for i in range(me):
        for k in range(me):
            lg = np.zeros((mf, mf), dtype=complex)
            g = e.gram[i, k]
            lg = sum(alg.coords(g)[c] * f.left_action[c] for c in range(alg.dim))
            for j in range(mf):
                for l in range(mf):
                    val = np.zeros((n, n), dtype=complex)
                    for p in range(mf):
                        val += lg[p, l] * f.gram[j, p]
                    out[i * mf + j, k * mf + l] = val
    return out


def oracle_scalarized(alg: Algebra, gram: np.ndarray) -> np.ndarray:
    m = gram.shape[0]
    s = np.zeros((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            s[i, j] = np.trace(gram[i, j]) / alg.size
    return s


def oracle_rank(mat: np.ndarray, rtol: float = 1e-9) -> int:
    mat = np.atleast_2d(mat)
    if mat.size == 0:
        return 0
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def oracle_commutant_dimension(pres: ModulePresentation) -> int:
    """Dimension of the right-action commutant via a rank computation
    assembled differently from the library's kernel solve."""
    m = pres.dim
    rows = []
    for c in range(pres.algebra.dim):
        r = pres.right_action[c]
        # vec(A R - R A) with column-major flattening this time
        rows.append(np.kron(r.T, np.eye(m)) - np.kron(np.eye(m), r))
    system = np.concatenate(rows, axis=0)
    return m * m - oracle_rank(system, rtol=1e-11)


def max_dev(a, b=None) -> float:
    arr = np.abs(np.asarray(a) - (0 if b is None else np.asarray(b)))
    return float(arr.max()) if arr.size else 0.0
