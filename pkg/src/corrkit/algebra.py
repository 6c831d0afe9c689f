"""Finite-dimensional C*-algebras as direct sums of full complex matrix blocks.

An algebra with signature ``[n1, ..., nk]`` is ``M_n1(C) + ... + M_nk(C)``,
embedded block-diagonally in the square matrices of size ``n1 + ... + nk``.
Elements are plain complex ndarrays supported on the diagonal blocks;
multiplication is the matrix product, the involution is the conjugate
transpose, and the canonical basis consists of the matrix units of every
block, ordered block by block and row-major inside each block.

The fixed faithful state is the normalized trace ``a -> tr(a) / (n1+...+nk)``.
It scalarizes algebra-valued inner products so that length-zero vectors can
be detected by ordinary eigenvalue computations.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidElementError, InvalidSignatureError

DEFAULT_TOL = 1e-9

# Supplied matrices are required to have operator norm at most this bound,
# so that absolute entrywise tolerances are meaningful.
NORM_BOUND = 16.0


@dataclass(frozen=True)
class Algebra:
    """Direct sum of full matrix blocks, with a fixed matrix-unit basis."""

    blocks: tuple[int, ...]

    @cached_property
    def size(self) -> int:
        """Edge length of the block-diagonal embedding."""
        return int(sum(self.blocks))

    @cached_property
    def dim(self) -> int:
        """Complex dimension, the number of matrix units."""
        return int(sum(n * n for n in self.blocks))

    @cached_property
    def block_slices(self) -> tuple[slice, ...]:
        out, start = [], 0
        for n in self.blocks:
            out.append(slice(start, start + n))
            start += n
        return tuple(out)

    @cached_property
    def basis_positions(self) -> tuple[np.ndarray, np.ndarray]:
        """Row/column indices of the matrix units, in basis order."""
        rows, cols = [], []
        start = 0
        for n in self.blocks:
            for r in range(n):
                for c in range(n):
                    rows.append(start + r)
                    cols.append(start + c)
            start += n
        return np.array(rows), np.array(cols)

    @cached_property
    def basis(self) -> np.ndarray:
        """Stack of the d matrix units, shape (dim, size, size)."""
        rows, cols = self.basis_positions
        out = np.zeros((self.dim, self.size, self.size), dtype=complex)
        out[np.arange(self.dim), rows, cols] = 1.0
        return out

    @cached_property
    def unit(self) -> np.ndarray:
        return np.eye(self.size, dtype=complex)

    @cached_property
    def star_index(self) -> np.ndarray:
        """Permutation sending each basis index to the index of its adjoint."""
        rows, cols = self.basis_positions
        lookup = {(int(r), int(c)): k for k, (r, c) in enumerate(zip(rows, cols))}
        return np.array([lookup[(int(c), int(r))] for r, c in zip(rows, cols)])

    @cached_property
    def basis_products(self) -> np.ndarray:
        """Coordinates of basis[i] @ basis[j], shape (dim, dim, dim)."""
        prods = np.einsum("iab,jbc->ijac", self.basis, self.basis)
        return self.coords(prods)

    @cached_property
    def support_mask(self) -> np.ndarray:
        """Boolean mask of entries allowed to be nonzero."""
        mask = np.zeros((self.size, self.size), dtype=bool)
        for sl in self.block_slices:
            mask[sl, sl] = True
        return mask

    # -- element helpers ---------------------------------------------------

    def coords(self, a: np.ndarray) -> np.ndarray:
        """Coordinates in the matrix-unit basis; batched over leading axes."""
        rows, cols = self.basis_positions
        return np.asarray(a)[..., rows, cols]

    def from_coords(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        rows, cols = self.basis_positions
        out = np.zeros(v.shape[:-1] + (self.size, self.size), dtype=complex)
        out[..., rows, cols] = v
        return out

    def embed(self, block_matrices: list[np.ndarray]) -> np.ndarray:
        """Assemble per-block matrices into a block-diagonal element."""
        if len(block_matrices) != len(self.blocks):
            raise InvalidElementError(
                f"expected {len(self.blocks)} blocks, got {len(block_matrices)}"
            )
        out = np.zeros((self.size, self.size), dtype=complex)
        for sl, n, b in zip(self.block_slices, self.blocks, block_matrices):
            b = np.asarray(b, dtype=complex)
            if b.shape != (n, n):
                raise InvalidElementError(f"block of shape {b.shape}, expected ({n}, {n})")
            out[sl, sl] = b
        return out

    def split(self, a: np.ndarray) -> list[np.ndarray]:
        return [np.array(a[sl, sl]) for sl in self.block_slices]

    def require_element(self, a: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
        a = np.asarray(a)
        if a.shape != (self.size, self.size):
            raise InvalidElementError(
                f"element of shape {a.shape}, expected ({self.size}, {self.size})"
            )
        off = np.abs(np.where(self.support_mask, 0.0, a)).max() if self.size else 0.0
        if off > tol:
            raise InvalidElementError(f"entries off the diagonal blocks (max {off:.3e})")
        return a.astype(complex)

    # -- operations --------------------------------------------------------

    def is_positive(self, a: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
        """Whether ``a`` is Hermitian within tol with spectrum >= -tol."""
        a = self.require_element(a, tol)
        if np.abs(a - a.conj().T).max() > tol:
            return False
        eigs = np.linalg.eigvalsh((a + a.conj().T) / 2.0)
        return bool(eigs.min() >= -tol)

    def faithful_state(self, a: np.ndarray) -> complex:
        """Normalized trace; vanishes on a positive element only at zero."""
        a = self.require_element(a)
        return complex(np.trace(a)) / self.size

    def center_basis(self) -> list[np.ndarray]:
        """Blockwise identities: a basis of the center."""
        out = []
        for sl in self.block_slices:
            z = np.zeros((self.size, self.size), dtype=complex)
            z[sl, sl] = np.eye(sl.stop - sl.start)
            out.append(z)
        return out

    def random_element(self, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        v = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
        return self.from_coords(scale * v)


def make_algebra(blocks) -> Algebra:
    """Build the direct-sum algebra with the given block sizes."""
    blocks = list(blocks)
    if not blocks:
        raise InvalidSignatureError("signature must contain at least one block")
    for n in blocks:
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise InvalidSignatureError(f"block size {n!r} is not a positive integer")
    return Algebra(tuple(int(n) for n in blocks))
