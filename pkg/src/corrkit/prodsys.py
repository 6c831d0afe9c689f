"""Discrete-time product systems generated by one correspondence.

A product system here is the family of realized tensor powers of a single
correspondence ``E_1``: ``E_0`` is the algebra over itself and
``E_n = realize(E_{n-1} . E_1)``.  Identification unitaries
``u_{s,t}: realize(E_s . E_t) -> E_{s+t}`` are the canonical ones for
``s = 0`` or ``t = 0``, the identity for ``t = 1`` (by construction of the
powers), and otherwise built recursively through the associator.  The
coherence report verifies that every identification is a bilinear unitary
and that the two ways of collapsing a triple product agree.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import DEFAULT_TOL, Algebra
from .errors import (
    IncompatibleOperandsError,
    InvalidPresentationError,
    PreconditionError,
    ResourceBudgetError,
)
from .hilbmod import (
    AssociatorResult,
    Correspondence,
    FactorMap,
    ModulePresentation,
    _dev,
    algebra_correspondence,
    associator,
    internal_tensor,
    left_unitor,
    map_adjoint,
    null_space,
    right_unitor,
    tensor_lift,
    validate_module,
)
from .report import VerificationReport

DEFAULT_BUDGET = 4096


class ProductSystem:
    """Truncated family of tensor powers with coherent identifications."""

    def __init__(
        self,
        generator: Correspondence,
        levels: int,
        tol: float = DEFAULT_TOL,
        budget: int = DEFAULT_BUDGET,
    ):
        if levels < 1:
            raise PreconditionError("at least one level is required")
        if generator.dim > budget:
            raise ResourceBudgetError(
                f"generator dimension {generator.dim} exceeds budget {budget}",
                required=generator.dim,
            )
        self.algebra: Algebra = generator.algebra
        self.generator = generator
        self.levels = int(levels)
        self.tol = tol
        self.budget = int(budget)
        self.powers: list[Correspondence] = [algebra_correspondence(self.algebra), generator]
        self._tensors: dict[tuple[int, int], tuple[ModulePresentation, FactorMap]] = {}
        self._u: dict[tuple[int, int], np.ndarray] = {}
        self._assoc: dict[tuple[int, int, int], AssociatorResult] = {}
        for n in range(2, self.levels + 1):
            prev = self.powers[n - 1]
            needed = prev.dim * generator.dim
            if needed > self.budget:
                raise ResourceBudgetError(
                    f"power {n} needs carrier dimension {needed} > budget {self.budget}",
                    required=needed,
                )
            mod, fm = internal_tensor(prev, generator, tol)
            self._tensors[(n - 1, 1)] = (mod, fm)
            self._u[(n - 1, 1)] = np.eye(mod.dim, dtype=complex)
            self.powers.append(mod)

    def power(self, n: int) -> Correspondence:
        if not 0 <= n <= self.levels:
            raise PreconditionError(f"level {n} outside truncation 0..{self.levels}")
        return self.powers[n]

    def tensor(self, s: int, t: int) -> tuple[ModulePresentation, FactorMap]:
        """Realized tensor ``E_s . E_t`` with its factor map."""
        key = (s, t)
        if key not in self._tensors:
            es, et = self.power(s), self.power(t)
            needed = es.dim * et.dim
            if needed > self.budget:
                raise ResourceBudgetError(
                    f"tensor E_{s}.E_{t} needs dimension {needed} > budget {self.budget}",
                    required=needed,
                )
            self._tensors[key] = internal_tensor(es, et, self.tol)
        return self._tensors[key]

    def assoc(self, r: int, s: int, t: int) -> AssociatorResult:
        """Rebracketing unitary realize((E_r.E_s).E_t) -> realize(E_r.(E_s.E_t))."""
        key = (r, s, t)
        if key not in self._assoc:
            fg = self.tensor(s, t)
            t4 = self.tensor(r, s + t) if fg[0] is self.powers[s + t] else None
            self._assoc[key] = associator(
                self.power(r), self.power(s), self.power(t), self.tol,
                ef=self.tensor(r, s), fg=fg, t4=t4,
            )
        return self._assoc[key]

    def u(self, s: int, t: int) -> np.ndarray:
        """Identification unitary realize(E_s . E_t) -> E_{s+t}."""
        key = (s, t)
        if key in self._u:
            return self._u[key]
        if s + t > self.levels:
            raise PreconditionError(f"u({s},{t}) exceeds truncation level {self.levels}")
        if t == 0:
            out = right_unitor(self.power(s), self.tensor(s, 0)[1])
        elif s == 0:
            out = left_unitor(self.power(t), self.tensor(0, t)[1])
        else:
            # peel the last generator factor: E_t = E_{t-1} . E_1
            a = self.assoc(s, t - 1, 1)
            lifted = tensor_lift(
                self.u(s, t - 1), a.left_factor, self._tensors[(s + t - 1, 1)][1], side="left"
            )
            out = lifted @ map_adjoint(a.matrix, a.left_module, a.right_module)
        self._u[key] = out
        return out

    # -- verification --------------------------------------------------------

    def coherence_report(self) -> VerificationReport:
        """Verify every identification and the triple-product coherence."""
        rep = VerificationReport(
            "product system coherence",
            provenance={"levels": self.levels, "budget": self.budget},
        )
        tol = self.tol
        for s in range(self.levels + 1):
            for t in range(self.levels + 1 - s):
                u = self.u(s, t)
                dom, _ = self.tensor(s, t)
                cod = self.power(s + t)
                name = f"identification[{s},{t}]"
                transported = np.einsum("ui,vj,uvab->ijab", u.conj(), u, cod.gram)
                rep.add(f"{name}-gram", _dev(transported, dom.gram), tol)
                adj = map_adjoint(u, dom, cod)
                rep.add(f"{name}-unitary", max(
                    _dev(adj @ u, np.eye(dom.dim)), _dev(u @ adj, np.eye(cod.dim))
                ), tol)
                dev_r = max(
                    _dev(u @ dom.right_action[c], cod.right_action[c] @ u)
                    for c in range(self.algebra.dim)
                )
                dev_l = max(
                    _dev(u @ dom.left_action[c], cod.left_action[c] @ u)
                    for c in range(self.algebra.dim)
                )
                rep.add(f"{name}-bilinear", max(dev_r, dev_l), tol)
        for r in range(1, self.levels - 1):
            for s in range(1, self.levels - r):
                for t in range(1, self.levels + 1 - r - s):
                    a = self.assoc(r, s, t)
                    via_right = self.u(r, s + t) @ tensor_lift(
                        self.u(s, t), a.right_factor, self.tensor(r, s + t)[1], side="right"
                    ) @ a.matrix
                    via_left = self.u(r + s, t) @ tensor_lift(
                        self.u(r, s), a.left_factor, self.tensor(r + s, t)[1], side="left"
                    )
                    rep.add(f"coherence[{r},{s},{t}]", _dev(via_right, via_left), tol)
        return rep


def build_powers(
    generator: Correspondence,
    levels: int,
    tol: float = DEFAULT_TOL,
    budget: int = DEFAULT_BUDGET,
) -> ProductSystem:
    """Validate the generator, realize all powers, and verify coherence."""
    rep = validate_module(generator, tol)
    if not rep.passed:
        names = ", ".join(c.name for c in rep.failed_checks())
        raise InvalidPresentationError(f"generator fails module axioms: {names}")
    ps = ProductSystem(generator, levels, tol, budget)
    ps.verification = ps.coherence_report()
    return ps


# ---------------------------------------------------------------------------
# units
# ---------------------------------------------------------------------------

@dataclass
class Unit:
    """A vector of the generator together with its derived tensor powers."""

    vector: np.ndarray
    levels: list[np.ndarray]
    unital: bool
    central: bool
    unitality_deviation: float
    centrality_deviation: float


def derive_unit(ps: ProductSystem, xi1: np.ndarray, tol: float | None = None) -> Unit:
    """Propagate a generator vector through the realized powers."""
    tol = ps.tol if tol is None else tol
    xi1 = np.asarray(xi1, dtype=complex)
    e1 = ps.generator
    if xi1.shape != (e1.dim,):
        raise IncompatibleOperandsError(
            f"vector of shape {xi1.shape} on a generator of dimension {e1.dim}"
        )
    levels = [ps.algebra.coords(ps.algebra.unit), xi1]
    for n in range(2, ps.levels + 1):
        fm = ps._tensors[(n - 1, 1)][1]
        levels.append(fm.matrix @ np.kron(levels[n - 1], xi1))
    unit_dev = _dev(e1.inner(xi1, xi1), ps.algebra.unit)
    cent_dev = max(
        _dev(e1.left_action[c] @ xi1, e1.right_action[c] @ xi1)
        for c in range(ps.algebra.dim)
    )
    return Unit(xi1, levels, unit_dev <= tol, cent_dev <= tol, unit_dev, cent_dev)


def check_unit(ps: ProductSystem, xi1: np.ndarray, tol: float | None = None) -> VerificationReport:
    """Verify the unit property, unitality, and (when claimed) centrality."""
    tol = ps.tol if tol is None else tol
    unit = derive_unit(ps, xi1, tol)
    rep = VerificationReport("unit checks", provenance={"levels": ps.levels})
    for s in range(ps.levels + 1):
        for t in range(ps.levels + 1 - s):
            fm = ps.tensor(s, t)[1]
            image = ps.u(s, t) @ fm.matrix @ np.kron(unit.levels[s], unit.levels[t])
            rep.add(f"unit-propagation[{s},{t}]", _dev(image, unit.levels[s + t]), tol)
    for n in range(ps.levels + 1):
        en = ps.power(n)
        v = unit.levels[n]
        rep.add(f"unitality-level-{n}", _dev(en.inner(v, v), ps.algebra.unit), tol)
    if unit.central:
        for n in range(ps.levels + 1):
            en = ps.power(n)
            v = unit.levels[n]
            dev = max(
                _dev(en.left_action[c] @ v, en.right_action[c] @ v)
                for c in range(ps.algebra.dim)
            )
            rep.add(f"centrality-level-{n}", dev, tol)
    else:
        rep.detail = f"not central (level-1 deviation {unit.centrality_deviation:.3e})"
    return rep


# ---------------------------------------------------------------------------
# central unital units
# ---------------------------------------------------------------------------

@dataclass
class CentralUnitSearch:
    status: str                 # "found" | "none-exists" | "unknown"
    vector: np.ndarray | None
    certificate: str
    residuals: dict


def find_central_unital_unit(
    e1: Correspondence,
    tol: float = DEFAULT_TOL,
    starts: int = 32,
) -> CentralUnitSearch:
    """Search the central subspace for a vector of inner product one.

    The central subspace ``C = {v : L(b) v = R(b) v}`` carries center-valued
    inner products, so the search reduces to finding ``v`` in ``C`` whose
    blockwise Gram values are all strictly positive; such a ``v`` rescales
    blockwise to a central unital vector.  Nonexistence is certified when
    ``C`` is trivial or when the Gram of ``C`` vanishes identically on some
    block (then no central vector has invertible length).
    """
    alg = e1.algebra
    stacked = np.concatenate(
        [e1.left_action[c] - e1.right_action[c] for c in range(alg.dim)], axis=0
    )
    basis = null_space(stacked)
    p = basis.shape[1]
    if p == 0:
        return CentralUnitSearch("none-exists", None, "central-subspace-trivial", {})

    # blockwise Gram matrices of the central basis; central vectors have
    # center-valued inner products, i.e. scalar blocks
    grams = np.einsum("ua,vb,uvxy->abxy", basis.conj(), basis, e1.gram)
    blockwise = []
    scalar_defect = 0.0
    for sl, n in zip(alg.block_slices, alg.blocks):
        blk = grams[:, :, sl, sl]
        mu = np.trace(blk, axis1=2, axis2=3) / n
        scalar_defect = max(
            scalar_defect,
            _dev(blk, mu[:, :, None, None] * np.eye(n)),
        )
        blockwise.append((mu + mu.conj().T) / 2.0)
    scale = max(float(np.abs(m).max()) for m in blockwise)
    if scale <= tol:
        return CentralUnitSearch(
            "none-exists", None, "central-subspace-has-zero-length", {}
        )
    for i, m in enumerate(blockwise):
        if float(np.abs(m).max()) <= tol * max(1.0, scale):
            return CentralUnitSearch(
                "none-exists",
                None,
                f"block-{i}-gram-vanishes-on-central-subspace",
                {"central-dimension": p},
            )

    rng = np.random.default_rng(7)
    mean = sum(blockwise) / len(blockwise)
    candidates = [np.linalg.eigh(mean)[1][:, -1]]
    for _ in range(starts):
        z = rng.standard_normal(p) + 1j * rng.standard_normal(p)
        candidates.append(z / np.linalg.norm(z))
    centers = alg.center_basis()
    for z in candidates:
        mus = np.array([np.real(z.conj() @ m @ z) for m in blockwise])
        if mus.min() <= tol * max(1.0, scale):
            continue
        v = basis @ z
        rescale = sum(c / np.sqrt(mu) for mu, c in zip(mus, centers))
        omega = e1.right_of(rescale) @ v
        unit_dev = _dev(e1.inner(omega, omega), alg.unit)
        cent_dev = max(
            _dev(e1.left_action[c] @ omega, e1.right_action[c] @ omega)
            for c in range(alg.dim)
        )
        if unit_dev <= tol and cent_dev <= tol:
            return CentralUnitSearch(
                "found",
                omega,
                "constructed",
                {
                    "unitality": unit_dev,
                    "centrality": cent_dev,
                    "center-scalar-defect": scalar_defect,
                    "central-dimension": p,
                },
            )
    return CentralUnitSearch("unknown", None, "search-exhausted", {"central-dimension": p})


# ---------------------------------------------------------------------------
# CP maps generated by units
# ---------------------------------------------------------------------------

@dataclass
class CPMap:
    """Linear map on the algebra with the Choi matrix of its extension."""

    level: int
    matrix: np.ndarray  # (d, d) in the matrix-unit basis
    choi: np.ndarray    # (n^2, n^2)


@dataclass
class CPFamily:
    maps: list[CPMap]
    report: VerificationReport


def unit_cp_matrix(e1: Correspondence, xi1: np.ndarray) -> np.ndarray:
    """Matrix of ``b -> <xi, L(b) xi>`` in the matrix-unit basis."""
    alg = e1.algebra
    cols = []
    for c in range(alg.dim):
        cols.append(alg.coords(e1.inner(xi1, e1.left_action[c] @ xi1)))
    return np.stack(cols, axis=1)


def choi_matrix(alg: Algebra, tmat: np.ndarray) -> np.ndarray:
    """Choi matrix of the map extended by the block conditional expectation."""
    n = alg.size
    rows, cols = alg.basis_positions
    choi = np.zeros((n * n, n * n), dtype=complex)
    for k in range(alg.dim):
        unit = np.zeros((n, n), dtype=complex)
        unit[rows[k], cols[k]] = 1.0
        choi += np.kron(unit, alg.from_coords(tmat[:, k]))
    return choi


def cp_of_unit(
    e1: Correspondence,
    xi1: np.ndarray,
    levels: int,
    tol: float = DEFAULT_TOL,
    ps: ProductSystem | None = None,
) -> CPFamily:
    """The CP semigroup generated by a unit, verified level by level.

    ``T_t`` is the t-th power of ``b -> <xi, L(b) xi>``; each level is
    cross-checked against the inner product taken in the realized power,
    Choi positivity is verified, and unitality is asserted when the unit is
    unital.
    """
    alg = e1.algebra
    if ps is None:
        ps = ProductSystem(e1, levels, tol)
    unit = derive_unit(ps, xi1, tol)
    t1 = unit_cp_matrix(e1, xi1)
    rep = VerificationReport("cp maps of unit", provenance={"levels": levels})
    star = alg.star_index
    maps = []
    unit_coords = alg.coords(alg.unit)
    for t in range(1, levels + 1):
        tm = np.linalg.matrix_power(t1, t)
        choi = choi_matrix(alg, tm)
        rep.add(f"choi-hermitian[{t}]", _dev(choi, choi.conj().T), tol)
        eigs = np.linalg.eigvalsh((choi + choi.conj().T) / 2.0)
        scale = max(1.0, float(eigs.max(initial=0.0)))
        rep.add(f"choi-positive[{t}]", max(0.0, -float(eigs.min())), tol * scale)
        star_dev = max(
            _dev(alg.from_coords(tm[:, star[c]]),
                 alg.from_coords(tm[:, c]).conj().T)
            for c in range(alg.dim)
        )
        rep.add(f"cp-star[{t}]", star_dev, tol)
        if unit.unital:
            rep.add(f"cp-unital[{t}]", _dev(tm @ unit_coords, unit_coords), tol)
        direct = unit_cp_matrix_level(ps, unit, t)
        rep.add(f"cp-semigroup-crosscheck[{t}]", _dev(tm, direct), tol)
        maps.append(CPMap(t, tm, choi))
    return CPFamily(maps, rep)


def unit_cp_matrix_level(ps: ProductSystem, unit: Unit, t: int) -> np.ndarray:
    """Matrix of ``b -> <xi_t, L(b) xi_t>`` computed in the realized power."""
    et = ps.power(t)
    v = unit.levels[t]
    cols = [
        ps.algebra.coords(et.inner(v, et.left_action[c] @ v))
        for c in range(ps.algebra.dim)
    ]
    return np.stack(cols, axis=1)
