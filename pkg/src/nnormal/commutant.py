"""Fiberwise commutant, intertwiners, the radical split and idempotent families.

Everything is stored one matrix per cell.  At a cell the fiber of a valid model
is block diagonal with one *slot* per block copy; slot ``(k, j)`` is copy ``j``
of block ``k``.  Within a valid model the blocks covering a cell have distinct
sizes, so "block index" and "class" coincide at every cell.

The multiplicity-space part of a commutant element (the semisimple projection
``π``) keeps, for each class, the ``m×m`` matrix of diagonal values of the
slot-to-slot blocks.  Cross-class blocks and the strictly upper parts are
radical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .canonical import InvariantBreach
from .linalg import (Matrix, NotIdempotent, idempotent_normal_form, inverse, is_invertible,
                     solve_intertwiner)
from .measure import refine_common
from .model import ModelError, OperatorModel, StructureError, fiber, require_valid, validate
from .scalars import ONE, ZERO, Rational, Scalar, format_scalar, to_rational


class NotInCommutant(ValueError):
    pass


class NotCommuting(ValueError):
    pass


@dataclass(frozen=True)
class Slot:
    block: int
    copy: int
    size: int
    offset: int

    @property
    def rows(self) -> range:
        return range(self.offset, self.offset + self.size)


def slots(a: OperatorModel, cell_id: str) -> list[Slot]:
    out = []
    pos = 0
    for k, b, m in a.blocks_at(cell_id):
        for j in range(m):
            out.append(Slot(k, j, b.size, pos))
            pos += b.size
    return out


def _class_slots(a: OperatorModel, cell_id: str) -> dict[int, list[Slot]]:
    out: dict[int, list[Slot]] = {}
    for s in slots(a, cell_id):
        out.setdefault(s.block, []).append(s)
    return out


# ---------------------------------------------------------------------------
# commutant elements


class CommutantElement:
    """An element of ``{A}′``: one matrix per cell, each commuting with the fiber."""

    __slots__ = ("owner", "_mats", "_inv")

    def __init__(self, owner: OperatorModel, mats: Mapping[str, Matrix]):
        fixed = {}
        for c in owner.partition:
            if c.id not in mats:
                raise NotInCommutant(f"no matrix given for cell {c.id!r}")
            m = mats[c.id]
            d = owner.fiber_dim(c.id)
            if m.shape != (d, d):
                raise NotInCommutant(f"cell {c.id!r}: expected {d}x{d}, got {m.rows}x{m.cols}")
            f = fiber(owner, c)
            if f @ m != m @ f:
                raise NotInCommutant(f"cell {c.id!r}: matrix does not commute with the fiber")
            fixed[c.id] = m
        extra = set(mats) - set(fixed)
        if extra:
            raise NotInCommutant(f"unknown cells {sorted(extra)}")
        self.owner = owner
        self._mats = MappingProxyType(fixed)
        self._inv = None

    @classmethod
    def identity(cls, owner: OperatorModel) -> CommutantElement:
        return cls(owner, {c.id: Matrix.identity(owner.fiber_dim(c.id)) for c in owner.partition})

    @classmethod
    def zero(cls, owner: OperatorModel) -> CommutantElement:
        return cls(owner, {c.id: Matrix.zeros(owner.fiber_dim(c.id)) for c in owner.partition})

    @classmethod
    def at_cell(cls, owner: OperatorModel, cell_id: str, m: Matrix) -> CommutantElement:
        """``m`` at one cell, zero elsewhere."""
        mats = {c.id: Matrix.zeros(owner.fiber_dim(c.id)) for c in owner.partition}
        mats[cell_id] = m
        return cls(owner, mats)

    @property
    def mats(self) -> Mapping[str, Matrix]:
        return self._mats

    def __getitem__(self, cell_id: str) -> Matrix:
        return self._mats[cell_id]

    def _same_owner(self, other: CommutantElement):
        if not isinstance(other, CommutantElement):
            return NotImplemented
        if other.owner is not self.owner and other.owner != self.owner:
            raise NotInCommutant("commutant elements of different models")
        return other

    def _combine(self, other, op) -> CommutantElement:
        o = self._same_owner(other)
        if o is NotImplemented:
            return o
        return CommutantElement(self.owner, {cid: op(m, o[cid]) for cid, m in self._mats.items()})

    def __add__(self, other):
        return self._combine(other, lambda x, y: x + y)

    def __sub__(self, other):
        return self._combine(other, lambda x, y: x - y)

    def __matmul__(self, other):
        return self._combine(other, lambda x, y: x @ y)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, z) -> CommutantElement:
        return CommutantElement(self.owner, {cid: m.scale(z) for cid, m in self._mats.items()})

    def inverse(self) -> CommutantElement:
        if self._inv is None:
            self._inv = CommutantElement(self.owner, {cid: inverse(m) for cid, m in self._mats.items()})
        return self._inv

    def is_invertible(self) -> bool:
        return all(is_invertible(m) for m in self._mats.values())

    def is_idempotent(self) -> bool:
        return all(m.is_idempotent() for m in self._mats.values())

    def is_zero(self) -> bool:
        return all(m.is_zero() for m in self._mats.values())

    def is_identity(self) -> bool:
        return all(m.is_identity() for m in self._mats.values())

    def conjugate_by(self, x: CommutantElement) -> CommutantElement:
        """``x · self · x⁻¹``."""
        return x @ self @ x.inverse()

    def __eq__(self, other):
        if not isinstance(other, CommutantElement):
            return NotImplemented
        return self.owner == other.owner and dict(self._mats) == dict(other._mats)

    def __hash__(self):
        return hash(tuple(sorted(self._mats.items())))

    def __repr__(self):
        return f"CommutantElement({dict(self._mats)!r})"


def commutant_basis(a: OperatorModel) -> tuple[list[CommutantElement], dict[str, int]]:
    """A basis of ``{A}′``, each element living at a single cell.

    Built slot pair by slot pair from intertwiners between the blocks of the
    fiber, so the per-cell dimension is the sum of the pairwise dimensions.
    """
    basis: list[CommutantElement] = []
    dims: dict[str, int] = {}
    for c in a.partition:
        sl = slots(a, c.id)
        d = a.fiber_dim(c.id)
        f = fiber(a, c)
        count = 0
        for s in sl:
            fs = f.block(s.offset, s.offset, s.size, s.size)
            for t in sl:
                ft = f.block(t.offset, t.offset, t.size, t.size)
                for x in solve_intertwiner(fs, ft):
                    entries = {(s.offset + i, t.offset + j): x[i, j]
                               for i in range(s.size) for j in range(t.size) if x[i, j]}
                    basis.append(CommutantElement.at_cell(a, c.id, Matrix.from_sparse(d, d, entries)))
                    count += 1
        dims[c.id] = count
    return basis, dims


def random_commutant_element(a: OperatorModel, rng, *, spread: int = 3) -> CommutantElement:
    """Random integer combination of the :func:`commutant_basis` elements (tests, demos)."""
    mats = {}
    for c in a.partition:
        d = a.fiber_dim(c.id)
        f = fiber(a, c)
        entries: dict[tuple[int, int], Scalar] = {}
        for s in slots(a, c.id):
            fs = f.block(s.offset, s.offset, s.size, s.size)
            for t in slots(a, c.id):
                ft = f.block(t.offset, t.offset, t.size, t.size)
                for x in solve_intertwiner(fs, ft):
                    coef = rng.randint(-spread, spread)
                    if not coef:
                        continue
                    for i in range(s.size):
                        for j in range(t.size):
                            if x[i, j]:
                                key = (s.offset + i, t.offset + j)
                                entries[key] = entries.get(key, ZERO) + x[i, j] * coef
        mats[c.id] = Matrix.from_sparse(d, d, {k: v for k, v in entries.items() if v})
    return CommutantElement(a, mats)


# ---------------------------------------------------------------------------
# intertwiners between two single-block models


@dataclass(frozen=True)
class IntertwinerCell:
    a_cell: str | None
    b_cell: str | None
    coordinate: Scalar
    basis: tuple[Matrix, ...]
    pattern: str
    pattern_ok: bool

    @property
    def dim(self) -> int:
        return len(self.basis)


@dataclass(frozen=True)
class IntertwinerReport:
    n_a: int
    n_b: int
    cells: tuple[IntertwinerCell, ...]

    @property
    def pattern_ok(self) -> bool:
        return all(c.pattern_ok for c in self.cells)

    def dims(self) -> dict[tuple[str | None, str | None], int]:
        return {(c.a_cell, c.b_cell): c.dim for c in self.cells}

    @property
    def has_invertible(self) -> bool:
        """Whether some solution is invertible at every cell.

        Solutions on a matched cell are upper triangular when sizes agree, so an
        invertible one exists iff no diagonal position vanishes on the whole span.
        """
        for c in self.cells:
            if c.a_cell is None or c.b_cell is None or self.n_a != self.n_b:
                return False
            for i in range(self.n_a):
                if all(not x[i, i] for x in c.basis):
                    return False
        return bool(self.cells)

    def render(self) -> str:
        lines = [f"intertwiners A·X = X·B, X is {self.n_a}x{self.n_b}"]
        for c in self.cells:
            where = f"{c.a_cell or '-'} / {c.b_cell or '-'} (λ={format_scalar(c.coordinate)})"
            ok = "ok" if c.pattern_ok else "VIOLATED"
            lines.append(f"  {where}: dim {c.dim}, pattern {c.pattern} [{ok}]")
        lines.append(f"pattern check: {'ok' if self.pattern_ok else 'violated'}")
        lines.append(f"fiberwise invertible solution: {'yes' if self.has_invertible else 'no'}")
        return "\n".join(lines)


def _expected_pattern(n_a: int, n_b: int) -> str:
    if n_a > n_b:
        return "(X1;0)"
    if n_a < n_b:
        return "(0,Y1)"
    return "upper-triangular"


def _is_upper(m: Matrix, r0: int, c0: int, n: int) -> bool:
    return all(not m[r0 + i, c0 + j] for i in range(n) for j in range(i))


def matches_pattern(x: Matrix, n_a: int, n_b: int) -> bool:
    """The zero pattern of a solution of ``J_a X = X J_b`` for SI blocks.

    ``n_a > n_b``: rows below ``n_b`` vanish and the top square is upper
    triangular.  ``n_a < n_b``: the first ``n_b - n_a`` columns vanish and the
    right square is upper triangular.  Equal sizes: upper triangular.
    """
    if n_a > n_b:
        tail = all(not x[i, j] for i in range(n_b, n_a) for j in range(n_b))
        return tail and _is_upper(x, 0, 0, n_b)
    if n_a < n_b:
        lead = all(not x[i, j] for i in range(n_a) for j in range(n_b - n_a))
        return lead and _is_upper(x, 0, n_b - n_a, n_a)
    return _is_upper(x, 0, 0, n_a)


def _single_block(a: OperatorModel, name: str):
    if len(a.blocks) != 1 or a.blocks[0][1] != 1:
        raise StructureError(f"{name} must consist of exactly one block of multiplicity 1")
    structural = [v for v in validate(a, raw=True) if v.rule == "V3"]
    if structural:
        raise ModelError(structural)
    return a.blocks[0][0]


def intertwiner_basis(a: OperatorModel, b: OperatorModel) -> IntertwinerReport:
    """Per-cell bases of ``{X : A·X = X·B}`` with the zero-pattern check.

    Cells are matched by coordinate.  On cells where only one side is covered
    the solution space is trivial and reported with dimension 0.
    """
    ba, bb = _single_block(a, "A"), _single_block(b, "B")
    expected = _expected_pattern(ba.size, bb.size)
    common = refine_common(a.partition, b.partition)
    cells = []
    for x, y in common.matched:
        fa, fb = fiber(a, x), fiber(b, y)
        if fa.rows == 0 or fb.rows == 0:
            cells.append(IntertwinerCell(x.id, y.id, x.coordinate, (), "zero", True))
            continue
        sols = tuple(solve_intertwiner(fa, fb))
        ok = all(matches_pattern(s, fa.rows, fb.rows) for s in sols)
        cells.append(IntertwinerCell(x.id, y.id, x.coordinate, sols,
                                     expected if sols else "zero", ok))
    for x in common.left_only:
        if ba.covers(x.id):
            cells.append(IntertwinerCell(x.id, None, x.coordinate, (), "zero", True))
    for y in common.right_only:
        if bb.covers(y.id):
            cells.append(IntertwinerCell(None, y.id, y.coordinate, (), "zero", True))
    return IntertwinerReport(ba.size, bb.size, tuple(cells))


# ---------------------------------------------------------------------------
# semisimple projection and traces


def _class_matrices(x: CommutantElement, cell_id: str) -> dict[int, tuple[int, Matrix]]:
    """Per class ``k``: ``(n_k, b)`` with ``b[j][j']`` the diagonal value of slot block ``(j, j')``."""
    m = x[cell_id]
    out = {}
    for k, sl in _class_slots(x.owner, cell_id).items():
        b = Matrix.from_rows([[m[s.offset, t.offset] for t in sl] for s in sl])
        out[k] = (sl[0].size, b)
    return out


def _embed(a: OperatorModel, cell_id: str, per_class: Mapping[int, Matrix]) -> Matrix:
    """Place ``b_k ⊗ I_{n_k}`` on the slots of each class."""
    d = a.fiber_dim(cell_id)
    entries = {}
    for k, sl in _class_slots(a, cell_id).items():
        b = per_class[k]
        for p, s in enumerate(sl):
            for q, t in enumerate(sl):
                v = b[p, q]
                if v:
                    for r in range(s.size):
                        entries[(s.offset + r, t.offset + r)] = v
    return Matrix.from_sparse(d, d, entries)


def semisimple_projection(x: CommutantElement) -> CommutantElement:
    a = x.owner
    require_valid(a)
    mats = {}
    for c in a.partition:
        per_class = {k: b for k, (_, b) in _class_matrices(x, c.id).items()}
        mats[c.id] = _embed(a, c.id, per_class)
    return CommutantElement(a, mats)


def is_radical(x: CommutantElement) -> bool:
    return semisimple_projection(x).is_zero()


def is_fiberwise_nilpotent(x: CommutantElement) -> bool:
    return all((m ** m.rows).is_zero() for m in x.mats.values() if m.rows)


@dataclass(frozen=True)
class TraceVector:
    """``r_k(P)`` per cell and block index (only blocks covering the cell appear)."""

    values: Mapping[tuple[str, int], Rational] = field(hash=False)

    def render(self) -> str:
        lines = []
        for (cid, k), v in self.values.items():
            lines.append(f"{cid} block {k}: {v}")
        return "\n".join(lines)


def trace_r(a: OperatorModel, p: CommutantElement) -> TraceVector:
    """``r_k(P)(c) = Tr(class-k compression of P(c)) / n_k``."""
    if p.owner != a:
        raise NotInCommutant("element belongs to a different model")
    require_valid(a)
    if not p.is_idempotent():
        raise NotIdempotent("trace vector is defined for idempotents")
    out = {}
    for c in a.partition:
        m = p[c.id]
        for k, sl in _class_slots(a, c.id).items():
            tr = sum((m[s.offset + r, s.offset + r] for s in sl for r in range(s.size)), ZERO)
            if tr.im:
                raise InvariantBreach(f"non-real trace at cell {c.id}")
            v = tr.re / sl[0].size
            if v.denominator != 1 or not 0 <= v <= len(sl):
                raise InvariantBreach(f"trace {v} out of range at cell {c.id}, block {k}")
            out[(c.id, k)] = to_rational(v)
    return TraceVector(out)


# ---------------------------------------------------------------------------
# the standard family


def slot_indicator(a: OperatorModel, cell_id: str, chosen: Iterable[tuple[int, int]]) -> Matrix:
    chosen = set(chosen)
    d = a.fiber_dim(cell_id)
    entries = {(i, i): ONE for s in slots(a, cell_id) if (s.block, s.copy) in chosen
               for i in s.rows}
    return Matrix.from_sparse(d, d, entries)


@dataclass(frozen=True, eq=False)
class StandardFamily:
    """The idempotents ``P_{j;i}``: identity on copy ``j`` of block ``i``, zero elsewhere."""

    owner: OperatorModel
    skeleton: tuple[tuple[tuple[int, int], CommutantElement], ...]

    def elements(self) -> list[CommutantElement]:
        return [e for _, e in self.skeleton]

    def contains(self, x: CommutantElement) -> bool:
        """Membership in the lattice: each cell a 0/1 choice of whole slots."""
        if x.owner != self.owner:
            return False
        return all(in_standard_lattice(self.owner, c.id, x[c.id]) for c in self.owner.partition)


def in_standard_lattice(a: OperatorModel, cell_id: str, m: Matrix) -> bool:
    chosen = []
    for s in slots(a, cell_id):
        v = m[s.offset, s.offset]
        if v == ONE:
            chosen.append((s.block, s.copy))
        elif v:
            return False
    return m == slot_indicator(a, cell_id, chosen)


def standard_family(a: OperatorModel) -> StandardFamily:
    require_valid(a)
    skel = []
    for k, (blk, m) in enumerate(a.blocks):
        for j in range(m):
            mats = {c.id: slot_indicator(a, c.id, [(k, j)]) for c in a.partition}
            skel.append(((k, j), CommutantElement(a, mats)))
    return StandardFamily(a, tuple(skel))


# ---------------------------------------------------------------------------
# normalizing one idempotent


def _check_idempotent(a: OperatorModel, p: CommutantElement):
    if p.owner != a:
        raise NotInCommutant("idempotent belongs to a different model")
    if not p.is_idempotent():
        raise NotIdempotent("element is not idempotent")


def _normalize_at(a: OperatorModel, cell_id: str, p: Matrix) -> Matrix:
    """A conjugator ``X`` at one cell with ``X p X⁻¹`` a slot indicator (ones on leading copies)."""
    d = p.rows
    if in_standard_lattice(a, cell_id, p):
        return Matrix.identity(d)
    per_class = {}
    normalizers = {}
    for k, sl in _class_slots(a, cell_id).items():
        b = Matrix.from_rows([[p[s.offset, t.offset] for t in sl] for s in sl])
        per_class[k] = b
        if all(b[i, j] == (b[i, i] if i == j else ZERO) for i in range(b.rows) for j in range(b.cols)) \
                and all(b[i, i] in (ZERO, ONE) for i in range(b.rows)) \
                and _leading_ones(b):
            normalizers[k] = Matrix.identity(b.rows)
        else:
            normalizers[k], _ = idempotent_normal_form(b)
    c_prime = _embed(a, cell_id, per_class)
    eye = Matrix.identity(d)
    x1 = eye if p == c_prime else p + c_prime - eye
    x2 = _embed(a, cell_id, normalizers)
    return x2 @ x1


def _leading_ones(b: Matrix) -> bool:
    diag = [b[i, i] for i in range(b.rows)]
    return diag == sorted(diag, key=lambda z: z == ZERO)


def normalize_idempotent(a: OperatorModel, p: CommutantElement) -> tuple[CommutantElement, CommutantElement]:
    """Invertible ``X ∈ {A}′`` and standard ``D`` with ``X·P·X⁻¹ = D``.

    First ``P`` is moved onto its semisimple part ``C′`` by ``X₁ = P + C′ − I``
    (invertible because ``P − C′`` is radical); then each class's ``m×m``
    multiplicity idempotent is brought to ``diag(1,…,1,0,…,0)``.  Cells and
    classes already in standard form are left alone.
    """
    require_valid(a)
    _check_idempotent(a, p)
    x = CommutantElement(a, {c.id: _normalize_at(a, c.id, p[c.id]) for c in a.partition})
    if not x.is_invertible():
        raise InvariantBreach("normalizing conjugator is singular")
    d = p.conjugate_by(x)
    if not all(in_standard_lattice(a, c.id, d[c.id]) for c in a.partition):
        raise InvariantBreach("normalized idempotent is not standard")
    return x, d


# ---------------------------------------------------------------------------
# skeletons and maximal families


class NotMaximal(Exception):
    """The family is not maximal abelian; ``witness`` is a finer idempotent commuting with it."""

    def __init__(self, cell: str, witness: CommutantElement):
        super().__init__(f"family is not maximal at cell {cell!r}")
        self.cell = cell
        self.witness = witness


def _check_family(a: OperatorModel, family: Sequence[CommutantElement]):
    for p in family:
        _check_idempotent(a, p)
    for i, p in enumerate(family):
        for q in family[i + 1:]:
            if p @ q != q @ p:
                raise NotCommuting("family members do not commute")


def atoms_at(cell_id: str, family: Sequence[CommutantElement], d: int) -> list[Matrix]:
    """Nonzero minimal products of the Boolean algebra generated at one cell."""
    eye = Matrix.identity(d)
    atoms = [eye] if d else []
    for p in family:
        m = p[cell_id]
        nxt = []
        for e in atoms:
            em = e @ m
            for part in (em, e - em):
                if not part.is_zero():
                    nxt.append(part)
        atoms = nxt
    return atoms


def _atom_class(a: OperatorModel, cell_id: str, e: Matrix) -> int | None:
    """The block index if ``e`` has trace vector ``1`` in exactly one class, else None."""
    hit = None
    for k, sl in _class_slots(a, cell_id).items():
        tr = sum((e[s.offset + r, s.offset + r] for s in sl for r in range(s.size)), ZERO)
        if not tr:
            continue
        if tr != Scalar(sl[0].size) or hit is not None:
            return None
        hit = k
    return hit


def _copy_key(a: OperatorModel, cell_id: str, k: int, e: Matrix):
    sl = _class_slots(a, cell_id)[k]
    hits = tuple(j for j, s in enumerate(sl)
                 if any(e[r, col] for r in s.rows for col in range(e.cols)))
    flat = tuple(x.sort_key() for i in range(e.rows) for x in e.row(i))
    return hits, flat


def _sorted_atoms(a: OperatorModel, cell_id: str, atoms: list[Matrix]) -> dict[int, list[Matrix]]:
    by_class: dict[int, list[Matrix]] = {}
    for e in atoms:
        by_class.setdefault(_atom_class(a, cell_id, e), []).append(e)
    for k in by_class:
        if k is not None:
            by_class[k].sort(key=lambda e: _copy_key(a, cell_id, k, e))
    return by_class


def extract_skeleton(a: OperatorModel, family: Sequence[CommutantElement]
                     ) -> list[tuple[tuple[int, int], CommutantElement]]:
    """The minimal idempotents ``P_{j;i}`` of a maximal abelian family.

    Maximal means: at every cell the generated Boolean algebra has one atom per
    slot, each of trace one in a single class.  Otherwise :class:`NotMaximal`
    is raised carrying an idempotent that commutes with the family but lies
    outside what it generates.
    """
    require_valid(a)
    family = list(family)
    _check_family(a, family)
    per_cell = {}
    for c in a.partition:
        d = a.fiber_dim(c.id)
        atoms = atoms_at(c.id, family, d)
        by_class = _sorted_atoms(a, c.id, atoms)
        bad = by_class.get(None)
        if bad:
            raise NotMaximal(c.id, _split_atom(a, c.id, bad[0]))
        per_cell[c.id] = by_class
    skel = []
    for k, (_, m) in enumerate(a.blocks):
        for j in range(m):
            mats = {}
            for c in a.partition:
                lst = per_cell[c.id].get(k)
                mats[c.id] = lst[j] if lst else Matrix.zeros(a.fiber_dim(c.id))
            skel.append(((k, j), CommutantElement(a, mats)))
    return skel


def _split_atom(a: OperatorModel, cell_id: str, e: Matrix) -> CommutantElement:
    """A proper sub-idempotent of the atom ``e`` of rank one slot."""
    x = _normalize_at(a, cell_id, e)
    xi = inverse(x)
    dm = x @ e @ xi
    first = next(s for s in slots(a, cell_id) if dm[s.offset, s.offset] == ONE)
    w = xi @ slot_indicator(a, cell_id, [(first.block, first.copy)]) @ x
    return CommutantElement.at_cell(a, cell_id, w)


def standardize_family(a: OperatorModel, family: Sequence[CommutantElement]) -> CommutantElement:
    """Invertible ``X ∈ {A}′`` with ``X·P·X⁻¹`` standard for every family member.

    With the skeleton atoms ``E`` at a cell and, for each, a conjugator ``Q_E``
    taking it to its target slot indicator ``S_E``, the glued element
    ``X = Σ S_E·Q_E·E`` satisfies ``X·E = S_E·X`` for all atoms at once and has
    inverse ``Σ E·Q_E⁻¹·S_E``.
    """
    skel = extract_skeleton(a, family)
    mats = {}
    for c in a.partition:
        d = a.fiber_dim(c.id)
        acc = Matrix.zeros(d)
        for (k, j), p in skel:
            e = p[c.id]
            if e.is_zero():
                continue
            target = slot_indicator(a, c.id, [(k, j)])
            z = _normalize_at(a, c.id, e)
            img = z @ e @ inverse(z)
            src = next(s.copy for s in slots(a, c.id) if s.block == k and img[s.offset, s.offset])
            q = _copy_swap(a, c.id, k, src, j) @ z
            if q @ e @ inverse(q) != target:
                raise InvariantBreach(f"atom normalization failed at cell {c.id}")
            acc = acc + target @ q @ e
        mats[c.id] = acc
    x = CommutantElement(a, mats)
    if not x.is_invertible():
        raise InvariantBreach("glued conjugator is singular")
    for p in family:
        img = p.conjugate_by(x)
        if not all(in_standard_lattice(a, c.id, img[c.id]) for c in a.partition):
            raise InvariantBreach("standardized family member is not standard")
    return x


def _copy_swap(a: OperatorModel, cell_id: str, k: int, i: int, j: int) -> Matrix:
    """Permutation exchanging copies ``i`` and ``j`` of block ``k`` at one cell."""
    d = a.fiber_dim(cell_id)
    sl = _class_slots(a, cell_id)[k]
    perm = list(range(d))
    s0, sj = sl[i], sl[j]
    for r in range(s0.size):
        perm[s0.offset + r], perm[sj.offset + r] = sj.offset + r, s0.offset + r
    return Matrix.from_sparse(d, d, {(i, perm[i]): ONE for i in range(d)})


def lattice_atoms(a: OperatorModel, family: Sequence[CommutantElement]) -> dict[str, frozenset[Matrix]]:
    """Per cell, the atoms generated by the family (equal atom sets ⇔ equal lattices)."""
    return {c.id: frozenset(atoms_at(c.id, family, a.fiber_dim(c.id))) for c in a.partition}
