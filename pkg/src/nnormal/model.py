"""Operators as finite direct sums of upper-triangular step-function blocks.

An :class:`OperatorModel` is ``⊕ A_{n_k}^{(m_k)}`` over a :class:`Partition`:
block ``k`` has size ``n_k``, multiplicity ``m_k``, a support (a set of cells)
and strictly-upper entries that are step functions on that support.  Its
diagonal is the coordinate function, so at a cell ``c`` the block is the
triangular matrix with ``c.coordinate`` down the diagonal.

A :class:`MultiplicityInput` is a single block whose diagonal is an arbitrary
step function ``f``; it is the input to the multiplicity splitting in
:mod:`nnormal.canonical`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Union

from .linalg import Matrix, block_diag, jordan_structure
from .measure import Cell, Partition, StepFunction
from .scalars import ONE, ZERO, Scalar, as_scalar


class StructureError(ValueError):
    """Malformed block or model (as opposed to a V1 to V3 violation)."""


class ModelError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations) or "invalid model")


def _entry_key(key) -> tuple[int, int]:
    if isinstance(key, str):
        parts = key.split(",")
        if len(parts) != 2:
            raise StructureError(f"entry key {key!r} is not 'i,j'")
        key = (int(parts[0]), int(parts[1]))
    i, j = key
    return int(i), int(j)


@dataclass(frozen=True)
class TriangularBlock:
    """One ``n×n`` upper-triangular block; entry keys are 1-based ``(i, j)``, i < j.

    ``diagonal=None`` means the coordinate diagonal; otherwise it is the step
    function ``f`` of an explicit diagonal.  Entries that vanish identically are
    dropped, so absent and zero are indistinguishable.
    """

    size: int
    support: tuple[str, ...]
    entries: tuple[tuple[tuple[int, int], StepFunction], ...] = ()
    diagonal: StepFunction | None = None

    def __post_init__(self):
        if not isinstance(self.size, int) or self.size < 1:
            raise StructureError(f"block size must be a positive integer, got {self.size!r}")
        support = tuple(self.support)
        if not support:
            raise StructureError("block support must be nonempty")
        if len(set(support)) != len(support):
            raise StructureError(f"repeated cell in block support {support}")
        object.__setattr__(self, "support", support)
        raw = self.entries.items() if isinstance(self.entries, Mapping) else self.entries
        cleaned = {}
        for key, f in raw:
            i, j = _entry_key(key)
            if not (1 <= i < j <= self.size):
                raise StructureError(f"entry ({i},{j}) is not strictly upper in a size-{self.size} block")
            if (i, j) in cleaned:
                raise StructureError(f"entry ({i},{j}) given twice")
            if not isinstance(f, StepFunction):
                f = StepFunction(f)
            if not f.is_total_on(support):
                missing = sorted(set(support) - f.domain)
                raise StructureError(f"entry ({i},{j}) undefined on support cells {missing}")
            f = f.restrict(support)
            if any(f.values.values()):
                cleaned[(i, j)] = f
        object.__setattr__(self, "entries", tuple(sorted(cleaned.items())))
        if self.diagonal is not None:
            d = self.diagonal
            if not isinstance(d, StepFunction):
                d = StepFunction(d)
            if not d.is_total_on(support):
                raise StructureError("explicit diagonal must be defined on the whole support")
            object.__setattr__(self, "diagonal", d.restrict(support))

    @classmethod
    def jordan(cls, size: int, support: Iterable[str]) -> TriangularBlock:
        """The normal form: superdiagonal ≡ 1, every other strict-upper entry ≡ 0."""
        support = tuple(support)
        return cls(size, support, {(i, i + 1): StepFunction.constant(support, 1)
                                   for i in range(1, size)})

    @classmethod
    def constant(cls, size: int, support: Iterable[str], entries: Mapping, diagonal=None) -> TriangularBlock:
        support = tuple(support)
        ents = {k: StepFunction.constant(support, v) for k, v in entries.items()}
        diag = None if diagonal is None else StepFunction.constant(support, diagonal)
        return cls(size, support, ents, diag)

    @property
    def has_coordinate_diagonal(self) -> bool:
        return self.diagonal is None

    @property
    def entry_map(self) -> dict[tuple[int, int], StepFunction]:
        return dict(self.entries)

    def value(self, i: int, j: int, cell_id: str) -> Scalar:
        for key, f in self.entries:
            if key == (i, j):
                return f(cell_id)
        return ZERO

    def covers(self, cell_id: str) -> bool:
        return cell_id in self.support

    def fiber_matrix(self, cell: Cell) -> Matrix:
        n = self.size
        d = cell.coordinate if self.diagonal is None else self.diagonal(cell.id)
        data = {(i, i): d for i in range(n) if d}
        for (i, j), f in self.entries:
            data[(i - 1, j - 1)] = f(cell.id)
        return Matrix.from_sparse(n, n, data)

    def restricted(self, support: Iterable[str]) -> TriangularBlock:
        support = tuple(support)
        return TriangularBlock(self.size, support,
                               {k: f.restrict(support) for k, f in self.entries},
                               None if self.diagonal is None else self.diagonal.restrict(support))

    def renamed(self, mapping: Mapping[str, str]) -> TriangularBlock:
        def ren(f: StepFunction) -> StepFunction:
            return StepFunction({mapping.get(k, k): v for k, v in f.values.items()})
        return TriangularBlock(self.size, tuple(mapping.get(c, c) for c in self.support),
                               {k: ren(f) for k, f in self.entries},
                               None if self.diagonal is None else ren(self.diagonal))

    def is_normal_form(self) -> bool:
        if self.diagonal is not None:
            return False
        want = {(i, i + 1) for i in range(1, self.size)}
        return set(self.entry_map) == want and all(
            all(v == ONE for v in f.values.values()) for _, f in self.entries)


def _partition_order(partition: Partition, support: tuple[str, ...]) -> tuple[str, ...]:
    known = [c for c in support if c in partition]
    unknown = [c for c in support if c not in partition]
    return partition.ordered(known) + tuple(unknown)


@dataclass(frozen=True)
class OperatorModel:
    """``⊕_k B_k^{(m_k)}`` over a partition, every block with coordinate diagonal.

    Construction checks structure only; the V1 to V3 rules are reported by
    :func:`validate`.  Models that break V2 ("raw" models) are legal inputs to
    canonicalization.
    """

    partition: Partition
    blocks: tuple[tuple[TriangularBlock, int], ...] = ()

    def __post_init__(self):
        blocks = []
        for entry in self.blocks:
            block, mult = entry
            if not isinstance(block, TriangularBlock):
                raise StructureError("blocks must be TriangularBlock instances")
            if not block.has_coordinate_diagonal:
                raise StructureError("operator-model blocks must have the coordinate diagonal")
            if not isinstance(mult, int) or isinstance(mult, bool) or mult < 1:
                raise StructureError(f"multiplicity must be a positive integer, got {mult!r}")
            ordered = _partition_order(self.partition, block.support)
            if ordered != block.support:
                block = TriangularBlock(block.size, ordered, block.entries, block.diagonal)
            blocks.append((block, mult))
        object.__setattr__(self, "blocks", tuple(blocks))

    def blocks_at(self, cell_id: str) -> list[tuple[int, TriangularBlock, int]]:
        """``(block index, block, multiplicity)`` for blocks covering the cell."""
        return [(k, b, m) for k, (b, m) in enumerate(self.blocks) if b.covers(cell_id)]

    def fiber_dim(self, cell_id: str) -> int:
        return sum(b.size * m for _, b, m in self.blocks_at(cell_id))

    def covered(self, cell_id: str) -> bool:
        return any(b.covers(cell_id) for b, _ in self.blocks)


@dataclass(frozen=True)
class MultiplicityInput:
    """A single block ``(M_f, f_ij)`` with explicit diagonal ``f`` on every cell."""

    partition: Partition
    block: TriangularBlock

    def __post_init__(self):
        b = self.block
        if b.diagonal is None:
            raise StructureError("multiplicity input needs an explicit diagonal step function")
        if set(b.support) != set(self.partition.ids):
            raise StructureError("multiplicity input block must be supported on every cell")
        ordered = self.partition.ordered(b.support)
        if ordered != b.support:
            object.__setattr__(self, "block",
                               TriangularBlock(b.size, ordered, b.entries, b.diagonal))

    def fiber_dim(self, cell_id: str) -> int:
        return self.block.size


AnyModel = Union[OperatorModel, MultiplicityInput]


@dataclass(frozen=True)
class Violation:
    rule: str
    block: int
    cell: str
    message: str

    def __str__(self):
        return f"{self.rule} block {self.block} cell {self.cell}: {self.message}"


def validate(a: OperatorModel, *, raw: bool = False) -> list[Violation]:
    """All V1 to V3 violations (empty list when the model is valid).

    V1: every superdiagonal entry is nonzero on every support cell.
    V2: distinct blocks of equal size have disjoint supports (skipped if ``raw``).
    V3: every support cell belongs to the partition.
    """
    out: list[Violation] = []
    for k, (b, _) in enumerate(a.blocks):
        for cid in b.support:
            if cid not in a.partition:
                out.append(Violation("V3", k, cid, "support cell not in partition"))
                continue
            for i in range(1, b.size):
                if not b.value(i, i + 1, cid):
                    out.append(Violation("V1", k, cid, f"entry ({i},{i + 1}) vanishes"))
    if not raw:
        for k, (b, _) in enumerate(a.blocks):
            for l in range(k):
                other = a.blocks[l][0]
                if other.size != b.size:
                    continue
                for cid in b.support:
                    if other.covers(cid):
                        out.append(Violation(
                            "V2", k, cid, f"shares the cell with size-{b.size} block {l}"))
    return out


def is_valid(a: OperatorModel, *, raw: bool = False) -> bool:
    return not validate(a, raw=raw)


def require_valid(a: OperatorModel, *, raw: bool = False) -> None:
    problems = validate(a, raw=raw)
    if problems:
        raise ModelError(problems)


def _cell(a: AnyModel, c: Cell | str) -> Cell:
    if isinstance(c, Cell):
        if c.id not in a.partition:
            raise StructureError(f"cell {c.id!r} is not in the model's partition")
        return a.partition.cell(c.id)
    return a.partition.cell(c)


def fiber(a: AnyModel, c: Cell | str) -> Matrix:
    """The operator at one spectral point: block diagonal over covering blocks."""
    cell = _cell(a, c)
    if isinstance(a, MultiplicityInput):
        return a.block.fiber_matrix(cell)
    mats = []
    for _, b, m in a.blocks_at(cell.id):
        mats.extend([b.fiber_matrix(cell)] * m)
    return block_diag(mats)


def assemble(a: AnyModel) -> Matrix:
    """The whole operator as one matrix, cells in partition order."""
    return block_diag(fiber(a, c) for c in a.partition)


def cell_offsets(a: AnyModel) -> dict[str, int]:
    """Row offset of each cell's fiber inside :func:`assemble`."""
    out = {}
    pos = 0
    for c in a.partition:
        out[c.id] = pos
        pos += a.fiber_dim(c.id)
    return out


def union_partition(p1: Partition, p2: Partition) -> tuple[Partition, dict[str, str], dict[str, str]]:
    """Cells of ``p1`` then unmatched cells of ``p2``; matched weights are added.

    Returns the union and the id maps from each side into it.
    """
    cells = []
    left: dict[str, str] = {}
    right: dict[str, str] = {}
    used = set()
    for c in p1:
        other = p2.at(c.coordinate)
        weight = c.weight + (other.weight if other is not None else 0)
        cells.append(Cell(c.id, c.coordinate, weight))
        left[c.id] = c.id
        used.add(c.id)
        if other is not None:
            right[other.id] = c.id
    for c in p2:
        if c.id in right:
            continue
        new_id = c.id
        while new_id in used:
            new_id += "'"
        used.add(new_id)
        cells.append(Cell(new_id, c.coordinate, c.weight))
        right[c.id] = new_id
    return Partition(tuple(cells)), left, right


def reexpress(a: OperatorModel, partition: Partition, mapping: Mapping[str, str]) -> OperatorModel:
    """The same operator with its cells renamed into a larger partition."""
    return OperatorModel(partition, tuple((b.renamed(mapping), m) for b, m in a.blocks))


def direct_sum(a: OperatorModel, b: OperatorModel) -> OperatorModel:
    """``A ⊕ B`` over the coordinate union of the two partitions.

    A block of ``B`` is folded into an equal-size block of ``A`` where the two
    agree entrywise, adding multiplicities there; anything else is kept side by
    side, which may leave V2 violations for canonicalization to resolve.
    """
    part, lmap, rmap = union_partition(a.partition, b.partition)
    # [block, multiplicity, still a pure piece of A]
    result: list[list] = [[blk.renamed(lmap), m, True] for blk, m in a.blocks]
    for rb, rm in ((blk.renamed(rmap), m) for blk, m in b.blocks):
        pending = [rb]
        while pending:
            piece = pending.pop()
            for k, (lb, lm, pure) in enumerate(result):
                if not pure or lb.size != piece.size:
                    continue
                overlap = [c for c in lb.support if piece.covers(c)]
                if not overlap or not _agree(lb, piece, overlap):
                    continue
                only_l = [c for c in lb.support if c not in overlap]
                only_r = [c for c in piece.support if c not in overlap]
                result[k] = [lb.restricted(overlap), lm + rm, False]
                if only_l:
                    result.append([lb.restricted(only_l), lm, True])
                if only_r:
                    pending.append(piece.restricted(only_r))
                break
            else:
                result.append([piece, rm, False])
    return OperatorModel(part, tuple((blk, m) for blk, m, _ in result))


def _agree(x: TriangularBlock, y: TriangularBlock, cells: list[str]) -> bool:
    keys = set(x.entry_map) | set(y.entry_map)
    return all(x.value(i, j, c) == y.value(i, j, c) for (i, j) in keys for c in cells)


def fiber_is_strongly_irreducible(m: Matrix, coordinate) -> bool:
    """A triangular fiber is a single Jordan block exactly when it is SI."""
    c = as_scalar(coordinate)
    if m.rows == 0 or any(d != c for d in m.diagonal()):
        return False
    return jordan_structure(m, [c]) == {c: (m.rows,)}
