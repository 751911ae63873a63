"""Canonical strongly irreducible decomposition and the K₀ similarity invariant.

At each cell the fiber of a model is triangular with a single eigenvalue (the
cell's coordinate), so its Jordan structure says which strongly irreducible
blocks live there and how often.  Regrouping cells by ``(size, count)`` gives
the canonical model; two models are similar exactly when their canonical data
agree at every spectral point.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

from .linalg import (Matrix, inverse, is_invertible, jordan_structure, permutation_matrix,
                     similarity_transform)
from .measure import Partition, StepFunction, pushforward, refine_common
from .model import (AnyModel, ModelError, MultiplicityInput, OperatorModel, TriangularBlock,
                    assemble, cell_offsets, fiber, require_valid, validate)
from .scalars import Rational, Scalar, format_scalar

SizeCounts = tuple[tuple[int, int], ...]


class InvariantBreach(AssertionError):
    """An internal identity failed exact verification (always a bug)."""


class Canonical(NamedTuple):
    model: OperatorModel
    conjugators: dict[str, Matrix]
    source: OperatorModel


def _cellwise(raw: AnyModel) -> OperatorModel:
    if isinstance(raw, MultiplicityInput):
        return regroup_by_multiplicity(raw)[0]
    return raw


def canonicalize(raw: AnyModel) -> Canonical:
    """Regroup every fiber into Jordan blocks and rebuild the model from them.

    Returns the canonical model, a conjugator ``S_c`` per cell with
    ``S_c · fiber(source, c) · S_c⁻¹ = fiber(canonical, c)``, and the cellwise
    source model (the input itself, or for a :class:`MultiplicityInput` its
    regrouping over the pushforward partition).
    """
    src = _cellwise(raw)
    v3 = [v for v in validate(src, raw=True) if v.rule == "V3"]
    if v3:
        raise ModelError(v3)
    groups: dict[tuple[int, int], list[str]] = {}
    fibers: dict[str, Matrix] = {}
    for cell in src.partition:
        f = fiber(src, cell)
        fibers[cell.id] = f
        if f.rows == 0:
            continue
        structure = jordan_structure(f, [cell.coordinate])
        for size, count in Counter(structure[cell.coordinate]).items():
            groups.setdefault((size, count), []).append(cell.id)
    index = src.partition.index
    keys = sorted(groups, key=lambda nm: (-nm[0], index(groups[nm][0])))
    blocks = tuple((TriangularBlock.jordan(n, groups[(n, m)]), m) for n, m in keys)
    canon = OperatorModel(src.partition, blocks)
    conjugators = {}
    for cell in src.partition:
        target = fiber(canon, cell)
        s = similarity_transform(fibers[cell.id], target, [cell.coordinate])
        if s is None or s @ fibers[cell.id] != target @ s:
            raise InvariantBreach(f"no conjugator to canonical form at cell {cell.id}")
        conjugators[cell.id] = s
    return Canonical(canon, conjugators, src)


def is_canonical(a: OperatorModel) -> bool:
    return canonicalize(a).model == a


# ---------------------------------------------------------------------------
# signature, r_A and K₀


@dataclass(frozen=True)
class Signature:
    """Per cell, the ``(block size, multiplicity)`` pairs by decreasing size."""

    partition: Partition
    by_cell: Mapping[str, SizeCounts] = field(hash=False)

    def __getitem__(self, cell_id: str) -> SizeCounts:
        return self.by_cell[cell_id]

    def render(self) -> str:
        lines = []
        for c in self.partition:
            pairs = ", ".join(f"({n},{m})" for n, m in self.by_cell[c.id])
            lines.append(f"{c.id} λ={format_scalar(c.coordinate)}: [{pairs}]")
        return "\n".join(lines)


def signature(a: OperatorModel) -> Signature:
    require_valid(a)
    out = {}
    for c in a.partition:
        counts: Counter[int] = Counter()
        for _, b, m in a.blocks_at(c.id):
            counts[b.size] += m
        out[c.id] = tuple(sorted(counts.items(), key=lambda nm: -nm[0]))
    return Signature(a.partition, out)


def r_function(a: OperatorModel) -> dict[str, int]:
    """Number of distinct strongly irreducible block sizes at each cell."""
    sig = signature(a)
    return {cid: len(pairs) for cid, pairs in sig.by_cell.items()}


@dataclass(frozen=True)
class K0Class:
    cells: tuple[str, ...]
    generators: SizeCounts

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def identity(self) -> tuple[int, ...]:
        return tuple(m for _, m in self.generators)

    def render(self) -> str:
        gens = ", ".join(f"({n},{m})" for n, m in self.generators)
        ident = ", ".join(str(m) for m in self.identity)
        if self.rank == 1:
            ident += ","
        return (f"cells {{{', '.join(self.cells)}}}: Z^{self.rank}, "
                f"generators [{gens}], [I] = ({ident})")


@dataclass(frozen=True)
class K0Invariant:
    """Covered cells grouped by equal generator lists.

    On a class with generators ``[(n_1,m_1),…,(n_r,m_r)]`` the group is ``Z^r``
    and the unit's class is ``(m_1,…,m_r)``.
    """

    classes: tuple[K0Class, ...]

    def render(self) -> str:
        if not self.classes:
            return "K0 = 0 (no covered cells)"
        return "\n".join(c.render() for c in self.classes)

    def by_generators(self) -> dict[SizeCounts, tuple[str, ...]]:
        return {c.generators: c.cells for c in self.classes}


def k0_invariant(a: OperatorModel) -> K0Invariant:
    sig = signature(a)
    grouped: dict[SizeCounts, list[str]] = {}
    for c in a.partition:
        gens = sig[c.id]
        if gens:
            grouped.setdefault(gens, []).append(c.id)
    return K0Invariant(tuple(K0Class(tuple(cells), gens) for gens, cells in grouped.items()))


def identity_class(a: OperatorModel) -> list[tuple[tuple[str, ...], tuple[int, ...]]]:
    return [(c.cells, c.identity) for c in k0_invariant(a).classes]


# ---------------------------------------------------------------------------
# similarity


@dataclass(frozen=True)
class Divergence:
    a_cell: str | None
    b_cell: str | None
    coordinate: Scalar
    a_signature: SizeCounts
    b_signature: SizeCounts

    def render(self) -> str:
        def sig(pairs):
            return "[" + ", ".join(f"({n},{m})" for n, m in pairs) + "]"
        where = " / ".join(x for x in (self.a_cell, self.b_cell) if x is not None)
        return (f"first divergence at cell {where} (λ={format_scalar(self.coordinate)}): "
                f"A {sig(self.a_signature)} vs B {sig(self.b_signature)}")


@dataclass(frozen=True)
class WitnessCell:
    a_cell: str | None
    b_cell: str | None
    matrix: Matrix


@dataclass(frozen=True)
class SimilarityReport:
    similar: bool
    divergence: Divergence | None = None
    witness: tuple[WitnessCell, ...] | None = None
    extension: bool = False
    witness_bound: Rational | None = None

    @property
    def verdict(self) -> str:
        return "similar" if self.similar else "not-similar"

    def render(self) -> str:
        lines = [f"verdict: {self.verdict}"]
        if self.divergence is not None:
            lines.append(self.divergence.render())
        lines.append(f"extension: {'true' if self.extension else 'false'}")
        if self.witness is not None:
            lines.append(f"witness: {len(self.witness)} cells, verified")
            lines.append(f"witness norm bound: {self.witness_bound}")
            for w in self.witness:
                pair = f"{w.a_cell or '-'} -> {w.b_cell or '-'}"
                lines.append(f"  {pair}: {w.matrix.rows}x{w.matrix.cols} "
                             f"{_render_rows(w.matrix)}")
        return "\n".join(lines)


def _render_rows(m: Matrix) -> str:
    return "[" + "; ".join(", ".join(format_scalar(x) for x in m.row(i))
                           for i in range(m.rows)) + "]"


def _single_measure(a: AnyModel, b: AnyModel) -> bool:
    """Both inputs in the one-measure class: same points, every block everywhere."""
    for x in (a, b):
        if not isinstance(x, OperatorModel) or validate(x):
            return False
        if any(len(blk.support) != len(x.partition) for blk, _ in x.blocks):
            return False
    pa = {c.coordinate for c in a.partition}
    pb = {c.coordinate for c in b.partition}
    return pa == pb


def are_similar(a: AnyModel, b: AnyModel, want_witness: bool = False) -> SimilarityReport:
    """Decide similarity from canonical signatures, with an optional witness.

    Cells are matched by coordinate; an unmatched cell must be uncovered.  The
    witness maps each fiber of ``a`` onto the matched fiber of ``b`` and is
    verified before it is returned.
    """
    ca, cb = canonicalize(a), canonicalize(b)
    sa, sb = signature(ca.model), signature(cb.model)
    common = refine_common(ca.model.partition, cb.model.partition)
    extension = not _single_measure(a, b)

    partner = {x.id: y for x, y in common.matched}
    divergence = None
    for c in ca.model.partition:
        y = partner.get(c.id)
        other = sb[y.id] if y is not None else ()
        if sa[c.id] != other:
            divergence = Divergence(c.id, y.id if y else None, c.coordinate, sa[c.id], other)
            break
    if divergence is None:
        for c in common.right_only:
            if sb[c.id]:
                divergence = Divergence(None, c.id, c.coordinate, (), sb[c.id])
                break
    if divergence is not None:
        return SimilarityReport(False, divergence, None, extension)
    if not want_witness:
        return SimilarityReport(True, None, None, extension)

    cells = []
    bound = None
    for x, y in common.matched:
        fa, fb = fiber(ca.source, x.id), fiber(cb.source, y.id)
        s = inverse(cb.conjugators[y.id]) @ ca.conjugators[x.id]
        if s @ fa != fb @ s or not is_invertible(s):
            raise InvariantBreach(f"witness fails at cell {x.id}")
        cells.append(WitnessCell(x.id, y.id, s))
        nb = max(s.norm_bound(), inverse(s).norm_bound()) if s.rows else None
        if nb is not None and (bound is None or nb > bound):
            bound = nb
    for x in common.left_only:
        cells.append(WitnessCell(x.id, None, Matrix.zeros(0)))
    for y in common.right_only:
        cells.append(WitnessCell(None, y.id, Matrix.zeros(0)))
    return SimilarityReport(True, None, tuple(cells), extension, bound)


# ---------------------------------------------------------------------------
# multiplicity splitting


def regroup_by_multiplicity(inp: MultiplicityInput) -> tuple[OperatorModel, list[int]]:
    """Rewrite ``(M_f, f_ij)`` over ``ν = μ∘f⁻¹`` as ``⊕_k`` of coordinate-diagonal blocks.

    Block ``k`` lives on the ν-cells with more than ``k`` preimages and carries
    the entries of the ``k``-th preimage.  The second value is the permutation
    ``perm`` with ``assemble(result)[i][j] == assemble(inp)[perm[i]][perm[j]]``.
    """
    nu, fibers = pushforward(inp.partition, inp.block.diagonal)
    n = inp.block.size
    depth = max(len(pre) for pre in fibers.values())
    blocks = []
    for k in range(depth):
        support = [cid for cid in nu.ids if len(fibers[cid]) > k]
        entries = {key: StepFunction({cid: f(fibers[cid][k]) for cid in support})
                   for key, f in inp.block.entries}
        blocks.append((TriangularBlock(n, tuple(support), entries), 1))
    intermediate = OperatorModel(nu, tuple(blocks))
    offsets = cell_offsets(inp)
    perm = [offsets[pre] + r for cid in nu.ids for pre in fibers[cid] for r in range(n)]
    return intermediate, perm


class Decomposition(NamedTuple):
    intermediate: OperatorModel
    final: OperatorModel
    permutation: list[int]


def decompose_by_multiplicity(inp: MultiplicityInput) -> Decomposition:
    intermediate, perm = regroup_by_multiplicity(inp)
    p = permutation_matrix(perm)
    if p @ assemble(inp) @ p.transpose() != assemble(intermediate):
        raise InvariantBreach("regrouped operator is not a permutation of the input")
    final = canonicalize(intermediate).model
    return Decomposition(intermediate, final, perm)
