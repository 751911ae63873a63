"""Finite atomic measures and step functions on them.

A :class:`Partition` stands in for a compactly supported measure: every cell is
an atom sitting at a spectral point (its coordinate) with positive mass.
"Almost every point" therefore means "every cell", and a :class:`StepFunction`
is just a table of values on some of the cells.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .scalars import Rational, Scalar, as_scalar, format_scalar, to_rational


class PartitionError(ValueError):
    pass


class DomainError(KeyError):
    """Evaluation of a step function outside its domain."""


@dataclass(frozen=True)
class Cell:
    id: str
    coordinate: Scalar
    weight: Rational

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise PartitionError(f"cell id must be a nonempty string, got {self.id!r}")
        object.__setattr__(self, "coordinate", as_scalar(self.coordinate))
        object.__setattr__(self, "weight", to_rational(self.weight))
        if self.weight <= 0:
            raise PartitionError(f"cell {self.id!r} has non-positive weight {self.weight}")

    def label(self) -> str:
        return f"{self.id} (λ={format_scalar(self.coordinate)})"


@dataclass(frozen=True)
class Partition:
    cells: tuple[Cell, ...]
    _index: Mapping[str, int] = field(init=False, repr=False, compare=False)
    _by_coord: Mapping[Scalar, str] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        cells = tuple(self.cells)
        object.__setattr__(self, "cells", cells)
        if not cells:
            raise PartitionError("partition must have at least one cell")
        index: dict[str, int] = {}
        by_coord: dict[Scalar, str] = {}
        for k, c in enumerate(cells):
            if c.id in index:
                raise PartitionError(f"duplicate cell id {c.id!r}")
            if c.coordinate in by_coord:
                raise PartitionError(
                    f"cells {by_coord[c.coordinate]!r} and {c.id!r} share coordinate "
                    f"{format_scalar(c.coordinate)}; express repeated atoms as multiplicity"
                )
            index[c.id] = k
            by_coord[c.coordinate] = c.id
        object.__setattr__(self, "_index", MappingProxyType(index))
        object.__setattr__(self, "_by_coord", MappingProxyType(by_coord))

    @classmethod
    def from_points(cls, points: Iterable, *, prefix: str = "c") -> Partition:
        """Unit-weight cells at the given coordinates, ids ``c0, c1, ...``."""
        return cls(tuple(Cell(f"{prefix}{k}", as_scalar(p), 1) for k, p in enumerate(points)))

    def __len__(self):
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)

    def __contains__(self, cell_id) -> bool:
        return cell_id in self._index

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.cells)

    def cell(self, cell_id: str) -> Cell:
        try:
            return self.cells[self._index[cell_id]]
        except KeyError:
            raise PartitionError(f"no cell {cell_id!r} in partition") from None

    def index(self, cell_id: str) -> int:
        return self._index[cell_id]

    def at(self, coordinate) -> Cell | None:
        cid = self._by_coord.get(as_scalar(coordinate))
        return None if cid is None else self.cell(cid)

    def total_weight(self) -> Rational:
        return sum((c.weight for c in self.cells), to_rational(0))

    def ordered(self, ids: Iterable[str]) -> tuple[str, ...]:
        """The given ids sorted into partition order."""
        return tuple(sorted(set(ids), key=self.index))


class StepFunction:
    """An element of L∞ of a finite atomic measure: cell id → Scalar."""

    __slots__ = ("_values",)

    def __init__(self, values: Mapping[str, object]):
        self._values = MappingProxyType({k: as_scalar(v) for k, v in values.items()})

    @classmethod
    def constant(cls, domain: Iterable[str], value) -> StepFunction:
        v = as_scalar(value)
        return cls({cid: v for cid in domain})

    @property
    def domain(self) -> frozenset[str]:
        return frozenset(self._values)

    @property
    def values(self) -> Mapping[str, Scalar]:
        return self._values

    def __call__(self, cell_id: str) -> Scalar:
        try:
            return self._values[cell_id]
        except KeyError:
            raise DomainError(f"step function not defined on cell {cell_id!r}") from None

    def restrict(self, domain: Iterable[str]) -> StepFunction:
        return StepFunction({cid: self(cid) for cid in domain})

    def is_total_on(self, domain: Iterable[str]) -> bool:
        return set(domain) <= self._values.keys()

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        return dict(self._values) == dict(other._values)

    def __hash__(self):
        return hash(frozenset(self._values.items()))

    def __repr__(self):
        body = ", ".join(f"{k}: {format_scalar(v)}" for k, v in self._values.items())
        return f"StepFunction({{{body}}})"


@dataclass(frozen=True)
class CommonRefinement:
    matched: tuple[tuple[Cell, Cell], ...]
    left_only: tuple[Cell, ...]
    right_only: tuple[Cell, ...]


def refine_common(p1: Partition, p2: Partition) -> CommonRefinement:
    """Match the cells of two partitions by coordinate; weights are ignored."""
    matched = []
    left_only = []
    for c in p1:
        other = p2.at(c.coordinate)
        if other is None:
            left_only.append(c)
        else:
            matched.append((c, other))
    right_only = tuple(c for c in p2 if p1.at(c.coordinate) is None)
    return CommonRefinement(tuple(matched), tuple(left_only), right_only)


def pushforward_cell_id(value: Scalar) -> str:
    return f"f={format_scalar(value)}"


def pushforward(p: Partition, f: StepFunction) -> tuple[Partition, dict[str, tuple[str, ...]]]:
    """Image measure ``ν = μ∘f⁻¹`` and the preimage cells of each ν-cell.

    ν-cells appear in order of first preimage; preimage lists keep partition
    order, so the multiplicity of a ν-cell is the length of its list.
    """
    if not f.is_total_on(p.ids):
        missing = [cid for cid in p.ids if cid not in f.domain]
        raise DomainError(f"pushforward needs f defined on every cell; missing {missing}")
    fibers: dict[Scalar, list[Cell]] = {}
    for c in p:
        fibers.setdefault(f(c.id), []).append(c)
    cells = []
    fiber_map: dict[str, tuple[str, ...]] = {}
    for value, pre in fibers.items():
        cid = pushforward_cell_id(value)
        cells.append(Cell(cid, value, sum((c.weight for c in pre), to_rational(0))))
        fiber_map[cid] = tuple(c.id for c in pre)
    return Partition(tuple(cells)), fiber_map
