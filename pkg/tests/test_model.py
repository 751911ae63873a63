import random

import pytest

from conftest import jordan_model
from nnormal.linalg import Matrix
from nnormal.measure import Cell, Partition, StepFunction
from nnormal.model import (ModelError, MultiplicityInput, OperatorModel, StructureError,
                           TriangularBlock, assemble, cell_offsets, direct_sum, fiber,
                           fiber_is_strongly_irreducible, require_valid, union_partition,
                           validate)
from nnormal.oracle import oracle_similar
from randmodels import rand_model


def test_block_entries_must_be_strictly_upper():
    with pytest.raises(StructureError):
        TriangularBlock(2, ("a",), {(2, 1): StepFunction({"a": 1})})
    with pytest.raises(StructureError):
        TriangularBlock(2, ("a", "b"), {(1, 2): StepFunction({"a": 1})})
    with pytest.raises(StructureError):
        TriangularBlock(0, ("a",))


def test_zero_entries_are_dropped():
    b = TriangularBlock(3, ("a",), {(1, 2): StepFunction({"a": 1}), (1, 3): StepFunction({"a": 0})})
    assert [k for k, _ in b.entries] == [(1, 2)]


def test_fiber_layout():
    p = Partition.from_points([2])
    a = OperatorModel(p, ((TriangularBlock.jordan(2, p.ids), 2), (TriangularBlock.jordan(1, p.ids), 1)))
    f = fiber(a, "c0")
    assert f == Matrix.from_rows([[2, 1, 0, 0, 0], [0, 2, 0, 0, 0], [0, 0, 2, 1, 0],
                                  [0, 0, 0, 2, 0], [0, 0, 0, 0, 2]])


def test_x_is_valid_and_y_breaks_v1_at_zero(xy):
    x, y = xy
    assert validate(x) == []
    problems = validate(y)
    assert [(v.rule, v.cell) for v in problems] == [("V1", "c1")]
    with pytest.raises(ModelError):
        require_valid(y)


def test_v2_flags_overlapping_equal_sizes():
    p = Partition.from_points([0, 1])
    a = OperatorModel(p, ((TriangularBlock.jordan(2, ["c0", "c1"]), 1),
                          (TriangularBlock.jordan(2, ["c1"]), 1)))
    assert {v.rule for v in validate(a)} == {"V2"}
    assert validate(a, raw=True) == []


def test_v3_flags_unknown_support():
    p = Partition.from_points([0])
    a = OperatorModel(p, ((TriangularBlock.jordan(1, ["c0", "zz"]), 1),))
    assert {v.rule for v in validate(a)} == {"V3"}


def test_si_fiber_criterion():
    assert fiber_is_strongly_irreducible(Matrix.from_rows([[3, 5, 1], [0, 3, 2], [0, 0, 3]]), 3)
    assert not fiber_is_strongly_irreducible(Matrix.from_rows([[3, 0], [0, 3]]), 3)
    assert not fiber_is_strongly_irreducible(Matrix.from_rows([[3, 1], [0, 4]]), 3)


def test_direct_sum_merges_equal_blocks():
    a = jordan_model([(3, 1), (2, 2)], points=[0, 1])
    s = direct_sum(a, a)
    assert sorted((b.size, m) for b, m in s.blocks) == [(2, 4), (3, 2)]
    assert validate(s) == []


def test_direct_sum_keeps_different_blocks_apart(xy):
    x, y = xy
    s = direct_sum(x, y)
    assert len(s.blocks) == 2
    assert {v.rule for v in validate(s)} == {"V1", "V2"}


def test_direct_sum_is_the_block_sum():
    rng = random.Random(7)
    for _ in range(25):
        a = rand_model(rng)
        b = rand_model(rng, partition=a.partition if rng.random() < 0.5 else None)
        s = direct_sum(a, b)
        union, lmap, rmap = union_partition(a.partition, b.partition)
        for c in union:
            fa = [fiber(a, x) for x, y in lmap.items() if y == c.id]
            fb = [fiber(b, x) for x, y in rmap.items() if y == c.id]
            dim = sum(m.rows for m in fa + fb)
            assert fiber(s, c).rows == dim
        side_by_side = OperatorModel(union, tuple(
            [(blk.renamed(lmap), m) for blk, m in a.blocks] +
            [(blk.renamed(rmap), m) for blk, m in b.blocks]))
        assert oracle_similar(s, side_by_side)


def test_multiplicity_input_needs_explicit_total_diagonal():
    p = Partition.from_points([0, 1])
    with pytest.raises(StructureError):
        MultiplicityInput(p, TriangularBlock.jordan(2, p.ids))
    with pytest.raises(StructureError):
        MultiplicityInput(p, TriangularBlock(1, ("c0",), {}, StepFunction({"c0": 5})))
    inp = MultiplicityInput(p, TriangularBlock(1, p.ids, {}, StepFunction({"c0": 5, "c1": 5})))
    assert fiber(inp, "c1") == Matrix.from_rows([[5]])


def test_assemble_and_offsets():
    p = Partition((Cell("a", 0, 1), Cell("b", 1, 1)))
    a = OperatorModel(p, ((TriangularBlock.jordan(2, ["b"]), 1), (TriangularBlock.jordan(1, ["a", "b"]), 1)))
    assert cell_offsets(a) == {"a": 0, "b": 1}
    assert assemble(a).rows == 4
