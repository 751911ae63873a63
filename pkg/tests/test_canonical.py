import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import jordan_model, xy_pair
from nnormal.canonical import (are_similar, canonicalize, decompose_by_multiplicity,
                               identity_class, is_canonical, k0_invariant, r_function,
                               signature)
from nnormal.linalg import inverse, is_invertible, permutation_matrix
from nnormal.measure import Partition, StepFunction
from nnormal.model import (MultiplicityInput, OperatorModel, TriangularBlock, assemble,
                           direct_sum, fiber, validate)
from nnormal.oracle import oracle_similar
from randmodels import rand_model, rand_multiplicity_input, rand_pair, similar_variant

seeds = st.integers(0, 2 ** 32 - 1)


def sizes(model):
    return sorted(((b.size, m, b.support) for b, m in model.blocks), key=lambda t: -t[0])


def test_canonicalize_x(xy):
    x, _ = xy
    c = canonicalize(x)
    assert sizes(c.model) == [(2, 1, ("c0", "c1", "c2"))]
    assert all(s.is_identity() for s in c.conjugators.values())


def test_canonicalize_y(xy):
    _, y = xy
    c = canonicalize(y)
    assert sizes(c.model) == [(2, 1, ("c0", "c2")), (1, 2, ("c1",))]
    assert validate(c.model) == []
    for cell in y.partition:
        s = c.conjugators[cell.id]
        assert s @ fiber(y, cell) == fiber(c.model, cell) @ s


def test_canonical_blocks_are_normal_forms():
    rng = random.Random(3)
    for _ in range(20):
        c = canonicalize(rand_model(rng)).model
        assert all(b.is_normal_form() for b, _ in c.blocks)
        assert validate(c) == []


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_canonicalize_is_idempotent(seed):
    a = canonicalize(rand_model(random.Random(seed))).model
    again = canonicalize(a)
    assert again.model == a
    assert all(s.is_identity() for s in again.conjugators.values())
    assert is_canonical(a)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_canonicalize_preserves_the_operator(seed):
    a = rand_model(random.Random(seed))
    c = canonicalize(a)
    assert oracle_similar(a, c.model)
    for cell in a.partition:
        s = c.conjugators[cell.id]
        assert is_invertible(s) or s.rows == 0
        assert s @ fiber(a, cell) @ inverse(s) == fiber(c.model, cell)


def test_three_block_signature():
    a = jordan_model([(4, 1), (2, 3), (1, 2)], points=[0, 5])
    sig = signature(a)
    assert sig["c0"] == sig["c1"] == ((4, 1), (2, 3), (1, 2))
    assert r_function(a) == {"c0": 3, "c1": 3}


def test_single_block_r_function():
    p = Partition.from_points([0, 1, 2])
    a = OperatorModel(p, ((TriangularBlock.jordan(3, ["c0", "c2"]), 2),))
    assert r_function(a) == {"c0": 1, "c1": 0, "c2": 1}


def test_r_function_of_x_plus_y(xy):
    x, y = xy
    c = canonicalize(direct_sum(x, y)).model
    assert r_function(c) == {"c0": 1, "c1": 2, "c2": 1}
    assert signature(c)["c1"] == ((2, 1), (1, 2))


def test_k0_three_block_family():
    a = jordan_model([(3, 2), (2, 1), (1, 3)], points=[-1, 1])
    k0 = k0_invariant(a)
    assert len(k0.classes) == 1
    cls = k0.classes[0]
    assert cls.rank == 3 and cls.identity == (2, 1, 3) and set(cls.cells) == {"c0", "c1"}
    assert cls.render() == "cells {c0, c1}: Z^3, generators [(3,2), (2,1), (1,3)], [I] = (2, 1, 3)"
    aa = direct_sum(a, a)
    assert identity_class(aa) == [(("c0", "c1"), (4, 2, 6))]


def test_k0_excludes_uncovered_cells():
    p = Partition.from_points([0, 1, 2])
    a = OperatorModel(p, ((TriangularBlock.jordan(2, ["c0"]), 1), (TriangularBlock.jordan(1, ["c2"]), 2)))
    k0 = k0_invariant(a)
    assert [c.cells for c in k0.classes] == [("c0",), ("c2",)]
    assert "c1" not in k0.render()


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_identity_class_doubles_under_direct_sum(seed):
    a = canonicalize(rand_model(random.Random(seed))).model
    twice = {cells: tuple(2 * m for m in ident) for cells, ident in identity_class(a)}
    assert dict(identity_class(canonicalize(direct_sum(a, a)).model)) == twice


def test_x_vs_y_with_zero(xy):
    x, y = xy
    r = are_similar(x, y, want_witness=True)
    assert not r.similar and r.witness is None
    d = r.divergence
    assert d.a_cell == "c1" and d.coordinate == 0
    assert d.a_signature == ((2, 1),) and d.b_signature == ((1, 2),)


def test_x_vs_y_without_zero():
    x, y = xy_pair([-1, 1])
    r = are_similar(x, y, want_witness=True)
    assert r.similar and not r.extension
    for w in r.witness:
        fx, fy = fiber(x, w.a_cell), fiber(y, w.b_cell)
        assert w.matrix @ fx == fy @ w.matrix and is_invertible(w.matrix)


def test_self_similarity_has_identity_witness():
    a = rand_model(random.Random(11))
    r = are_similar(a, a, want_witness=True)
    assert r.similar
    assert all(w.matrix.is_identity() for w in r.witness)


def test_empty_models():
    p, q = Partition.from_points([0]), Partition.from_points([1])
    assert are_similar(OperatorModel(p, ()), OperatorModel(q, ())).similar
    assert not are_similar(OperatorModel(p, ()), jordan_model([(1, 1)], points=[1])).similar


def test_uncovered_cells_do_not_matter():
    a = jordan_model([(2, 1)], points=[0])
    p = Partition.from_points([0, 7])
    b = OperatorModel(p, ((TriangularBlock.jordan(2, ["c0"]), 1),))
    r = are_similar(a, b)
    assert r.similar and r.extension


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_similar_variants_are_similar_with_witness(seed):
    rng = random.Random(seed)
    a = rand_model(rng)
    b = similar_variant(rng, a)
    r = are_similar(a, b, want_witness=True)
    assert r.similar
    for w in r.witness:
        if w.a_cell and w.b_cell:
            assert w.matrix @ fiber(a, w.a_cell) == fiber(b, w.b_cell) @ w.matrix


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_verdict_matches_oracle(seed):
    a, b = rand_pair(random.Random(seed))
    assert are_similar(a, b).similar == oracle_similar(a, b)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_k0_is_a_similarity_invariant(seed):
    rng = random.Random(seed)
    a = rand_model(rng)
    b = similar_variant(rng, a)

    def by_coords(m):
        c = canonicalize(m).model
        return {(frozenset(c.partition.cell(i).coordinate for i in cls.cells), cls.generators)
                for cls in k0_invariant(c).classes}

    assert by_coords(a) == by_coords(b)


def test_decompose_injective_is_relabeling():
    p = Partition.from_points([0, 1])
    entries = {(1, 2): StepFunction({"c0": 1, "c1": 3})}
    inp = MultiplicityInput(p, TriangularBlock(2, p.ids, entries, StepFunction({"c0": 4, "c1": 9})))
    dec = decompose_by_multiplicity(inp)
    assert len(dec.intermediate.blocks) == 1
    assert assemble(dec.intermediate) == assemble(inp)
    assert dec.permutation == [0, 1, 2, 3]


@pytest.mark.parametrize("g_b, expected", [(2, [(2, 2)]), (0, [(2, 1), (1, 2)])])
def test_decompose_two_preimages(g_b, expected):
    p = Partition.from_points([0, 1])
    entries = {(1, 2): StepFunction({"c0": 1, "c1": g_b})}
    inp = MultiplicityInput(p, TriangularBlock(2, p.ids, entries, StepFunction.constant(p.ids, 5)))
    dec = decompose_by_multiplicity(inp)
    assert dec.intermediate.partition.ids == ("f=5",)
    assert [(b.size, m) for b, m in dec.intermediate.blocks] == [(2, 1), (2, 1)]
    assert [(b.size, m) for b, m in dec.final.blocks] == expected


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_decompose_conserves_the_operator(seed):
    inp = rand_multiplicity_input(random.Random(seed))
    dec = decompose_by_multiplicity(inp)
    p = permutation_matrix(dec.permutation)
    assert p @ assemble(inp) @ p.transpose() == assemble(dec.intermediate)
    assert oracle_similar(dec.final, inp)


def test_rendering_is_stable(xy):
    x, y = xy
    first = are_similar(x, y, True).render()
    assert first == are_similar(x, y, True).render()
    assert "λ=0" in first
