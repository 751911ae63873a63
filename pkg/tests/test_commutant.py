import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import jordan_model, xy_pair
from nnormal.commutant import (CommutantElement, NotCommuting, NotInCommutant, NotMaximal,
                               commutant_basis, extract_skeleton, intertwiner_basis,
                               is_fiberwise_nilpotent, is_radical, lattice_atoms,
                               matches_pattern, normalize_idempotent, random_commutant_element,
                               semisimple_projection, standard_family, standardize_family,
                               trace_r)
from nnormal.linalg import Matrix, NotIdempotent, same_span
from nnormal.oracle import oracle_commutant_dim, oracle_intertwiner_dim
from randmodels import rand_invertible, rand_model

seeds = st.integers(0, 2 ** 32 - 1)


def test_elements_must_commute():
    a = jordan_model([(2, 1)])
    with pytest.raises(NotInCommutant):
        CommutantElement(a, {"c0": Matrix.from_rows([[0, 0], [1, 0]])})
    with pytest.raises(NotInCommutant):
        CommutantElement(a, {"c0": Matrix.identity(3)})


def test_commutant_dimension_of_one_block():
    assert commutant_basis(jordan_model([(2, 1)]))[1] == {"c0": 2}


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("m", [1, 2, 3])
def test_commutant_dimension_n_m_squared(n, m):
    a = jordan_model([(n, m)])
    _, dims = commutant_basis(a)
    assert dims == oracle_commutant_dim(a) == {"c0": n * m * m}


def test_commutant_disjoint_supports():
    from nnormal.measure import Partition
    from nnormal.model import OperatorModel, TriangularBlock
    p = Partition.from_points([0, 1])
    a = OperatorModel(p, ((TriangularBlock.jordan(3, ["c0"]), 1), (TriangularBlock.jordan(2, ["c1"]), 2)))
    assert commutant_basis(a)[1] == {"c0": 3, "c1": 8}


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_commutant_basis_matches_oracle(seed):
    a = rand_model(random.Random(seed))
    basis, dims = commutant_basis(a)
    assert dims == oracle_commutant_dim(a)
    assert len(basis) == sum(dims.values())


def test_intertwiners_same_block():
    a = jordan_model([(2, 1)], points=[0, 3])
    r = intertwiner_basis(a, a)
    assert all(c.dim == 2 and c.pattern == "upper-triangular" for c in r.cells)
    for c in r.cells:
        for x in c.basis:
            assert x[0, 0] == x[1, 1]
    assert r.has_invertible


def test_intertwiners_x_to_y(xy):
    x, y = xy
    r = intertwiner_basis(x, y)
    coords = {c.a_cell: c for c in r.cells}
    for cid, lam in (("c0", -1), ("c1", 0), ("c2", 1)):
        hand = [Matrix.from_rows([[1, 0], [0, lam]]), Matrix.from_rows([[0, 1], [0, 0]])]
        assert same_span(coords[cid].basis, hand)
    assert not r.has_invertible
    assert {z: d for z, d in oracle_intertwiner_dim(x, y).items()} == {-1: 2, 0: 2, 1: 2}


def test_intertwiners_x_to_y_away_from_zero():
    x, y = xy_pair([-1, 1])
    assert intertwiner_basis(x, y).has_invertible


@pytest.mark.parametrize("na, nb, shape", [(3, 2, "(X1;0)"), (2, 3, "(0,Y1)")])
def test_intertwiner_zero_patterns(na, nb, shape):
    r = intertwiner_basis(jordan_model([(na, 1)]), jordan_model([(nb, 1)]))
    (cell,) = r.cells
    assert cell.dim == 2 and cell.pattern == shape and cell.pattern_ok
    for x in cell.basis:
        if na > nb:
            assert all(not x[na - 1, j] for j in range(nb))
        else:
            assert all(not x[i, 0] for i in range(na))


def test_pattern_checker_rejects():
    assert not matches_pattern(Matrix.from_rows([[1, 0], [0, 0], [0, 1]]), 3, 2)
    assert not matches_pattern(Matrix.from_rows([[1, 0, 0], [0, 0, 0]]), 2, 3)


def test_disjoint_diagonals_have_no_intertwiners():
    r = intertwiner_basis(jordan_model([(2, 1)], points=[0]), jordan_model([(2, 1)], points=[1]))
    assert all(c.dim == 0 for c in r.cells)
    assert set(oracle_intertwiner_dim(jordan_model([(2, 1)], points=[0]),
                                      jordan_model([(2, 1)], points=[1])).values()) == {0}


def test_projection_of_identity_and_nilpotent():
    a = jordan_model([(3, 2)])
    one = CommutantElement.identity(a)
    assert semisimple_projection(one) == one
    n = CommutantElement(a, {"c0": Matrix.from_sparse(6, 6, {(0, 1): 1, (1, 2): 1, (3, 4): 2, (4, 5): 2, (0, 5): 7})})
    assert is_radical(n) and is_fiberwise_nilpotent(n)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_projection_is_a_homomorphism(seed):
    rng = random.Random(seed)
    a = rand_model(rng)
    x, y = random_commutant_element(a, rng), random_commutant_element(a, rng)
    px, py = semisimple_projection(x), semisimple_projection(y)
    assert semisimple_projection(x @ y) == px @ py
    assert semisimple_projection(x + y) == px + py
    assert semisimple_projection(px) == px
    assert is_fiberwise_nilpotent(x - px)


def test_trace_vector_examples():
    a = jordan_model([(3, 2), (1, 1)], points=[0, 1])
    one = trace_r(a, CommutantElement.identity(a)).values
    assert one == {("c0", 0): 2, ("c0", 1): 1, ("c1", 0): 2, ("c1", 1): 1}
    zero = trace_r(a, CommutantElement.zero(a)).values
    assert set(zero.values()) == {0}
    for (k, j), p in standard_family(a).skeleton:
        tv = trace_r(a, p).values
        assert all(v == (1 if kk == k else 0) for (_, kk), v in tv.items())
    with pytest.raises(NotIdempotent):
        trace_r(a, CommutantElement.identity(a).scale(2))


def test_normalize_displayed_conjugation():
    a = jordan_model([(1, 2)], points=[0, 1])
    p = CommutantElement(a, {c: Matrix.from_rows([[1, 1], [0, 0]]) for c in ("c0", "c1")})
    x, d = normalize_idempotent(a, p)
    assert all(x[c] == Matrix.from_rows([[1, 1], [0, 1]]) for c in ("c0", "c1"))
    assert d == standard_family(a).skeleton[0][1]


def test_normalize_standard_is_trivial():
    a = jordan_model([(2, 3), (1, 1)])
    for _, p in standard_family(a).skeleton:
        x, d = normalize_idempotent(a, p)
        assert x.is_identity() and d == p


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_normalize_random_conjugates(seed):
    rng = random.Random(seed)
    a = rand_model(rng)
    s = rand_invertible(rng, a)
    sf = standard_family(a).elements()
    d0 = CommutantElement.zero(a)
    for e in sf:
        if rng.random() < 0.5:
            d0 = d0 + e
    p = d0.conjugate_by(s)
    x, d = normalize_idempotent(a, p)
    assert p.conjugate_by(x) == d
    assert standard_family(a).contains(d)
    assert trace_r(a, d) == trace_r(a, p) == trace_r(a, d0)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_equal_traces_means_conjugate(seed):
    rng = random.Random(seed)
    a = rand_model(rng)
    sf = standard_family(a).elements()
    picks = [e for e in sf if rng.random() < 0.5]
    d0 = sum(picks[1:], picks[0]) if picks else CommutantElement.zero(a)
    p = d0.conjugate_by(rand_invertible(rng, a))
    q = d0.conjugate_by(rand_invertible(rng, a))
    xp, dp = normalize_idempotent(a, p)
    xq, dq = normalize_idempotent(a, q)
    assert dp == dq
    z = xq.inverse() @ xp
    assert p.conjugate_by(z) == q


def test_trace_vectors_separate_non_conjugates():
    a = jordan_model([(2, 2)])
    p, q = standard_family(a).elements()
    assert trace_r(a, p) == trace_r(a, q)
    assert trace_r(a, p) != trace_r(a, p + q)


def test_skeleton_of_standard_family():
    a = jordan_model([(2, 2), (1, 3)], points=[0, 4])
    sf = standard_family(a)
    assert extract_skeleton(a, sf.elements()) == list(sf.skeleton)


def test_zero_and_identity_are_not_maximal():
    a = jordan_model([(1, 2)])
    with pytest.raises(NotMaximal) as err:
        extract_skeleton(a, [CommutantElement.zero(a), CommutantElement.identity(a)])
    assert err.value.witness == standard_family(a).skeleton[0][1]


def test_non_maximal_witness_commutes_and_refines():
    a = jordan_model([(2, 2), (1, 2)])
    sf = standard_family(a).elements()
    family = [sf[0] + sf[1], sf[2]]
    with pytest.raises(NotMaximal) as err:
        extract_skeleton(a, family)
    w = err.value.witness
    assert w.is_idempotent() and not w.is_zero()
    assert all(w @ p == p @ w for p in family)
    assert w not in {sf[0] + sf[1], sf[2], sf[3], CommutantElement.identity(a)}


def test_family_must_commute():
    a = jordan_model([(1, 2)])
    p = CommutantElement(a, {"c0": Matrix.from_rows([[1, 1], [0, 0]])})
    q = CommutantElement(a, {"c0": Matrix.from_rows([[1, 0], [0, 0]])})
    with pytest.raises(NotCommuting):
        extract_skeleton(a, [p, q])


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_skeleton_of_conjugated_family(seed):
    rng = random.Random(seed)
    a = rand_model(rng)
    s = rand_invertible(rng, a)
    fam = [e.conjugate_by(s) for e in standard_family(a).elements()]
    skel = extract_skeleton(a, fam)
    for (k, _), p in skel:
        assert all(v == (1 if kk == k else 0) for (_, kk), v in trace_r(a, p).values.items())


def test_standardize_standard_family_is_identity():
    a = jordan_model([(3, 1), (1, 2)])
    assert standardize_family(a, standard_family(a).elements()).is_identity()


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_any_two_maximal_families_are_conjugate(seed):
    rng = random.Random(seed)
    a = rand_model(rng)
    sf = standard_family(a).elements()
    s1, s2 = rand_invertible(rng, a), rand_invertible(rng, a)
    f1 = [e.conjugate_by(s1) for e in sf]
    f2 = [e.conjugate_by(s2) for e in sf]
    x1, x2 = standardize_family(a, f1), standardize_family(a, f2)
    target = lattice_atoms(a, sf)
    assert lattice_atoms(a, [p.conjugate_by(x1) for p in f1]) == target
    assert lattice_atoms(a, [p.conjugate_by(x2) for p in f2]) == target
    z = x2.inverse() @ x1
    assert lattice_atoms(a, [p.conjugate_by(z) for p in f1]) == lattice_atoms(a, f2)
