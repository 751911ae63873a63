import ast
import inspect
import random

from conftest import jordan_model, xy_pair
import nnormal.oracle as oracle_mod
from nnormal.measure import Partition
from nnormal.model import OperatorModel, TriangularBlock
from nnormal.oracle import oracle_commutant_dim, oracle_intertwiner_dim, oracle_similar
from randmodels import rand_model, similar_variant


def test_oracle_imports_no_decision_code():
    tree = ast.parse(inspect.getsource(oracle_mod))
    imported = {n.module for n in ast.walk(tree) if isinstance(n, ast.ImportFrom)}
    assert not imported & {"canonical", "commutant"}
    assert imported <= {"__future__", "linalg", "measure", "model", "scalars"}


def test_x_and_y():
    x, y = xy_pair([-1, 0, 1])
    assert not oracle_similar(x, y)
    assert oracle_similar(*xy_pair([-1, 1]))
    assert oracle_similar(x, x)


def test_intertwiner_dims():
    a = jordan_model([(2, 1)], points=[0, 1])
    assert set(oracle_intertwiner_dim(a, a).values()) == {2}
    x, y = xy_pair([-1, 0, 1])
    assert set(oracle_intertwiner_dim(x, y).values()) == {2}


def test_dimension_mismatch_is_not_similar():
    assert not oracle_similar(jordan_model([(2, 1)]), jordan_model([(1, 1)]))


def test_uncovered_cells_contribute_nothing():
    p = Partition.from_points([0, 9])
    a = OperatorModel(p, ((TriangularBlock.jordan(2, ["c0"]), 1),))
    assert oracle_similar(a, jordan_model([(2, 1)]))


def test_raw_models_are_accepted():
    p = Partition.from_points([0])
    raw = OperatorModel(p, ((TriangularBlock.jordan(1, ["c0"]), 1), (TriangularBlock.jordan(1, ["c0"]), 1)))
    assert oracle_similar(raw, jordan_model([(1, 2)]))
    assert oracle_commutant_dim(raw) == {"c0": 4}


def test_similar_variants_pass_the_oracle():
    rng = random.Random(5)
    for _ in range(30):
        a = rand_model(rng)
        assert oracle_similar(a, similar_variant(rng, a))
