import pytest

from nnormal.measure import Partition, StepFunction
from nnormal.model import OperatorModel, TriangularBlock

ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])


def xy_pair(points):
    """The pair X = [[N, I], [0, N]] and Y = [[N, N], [0, N]] over the given points."""
    p = Partition.from_points(points)
    ids = p.ids
    x = OperatorModel(p, ((TriangularBlock(2, ids, {(1, 2): StepFunction.constant(ids, 1)}), 1),))
    y = OperatorModel(p, ((TriangularBlock(2, ids, {(1, 2): StepFunction({c.id: c.coordinate for c in p})}), 1),))
    return x, y


def jordan_model(layout, points=(0,)):
    """Blocks ``[(size, mult), …]`` in normal form, all supported on every cell."""
    p = Partition.from_points(points)
    return OperatorModel(p, tuple((TriangularBlock.jordan(n, p.ids), m) for n, m in layout))


@pytest.fixture
def xy():
    return xy_pair([-1, 0, 1])
