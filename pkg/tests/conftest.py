import pytest

from orbgw.correlators import InvariantTable
from orbgw.targets import p2, p112


@pytest.fixture
def t112():
    return p112()


@pytest.fixture
def tp2():
    return p2()


@pytest.fixture
def table112(t112):
    return InvariantTable.for_target(t112)


@pytest.fixture
def tablep2(tp2):
    return InvariantTable.for_target(tp2)
