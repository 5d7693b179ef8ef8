import os
import random

os.environ["NO_ENV_FILE"] = "true"

import pytest  # noqa: E402

from stablyfree.coeff_ring import CoeffRing  # noqa: E402
from stablyfree.construction import build_square_A, delta_ring  # noqa: E402
from stablyfree.group_ring import GroupRing  # noqa: E402


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture
def z4():
    """Z[x]/(x^4 - 1)"""
    return CoeffRing.group_ring((4,))


@pytest.fixture
def f3c3():
    return CoeffRing.group_ring((3,), 3)


@pytest.fixture
def f2f2():
    """F_2[C_2][F_2]"""
    return delta_ring(2, 2)


@pytest.fixture
def f3f2():
    return delta_ring(3, 2)


@pytest.fixture
def integers_f2():
    return GroupRing(CoeffRing.integers(), 2)


@pytest.fixture
def square_a2():
    return build_square_A(2, 2)
