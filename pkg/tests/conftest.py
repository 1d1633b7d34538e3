import numpy as np
import pytest

from ncca.enumeration import EnumerationRequest, enumerate_ncca
from ncca.rules import DenseRule, StateSet

Q01 = StateSet((0, 1))
Q012 = StateSet((0, 1, 2))

# leading direction +v2 with the pairs {0,+v1}, {0,-v2}, {-v1,-v2}, {+v1,-v2}
UP_LAMBDA_D2 = ((0, 1), (0, 4), (1, 4), (2, 4))


def _catalog(d, Q):
    return list(enumerate_ncca(EnumerationRequest(d, Q)))


@pytest.fixture(scope="session")
def binary_d2():
    return _catalog(2, Q01)


@pytest.fixture(scope="session")
def ternary_d2():
    return _catalog(2, Q012)


@pytest.fixture(scope="session")
def binary_d3():
    return _catalog(3, Q01)


def random_dense(rng, d, Q):
    n = len(Q) ** (2 * d + 1)
    return DenseRule(d, Q, Q.as_array()[rng.integers(0, len(Q), n)])


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)
