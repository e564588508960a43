import numpy as np
import pytest


def uniform(rng, n):
    return rng.random((n, 2))


def lattice(rng, n, side=6):
    return rng.integers(0, side, (n, 2)).astype(float)


def with_duplicates(rng, n):
    base = rng.random((max(1, n // 3), 2))
    return base[rng.integers(0, len(base), n)]


GENERATORS = {"uniform": uniform, "lattice": lattice, "dups": with_duplicates}


@pytest.fixture
def corners():
    return np.array([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)])
