import numpy as np
import pytest

from otslice import make_discrete


def random_measure(rng, d, max_atoms=25, weighted=True, scale=1.0):
    n = int(rng.integers(2, max_atoms + 1))
    pts = rng.standard_normal((n, d)) * scale
    w = rng.dirichlet(np.ones(n)) if weighted else None
    return make_discrete(pts, w)


def random_pair(rng, d, max_atoms=25, weighted=True, scale=1.0):
    return (
        random_measure(rng, d, max_atoms, weighted, scale),
        random_measure(rng, d, max_atoms, weighted, scale),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
