import numpy as np
import pytest

from driftls.rng import make_rng


@pytest.fixture
def rng():
    return make_rng(0)


def random_spd(rng, d, jitter=1e-3):
    """Random SPD matrix with eigenvalues bounded away from zero."""
    m = rng.standard_normal((d, d))
    return m @ m.T + jitter * np.eye(d)


def unit_rows(rng, n, d):
    """n random rows on the unit sphere in R^d."""
    x = rng.standard_normal((n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


@pytest.fixture
def spd_factory():
    return random_spd


@pytest.fixture
def sphere_factory():
    return unit_rows
