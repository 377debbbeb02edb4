import numpy as np
import pytest

from dfflow.features import AffineMap, init_bank


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_bank_2d():
    return init_bank(2, 12, 1.6, 3)


@pytest.fixture
def small_bank_3d():
    return init_bank(3, 12, 1.4, 5)


@pytest.fixture
def unit_map_2d():
    return AffineMap.identity(2)


def interior_points(rng, dim, n, lo=0.1, hi=0.9):
    """Points inside the unit box with margin, safe for FD stencils."""
    return rng.uniform(lo, hi, (n, dim))
