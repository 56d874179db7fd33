import numpy as np
import pytest

from specshift import HermitianOperator


def random_hermitian(rng, dim, scale=1.0, complex_entries=False):
    """Random Hermitian matrix with entries in [-scale, scale]."""
    m = rng.uniform(-scale, scale, (dim, dim))
    if complex_entries:
        m = m + 1j * rng.uniform(-scale, scale, (dim, dim))
    return HermitianOperator(m)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
