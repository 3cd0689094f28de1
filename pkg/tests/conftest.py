import numpy as np
import pytest

from facecov.basis import BasisSpec, factorize_smoother


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260815)


@pytest.fixture(scope="session")
def small_factor():
    """Smoother factor on a 60-point grid with a small basis (c = 12)."""
    spec = BasisSpec.regular(60, num_interior_knots=8)
    return factorize_smoother(spec)


def random_spd(rng, n):
    a = rng.standard_normal((n, n))
    return a.T @ a + np.eye(n)
