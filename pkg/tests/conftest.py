import numpy as np
import pytest

from optdesign.models import (
    Design,
    compartment_model,
    grid_points,
    poly_model,
    qcube_symmetric_space,
)


@pytest.fixture(scope="session")
def poly2_small():
    """Quadratic regression on an 11-point grid; small enough to brute-force."""
    return poly_model(2, grid_points(-1.0, 1.0, 0.2))


@pytest.fixture(scope="session")
def poly4_grid():
    """The 201-point degree-4 space of the constrained-design tables."""
    return poly_model(4, grid_points(-1.0, 1.0, 0.01))


@pytest.fixture(scope="session")
def compartment():
    return compartment_model()


@pytest.fixture(scope="session")
def qcube2():
    return qcube_symmetric_space(2)


def random_design(rng, n, sparse=False) -> Design:
    """A random interior (or sparse boundary) point of the simplex."""
    if sparse:
        w = np.zeros(n)
        k = rng.integers(1, min(n, 5) + 1)
        idx = rng.choice(n, size=k, replace=False)
        w[idx] = rng.dirichlet(np.ones(k))
    else:
        w = rng.dirichlet(np.ones(n))
    return Design(w)
