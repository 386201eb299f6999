import numpy as np
import pytest

import redhom as rh


@pytest.fixture(scope="session")
def so3():
    return rh.so3()


@pytest.fixture(scope="session")
def so4():
    return rh.so_n(4)


@pytest.fixture(scope="session")
def sphere2():
    return rh.sphere2()


@pytest.fixture(scope="session")
def stiefel42():
    return rh.stiefel(4, 2)


@pytest.fixture(scope="session")
def grassmann42():
    return rh.grassmann_like(4, 2)


@pytest.fixture(scope="session")
def rigid_body():
    return rh.group_as_space(rh.so3(), np.diag([1.0, 2.0, 3.0]), name="rigid-body")


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


def commutator_coords(algebra, a, b):
    """Independent bracket oracle: matrix commutator expanded by least squares."""
    ma = np.einsum("i,iab->ab", np.asarray(a, float), algebra.matrix_basis)
    mb = np.einsum("i,iab->ab", np.asarray(b, float), algebra.matrix_basis)
    comm = ma @ mb - mb @ ma
    flat = algebra.matrix_basis.reshape(algebra.dim, -1).T
    coords, *_ = np.linalg.lstsq(flat, comm.ravel(), rcond=None)
    return coords
