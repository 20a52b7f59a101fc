import numpy as np
import pytest

from hawkfol import default_grid
from hawkfol.background import preset

K_GENERIC = np.array([[0.3, 0.1, 0.0],
                      [0.1, -0.2, 0.05],
                      [0.0, 0.05, 0.4]])


@pytest.fixture(scope="session")
def grid():
    return default_grid()


@pytest.fixture(scope="session")
def small_grid():
    return default_grid(16, 32)


@pytest.fixture(scope="session")
def flat():
    return preset("flat")


@pytest.fixture(scope="session")
def conformal():
    return preset("conformal_quadratic", eps=0.01)


@pytest.fixture(scope="session")
def conformal_k():
    return preset("conformal_quadratic", eps=0.01, k=K_GENERIC)


@pytest.fixture(scope="session")
def constant_k():
    return preset("constant_k", k=np.diag([1.0, 0.0, 0.0]))
