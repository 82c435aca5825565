import numpy as np
import pytest

from parmaj import QuadratureConfig
from parmaj import benchmark as bm


@pytest.fixture(scope="session")
def cfg():
    """Default quadrature settings (the ones the tables are produced with)."""
    return QuadratureConfig()


@pytest.fixture(scope="session")
def coarse_cfg():
    """Faster settings for property sweeps; plenty for >=10x safety margins."""
    return QuadratureConfig(base_cells=32, tol=1e-4, max_levels=10)


@pytest.fixture(scope="session")
def data():
    return bm.problem_data()


@pytest.fixture(scope="session")
def exact_u():
    return bm.exact_solution()


@pytest.fixture(scope="session")
def exact_tau():
    return bm.exact_flux()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
