import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from gp_core import KernelSpec  # noqa: E402
from partition_tree import BoxDomain  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: comprobaciones estadísticas con muchas semillas")


@pytest.fixture
def se_kernel():
    return KernelSpec.squared_exponential(lengthscale=0.2)


@pytest.fixture
def matern_kernel():
    return KernelSpec.matern(2.5, lengthscale=0.2)


@pytest.fixture
def unit_domain():
    return BoxDomain.unit(1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
