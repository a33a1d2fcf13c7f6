import numpy as np
import pytest

from ks1d import ConstantDiffusion, EntropyTable, PowerLawDiffusion


@pytest.fixture(scope="session")
def quadratic_model():
    return PowerLawDiffusion(1.0, 2.0)


@pytest.fixture(scope="session")
def quadratic_table(quadratic_model):
    return EntropyTable(quadratic_model)


@pytest.fixture(scope="session")
def unit_constant_model():
    return ConstantDiffusion(1.0)


@pytest.fixture(scope="session")
def unit_constant_table(unit_constant_model):
    return EntropyTable(unit_constant_model)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
