import numpy as np
import pytest

import twinslit as ts


@pytest.fixture(scope="session")
def natural_config():
    return ts.PhysicalConfig()


@pytest.fixture(scope="session")
def ent2_plus(natural_config):
    return ts.build_wavefunction(ts.Variant.ENTANGLED_TWO_SLIT, 1, natural_config)


@pytest.fixture(scope="session")
def ent2_minus(natural_config):
    return ts.build_wavefunction(ts.Variant.ENTANGLED_TWO_SLIT, -1, natural_config)


@pytest.fixture(scope="session")
def product(natural_config):
    return ts.build_wavefunction(ts.Variant.UNENTANGLED_PRODUCT, 1, natural_config)


@pytest.fixture(scope="session")
def four_slit(natural_config):
    return ts.build_wavefunction(ts.Variant.ENTANGLED_FOUR_SLIT, 1, natural_config)


@pytest.fixture
def rng():
    return np.random.default_rng(20240911)
