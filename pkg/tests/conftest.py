import pytest

from jdgen.kernels import tabulate
from jdgen.levy_noise import ModelConfig


@pytest.fixture(scope="session")
def cfg_default():
    return ModelConfig()


@pytest.fixture(scope="session")
def cfg_gauss():
    return ModelConfig(lam=0.0)


@pytest.fixture(scope="session")
def table_default(cfg_default):
    return tabulate(cfg_default)


@pytest.fixture(scope="session")
def table_gauss(cfg_gauss):
    return tabulate(cfg_gauss)


@pytest.fixture(scope="session")
def cfg_gauss_fine():
    # spacing 0.025 on both axes: t in {0.5, 1, 5} are exact grid nodes and
    # the bilinear x-error of the score ratio stays ~4e-4
    return ModelConfig(lam=0.0, n_grid=399)


@pytest.fixture(scope="session")
def table_gauss_fine(cfg_gauss_fine):
    return tabulate(cfg_gauss_fine)
