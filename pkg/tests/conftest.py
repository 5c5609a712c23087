import numpy as np
import pytest

from dsmm import AccuracyConfig, NoiseModel


@pytest.fixture
def noiseless():
    return NoiseModel()


@pytest.fixture
def default_acc():
    return AccuracyConfig(eps_f=1.0, p_f=0.9, l_f=1.0)


def unit_vector(gen: np.random.Generator, dim: int) -> np.ndarray:
    u = gen.standard_normal(dim)
    return u / np.linalg.norm(u)
