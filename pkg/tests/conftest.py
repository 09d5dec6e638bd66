import numpy as np
import pytest

from covertq.sampling import random_density, random_hermitian
from covertq.states import DensityMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def rng_for(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def diag_state(*probs) -> DensityMatrix:
    return DensityMatrix(np.diag(np.asarray(probs, dtype=complex)))


def pure_state(vec) -> DensityMatrix:
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()))


__all__ = ["rng_for", "diag_state", "pure_state", "random_density", "random_hermitian"]
