import numpy as np
import pytest

from tsvflab import LinearOperator, StateVector


def random_state(rng: np.random.Generator, dim: int) -> StateVector:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return StateVector(v / np.linalg.norm(v))


def random_hermitian(rng: np.random.Generator, dim: int) -> LinearOperator:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return LinearOperator((a + a.conj().T) / 2.0, hermitian=True)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
