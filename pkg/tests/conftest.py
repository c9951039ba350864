import numpy as np
import pytest
from hypothesis import strategies as st

SQ2 = np.sqrt(2.0)

# singlet source, rows/cols ordered (k, l) with k the slow index
SINGLET = np.zeros((9, 9), dtype=complex)
for _i in (2, 4, 6):
    for _j in (2, 4, 6):
        SINGLET[_i, _j] = (1 if _i == _j or {_i, _j} == {2, 6} else -1) / 3.0


def random_direction(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_hermitian(rng, dim):
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return x + x.conj().T


def random_source(rng, dim=3, rank=None):
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    F = g @ g.conj().T
    return F / np.trace(F).real


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


unit_vectors = (
    st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 3)
    .filter(lambda v: np.linalg.norm(v) > 1e-3)
    .map(lambda v: np.asarray(v) / np.linalg.norm(v))
)
