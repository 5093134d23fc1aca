import numpy as np
import pytest


def random_hermitian(d, rng):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (A + A.conj().T) / 2


def random_psd(d, rank, rng):
    V = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    return V @ V.conj().T


def random_state(n, rng):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)


def transpose_lift(M, T, n):
    """Lift by tensoring with the identity and transposing qubit axes.

    Kept separate from the bit-extraction code in the package.
    """
    r = len(T)
    big = np.kron(M, np.eye(2 ** (n - r)))
    rest = [q for q in range(n) if q not in T]
    order = list(T) + rest  # axis k of `big` holds qubit order[k]
    t = big.reshape([2] * (2 * n))
    inv = [order.index(q) for q in range(n)]
    t = t.transpose(inv + [n + i for i in inv])
    return t.reshape(2**n, 2**n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
