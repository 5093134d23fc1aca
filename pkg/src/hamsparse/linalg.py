"""Dense complex linear algebra on qubit spaces.

Qubits are labelled ``0 .. n-1`` and qubit 0 is the most significant bit of a
basis index, so ``index = sum(x[i] << (n - 1 - i))``. A local operator acting
on an ordered tuple ``T`` reads the bits of ``x`` at positions ``T`` in tuple
order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import numpy.typing as npt

HERMITIAN_TOL = 1e-10
RESIDUAL_TOL = 1e-8
KERNEL_TOL = 1e-9
LOEWNER_TOL = 1e-8

Array = npt.NDArray[np.complex128]


class SymmetryError(ValueError):
    """Raised when a matrix is not Hermitian within tolerance."""


class PSDError(ValueError):
    """Raised when a matrix expected to be PSD has a clearly negative eigenvalue."""


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: npt.NDArray[np.float64]
    eigenvectors: Array

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.shape[0])


def is_power_of_two(d: int) -> bool:
    return d >= 1 and (d & (d - 1)) == 0


def num_qubits(dim: int) -> int:
    if not is_power_of_two(dim):
        raise ValueError(f"dimension {dim} is not a power of two")
    return dim.bit_length() - 1


def as_hermitian(A: npt.ArrayLike, tol: float = HERMITIAN_TOL) -> Array:
    """Validate ``A`` and return its exact Hermitian part.

    The asymmetry ``max|A - A^dagger|`` must not exceed ``tol * max(1, max|A|)``.
    """
    M = np.asarray(A, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not is_power_of_two(M.shape[0]):
        raise ValueError(f"dimension {M.shape[0]} is not a power of two")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    asym = float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0
    if asym > tol * scale:
        raise SymmetryError(f"matrix is not Hermitian: max|A - A^H| = {asym:.3e} exceeds {tol * scale:.3e}")
    return (M + M.conj().T) / 2


def hermitian_eig(A: npt.ArrayLike) -> EigenDecomposition:
    """Full spectrum in ascending order with orthonormal eigenvectors."""
    H = as_hermitian(A)
    w, V = np.linalg.eigh(H)
    resid = np.linalg.norm(H - (V * w) @ V.conj().T)
    if resid > RESIDUAL_TOL * max(1.0, float(np.linalg.norm(H))):
        raise ArithmeticError(f"eigendecomposition residual {resid:.3e} too large")
    return EigenDecomposition(w, V)


def eigvalsh(A: npt.ArrayLike) -> npt.NDArray[np.float64]:
    return np.linalg.eigvalsh(as_hermitian(A))


def lambda_min(A: npt.ArrayLike) -> float:
    return float(eigvalsh(A)[0])


def lambda_max(A: npt.ArrayLike) -> float:
    return float(eigvalsh(A)[-1])


def op_norm(A: npt.ArrayLike) -> float:
    w = eigvalsh(A)
    return float(max(abs(w[0]), abs(w[-1])))


def kernel_basis(A: npt.ArrayLike, tol: float = KERNEL_TOL) -> Array:
    """Orthonormal columns spanning the numerical kernel of a PSD matrix.

    Eigenvalues below ``tol * max(1, lambda_max)`` count as zero. The result has
    shape ``(dim, k)``; ``k == 0`` means the kernel is trivial.
    """
    dec = hermitian_eig(A)
    w = dec.eigenvalues
    cutoff = tol * max(1.0, float(w[-1]))
    if w[0] < -cutoff:
        raise PSDError(f"negative eigenvalue {w[0]:.3e} below -{cutoff:.3e}")
    return dec.eigenvectors[:, w < cutoff]


def numerical_rank(A: npt.ArrayLike, tol: float = KERNEL_TOL) -> int:
    d = np.asarray(A).shape[0]
    return d - kernel_basis(A, tol).shape[1]


def loewner_leq(A: npt.ArrayLike, B: npt.ArrayLike, tol: float = LOEWNER_TOL) -> bool:
    """``A <= B`` in the Loewner order, with slack relative to the larger norm."""
    A = as_hermitian(A)
    B = as_hermitian(B)
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")
    scale = max(1.0, op_norm(A), op_norm(B))
    return lambda_min(B - A) >= -tol * scale


def _check_tuple(T: Sequence[int], n: int) -> tuple[int, ...]:
    T = tuple(int(t) for t in T)
    if len(set(T)) != len(T):
        raise ValueError(f"repeated qubit in tuple {T}")
    for t in T:
        if not 0 <= t < n:
            raise ValueError(f"qubit {t} out of range for n={n}")
    return T


def kron_lift(M: npt.ArrayLike, T: Sequence[int], n: int) -> Array:
    """Lift an ``r``-qubit operator on tuple ``T`` to ``n`` qubits."""
    M = np.asarray(M, dtype=np.complex128)
    T = _check_tuple(T, n)
    r = len(T)
    if M.shape != (2**r, 2**r):
        raise ValueError(f"operator of shape {M.shape} does not act on {r} qubits")
    rest = [q for q in range(n) if q not in T]
    full = np.kron(M, np.eye(2 ** (n - r)))
    # Axis k of the kron product belongs to qubit order[k]; undo that ordering.
    order = list(T) + rest
    inv = list(np.argsort(order))
    full = full.reshape([2] * (2 * n)).transpose(inv + [n + k for k in inv])
    return np.ascontiguousarray(full.reshape(2**n, 2**n))


def apply_local(M: npt.ArrayLike, T: Sequence[int], psi: npt.ArrayLike, n: int) -> Array:
    """Compute ``M_T psi`` without forming the lifted matrix."""
    T = _check_tuple(T, n)
    r = len(T)
    psi = np.asarray(psi, dtype=np.complex128).reshape([2] * n)
    rest = [q for q in range(n) if q not in T]
    moved = psi.transpose(list(T) + rest).reshape(2**r, -1)
    out = (np.asarray(M, dtype=np.complex128) @ moved).reshape([2] * n)
    return out.transpose(list(np.argsort(list(T) + rest))).reshape(-1)


def rank1_sum(vectors: Sequence[npt.ArrayLike], dim: int | None = None) -> Array:
    """Return ``sum_j v_j v_j^dagger``."""
    if len(vectors) == 0:
        if dim is None:
            raise ValueError("empty vector list needs an explicit dimension")
        return np.zeros((dim, dim), dtype=np.complex128)
    V = np.array([np.asarray(v, dtype=np.complex128).reshape(-1) for v in vectors])
    if dim is not None and V.shape[1] != dim:
        raise ValueError(f"vectors have length {V.shape[1]}, expected {dim}")
    if not is_power_of_two(V.shape[1]):
        raise ValueError(f"vector length {V.shape[1]} is not a power of two")
    return V.T @ V.conj()


def permutation_operator(pi: Sequence[int]) -> npt.NDArray[np.float64]:
    """Matrix of ``U_pi``, sending ``|x>`` to ``|pi(x)>`` with ``pi(x)[pi[i]] = x[i]``."""
    n = len(pi)
    if sorted(pi) != list(range(n)):
        raise ValueError(f"{pi} is not a permutation of range({n})")
    N = 2**n
    x = np.arange(N)
    y = np.zeros(N, dtype=np.int64)
    for i in range(n):
        bit = (x >> (n - 1 - i)) & 1
        y |= bit << (n - 1 - pi[i])
    P = np.zeros((N, N))
    P[y, x] = 1.0
    return P


def apply_permutation(pi: Sequence[int], psi: npt.ArrayLike) -> Array:
    """``U_pi psi`` via an axis transpose."""
    n = len(pi)
    psi = np.asarray(psi, dtype=np.complex128).reshape([2] * n)
    # Output axis pi[i] carries input axis i.
    return psi.transpose(list(np.argsort(pi))).reshape(-1)
