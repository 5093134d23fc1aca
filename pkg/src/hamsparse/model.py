"""Terms, Hamiltonians, energies, and the sparsifier verification oracle."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import numpy.typing as npt

from . import linalg
from .linalg import Array

DEFAULT_DENSE_CAP = 14
VERIFY_TOL = 1e-8
SAMPLED_STATES = 200


class CapacityError(RuntimeError):
    """The requested dense computation exceeds the configured qubit cap."""


class ConsistencyError(AssertionError):
    """Two independent evaluations of the same quantity disagree."""


def dense_cap() -> int:
    raw = os.environ.get("HAMSPARSE_DENSE_CAP")
    return int(raw) if raw else DEFAULT_DENSE_CAP


def require_dense(n: int) -> None:
    cap = dense_cap()
    if n > cap:
        raise CapacityError(f"n={n} exceeds the dense cap of {cap} qubits (set HAMSPARSE_DENSE_CAP to override)")


@dataclass(frozen=True, eq=False)
class Term:
    """An ordered qubit tuple, a PSD predicate on it, and a nonnegative weight.

    ``label`` optionally carries a symbolic description of the predicate (for
    instance a Pauli string) so that pipelines need not re-recognise it.
    """

    tuple: tuple[int, ...]
    predicate: Array
    weight: float = 1.0
    label: object = None

    def __post_init__(self) -> None:
        T = tuple(int(t) for t in self.tuple)
        if len(set(T)) != len(T) or not T:
            raise ValueError(f"tuple must be nonempty with distinct qubits, got {T}")
        M = linalg.as_hermitian(self.predicate)
        if M.shape[0] != 2 ** len(T):
            raise ValueError(f"predicate of dim {M.shape[0]} does not match arity {len(T)}")
        w = np.linalg.eigvalsh(M)
        if w[0] < -linalg.KERNEL_TOL * max(1.0, float(w[-1])):
            raise linalg.PSDError(f"predicate on {T} has eigenvalue {w[0]:.3e}")
        if not (self.weight >= 0 and np.isfinite(self.weight)):
            raise ValueError(f"weight must be finite and nonnegative, got {self.weight}")
        M.setflags(write=False)
        object.__setattr__(self, "tuple", T)
        object.__setattr__(self, "predicate", M)
        object.__setattr__(self, "weight", float(self.weight))

    @property
    def arity(self) -> int:
        return len(self.tuple)

    def reweighted(self, weight: float) -> "Term":
        return Term(self.tuple, self.predicate, weight, self.label)


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    n: int
    terms: tuple[Term, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        terms = tuple(self.terms)
        for i, t in enumerate(terms):
            if max(t.tuple) >= self.n or min(t.tuple) < 0:
                raise ValueError(f"term {i} tuple {t.tuple} outside [0, {self.n})")
        object.__setattr__(self, "terms", terms)

    @property
    def m(self) -> int:
        return len(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    @property
    def weights(self) -> npt.NDArray[np.float64]:
        return np.array([t.weight for t in self.terms])

    @property
    def tuples(self) -> list[tuple[int, ...]]:
        return [t.tuple for t in self.terms]

    def subset(self, indices: Iterable[int]) -> "Hamiltonian":
        return Hamiltonian(self.n, tuple(self.terms[i] for i in indices))

    def without(self, index: int) -> "Hamiltonian":
        return Hamiltonian(self.n, self.terms[:index] + self.terms[index + 1 :])

    def covered_qubits(self) -> set[int]:
        return {q for t in self.terms for q in t.tuple}


class SparsifierWeights(Mapping[int, float]):
    """Sparse map from term index to a strictly positive weight.

    These weights replace the term weights entirely.
    """

    def __init__(self, entries: Mapping[int, float] | Iterable[tuple[int, float]] = ()):
        items = dict(entries)
        clean: dict[int, float] = {}
        for k, v in items.items():
            v = float(v)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"invalid weight {v} at index {k}")
            if v > 0:
                clean[int(k)] = v
        self._w = dict(sorted(clean.items()))

    @classmethod
    def identity(cls, H: Hamiltonian) -> "SparsifierWeights":
        return cls({i: t.weight for i, t in enumerate(H.terms)})

    @classmethod
    def from_vector(cls, w: Sequence[float]) -> "SparsifierWeights":
        return cls({i: x for i, x in enumerate(w)})

    def __getitem__(self, k: int) -> float:
        return self._w[k]

    def __iter__(self):
        return iter(self._w)

    def __len__(self) -> int:
        return len(self._w)

    def __repr__(self) -> str:
        return f"SparsifierWeights({self._w!r})"

    @property
    def support(self) -> int:
        return len(self._w)

    @property
    def total(self) -> float:
        return float(sum(self._w.values()))

    def scaled(self, c: float) -> "SparsifierWeights":
        return SparsifierWeights({k: c * v for k, v in self._w.items()})

    def to_vector(self, m: int) -> npt.NDArray[np.float64]:
        out = np.zeros(m)
        for k, v in self._w.items():
            if k >= m:
                raise IndexError(f"weight index {k} out of range for m={m}")
            out[k] = v
        return out

    def to_json(self) -> dict[str, float]:
        return {str(k): v for k, v in self._w.items()}


@dataclass(frozen=True)
class SparsifierReport:
    passed: bool
    epsilon: float
    lambda_min_slack: float
    lambda_max_slack: float
    support_size: int
    scale: float
    mode: str = "certified"

    def to_json(self) -> dict:
        return {
            "pass": self.passed,
            "epsilon": self.epsilon,
            "lambda_min_slack": self.lambda_min_slack,
            "lambda_max_slack": self.lambda_max_slack,
            "support_size": self.support_size,
            "scale": self.scale,
            "mode": self.mode,
        }


def _bits_on(S: Sequence[int], n: int) -> None:
    for q in S:
        if not 0 <= q < n:
            raise ValueError(f"qubit {q} out of range for n={n}")
    if len(set(S)) != len(S):
        raise ValueError(f"repeated qubit in {tuple(S)}")


def restrict_state(psi: npt.ArrayLike, S: Sequence[int], z: Sequence[int], n: int) -> Array:
    """Fix the qubits ``S`` to bits ``z``; the result lives on the remaining qubits in ascending order."""
    S = [int(s) for s in S]
    _bits_on(S, n)
    if len(z) != len(S):
        raise ValueError(f"{len(z)} bits supplied for {len(S)} qubits")
    psi = np.asarray(psi, dtype=np.complex128)
    if psi.shape != (2**n,):
        raise ValueError(f"state has shape {psi.shape}, expected ({2 ** n},)")
    idx: list[object] = [slice(None)] * n
    for q, b in zip(S, z):
        if b not in (0, 1):
            raise ValueError(f"bit value {b} is not 0 or 1")
        idx[q] = int(b)
    return psi.reshape([2] * n)[tuple(idx)].reshape(-1)


def energy(psi: npt.ArrayLike, term: Term, n: int) -> float:
    """Sum over the off-tuple bits ``z`` of ``<psi_z, M psi_z>``."""
    T = list(term.tuple)
    psi = np.asarray(psi, dtype=np.complex128).reshape([2] * n)
    rest = [q for q in range(n) if q not in T]
    # Column j of ``blocks`` is psi_z for the j-th assignment z of the rest.
    blocks = psi.transpose(T + rest).reshape(2 ** len(T), -1)
    return float(np.real(np.vdot(blocks, term.predicate @ blocks)))


def hamiltonian_energy(psi: npt.ArrayLike, H: Hamiltonian, w: Mapping[int, float] | None = None) -> float:
    if w is None:
        return float(sum(t.weight * energy(psi, t, H.n) for t in H.terms if t.weight))
    return float(sum(v * energy(psi, H.terms[i], H.n) for i, v in w.items()))


def assemble(H: Hamiltonian, w: Mapping[int, float] | None = None) -> Array:
    """Dense ``sum_i w_i (M_i)_{T_i}``; term weights are used when ``w`` is None."""
    require_dense(H.n)
    N = 2**H.n
    A = np.zeros((N, N), dtype=np.complex128)
    pairs = ((i, t.weight) for i, t in enumerate(H.terms)) if w is None else w.items()
    for i, c in pairs:
        if c:
            t = H.terms[i]
            A += c * linalg.kron_lift(t.predicate, t.tuple, H.n)
    return A


def ground_space(H: Hamiltonian, tol: float = linalg.KERNEL_TOL) -> Array:
    """Orthonormal basis of the common kernel of all terms."""
    N = 2**H.n
    if H.m == 0:
        return np.eye(N, dtype=np.complex128)
    ones = {i: 1.0 for i in range(H.m)}
    return linalg.kernel_basis(assemble(H, ones), tol)


def _check_eps(eps: float) -> None:
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")


def verify_sparsifier(
    H: Hamiltonian,
    w: Mapping[int, float],
    eps: float,
    tol: float = VERIFY_TOL,
    seed: int = 0,
    mode: str = "auto",
) -> SparsifierReport:
    """Check ``(1-eps) A <= A_w <= (1+eps) A``.

    Both slacks are smallest eigenvalues of the two differences. The pass
    threshold is ``-tol * scale`` with ``scale = max(1, (1+eps)|A|, |A_w|)``.
    With ``mode="auto"`` the check falls back to random and basis states above
    the dense cap and is labelled ``sampled``; ``"dense"`` and ``"sampled"``
    force one route.
    """
    _check_eps(eps)
    if mode not in ("auto", "dense", "sampled"):
        raise ValueError(f"unknown verification mode {mode!r}")
    support = sum(1 for v in w.values() if v > 0)
    if mode == "sampled" or (mode == "auto" and H.n > dense_cap()):
        return _verify_sampled(H, w, eps, tol, seed, support)
    A = assemble(H)
    B = assemble(H, w)
    lo = linalg.lambda_min(B - (1 - eps) * A)
    hi = linalg.lambda_min((1 + eps) * A - B)
    scale = max(1.0, (1 + eps) * linalg.op_norm(A), linalg.op_norm(B))
    ok = lo >= -tol * scale and hi >= -tol * scale
    return SparsifierReport(bool(ok), eps, float(lo), float(hi), support, float(scale))


def _verify_sampled(H, w, eps, tol, seed, support) -> SparsifierReport:
    rng = np.random.default_rng(seed)
    N = 2**H.n
    lo = hi = np.inf
    scale = 1.0

    def states():
        for _ in range(SAMPLED_STATES):
            v = rng.normal(size=N) + 1j * rng.normal(size=N)
            yield v / np.linalg.norm(v)
        for x in range(N):
            e = np.zeros(N, dtype=np.complex128)
            e[x] = 1.0
            yield e

    for psi in states():
        a = hamiltonian_energy(psi, H)
        b = hamiltonian_energy(psi, H, w)
        lo = min(lo, b - (1 - eps) * a)
        hi = min(hi, (1 + eps) * a - b)
        scale = max(scale, (1 + eps) * a, b)
    ok = lo >= -tol * scale and hi >= -tol * scale
    return SparsifierReport(bool(ok), eps, float(lo), float(hi), support, float(scale), mode="sampled")


def diagonal_relation(M: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """The 0/1 diagonal of a classical predicate, or an error if ``M`` is not one."""
    M = np.asarray(M, dtype=np.complex128)
    d = np.real(np.diag(M))
    off = M - np.diag(np.diag(M))
    if np.max(np.abs(off), initial=0.0) > linalg.HERMITIAN_TOL or np.max(np.abs(np.imag(np.diag(M))), initial=0.0) > linalg.HERMITIAN_TOL:
        raise ValueError("predicate is not diagonal")
    if np.any(np.minimum(np.abs(d), np.abs(d - 1)) > linalg.HERMITIAN_TOL):
        raise ValueError("diagonal predicate has entries other than 0 and 1")
    return np.round(d)


def classical_values(H: Hamiltonian, w: Mapping[int, float] | None = None) -> npt.NDArray[np.float64]:
    """Weighted satisfied mass of every assignment ``x`` in basis-index order."""
    n = H.n
    x = np.arange(2**n)
    total = np.zeros(2**n)
    pairs = ((i, t.weight) for i, t in enumerate(H.terms)) if w is None else w.items()
    for i, c in pairs:
        t = H.terms[i]
        d = diagonal_relation(t.predicate)
        r = t.arity
        local = np.zeros(2**n, dtype=np.int64)
        for k, q in enumerate(t.tuple):
            local |= ((x >> (n - 1 - q)) & 1) << (r - 1 - k)
        total += c * d[local]
    return total


def classical_crosscheck(
    H: Hamiltonian,
    w: Mapping[int, float],
    eps: float,
    tol: float = VERIFY_TOL,
) -> bool:
    """Exhaustive check over all ``2^n`` assignments for diagonal 0/1 predicates.

    When ``H`` is small enough for dense verification the verdict is compared
    with :func:`verify_sparsifier` and a disagreement raises ``ConsistencyError``.
    """
    _check_eps(eps)
    if H.n > 20:
        raise CapacityError(f"n={H.n} too large for exhaustive enumeration")
    for i, t in enumerate(H.terms):
        try:
            diagonal_relation(t.predicate)
        except ValueError as exc:
            raise ValueError(f"term {i}: {exc}") from None
    a = classical_values(H)
    b = classical_values(H, w)
    scale = max(1.0, (1 + eps) * float(a.max(initial=0.0)), float(b.max(initial=0.0)))
    lo = float(np.min(b - (1 - eps) * a))
    hi = float(np.min((1 + eps) * a - b))
    ok = lo >= -tol * scale and hi >= -tol * scale
    if H.n <= dense_cap():
        q = verify_sparsifier(H, w, eps, tol)
        if q.passed != ok:
            raise ConsistencyError(f"quantum verdict {q.passed} differs from classical verdict {ok}")
    return bool(ok)
