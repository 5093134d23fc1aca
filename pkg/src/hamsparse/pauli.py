"""Sparsification of Hamiltonians built from Pauli PSD predicates.

A Pauli PSD predicate is ``sign * P_1 (x) ... (x) P_r + Id`` with every
``P_k`` in ``{X, Y, Z}``. Its spectrum is ``{0, 2}``. The pipeline:

1. Group terms by string type. Tuples are sorted ascending and the factors
   permuted to match, so ``X(x)Y`` on ``(a, b)`` and ``Y(x)X`` on ``(b, a)``
   share a class.
2. Merge repeated tuples within a class into one term.
3. Peel each class into r-partite pieces.
4. In the product eigenbasis of a piece, every term is diagonal with energy
   ``2 nu`` exactly when an affine parity holds. Each piece therefore becomes
   an XOR instance.
5. Sparsify each XOR instance and map its weights back to the terms.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
import numpy.typing as npt

from . import linalg, seeds
from .linalg import Array
from .model import Hamiltonian, SparsifierWeights, Term
from .partition import peel_partition
from .xorsparse import XorConstraint, XorInstance, sparsify_xor_unbiased

RECOGNITION_TOL = 1e-10
DECOMPOSITION_TOL = 1e-9

PAULI: dict[str, Array] = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

_S = 1 / np.sqrt(2)
# Column tau is the eigenvector with eigenvalue (-1)^tau.
EIGENBASIS: dict[str, Array] = {
    "Z": np.eye(2, dtype=np.complex128),
    "X": np.array([[_S, _S], [_S, -_S]], dtype=np.complex128),
    "Y": np.array([[_S, _S], [1j * _S, -1j * _S]], dtype=np.complex128),
}


class PauliRecognitionError(ValueError):
    pass


@dataclass(frozen=True)
class PauliString:
    factors: tuple[str, ...]
    sign: int = 1

    def __post_init__(self) -> None:
        f = tuple(str(c).upper() for c in self.factors)
        if not f or any(c not in "XYZ" or len(c) != 1 for c in f):
            raise ValueError(f"factors must be a nonempty sequence over X, Y, Z, got {self.factors}")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        object.__setattr__(self, "factors", f)

    @property
    def r(self) -> int:
        return len(self.factors)

    @property
    def parity(self) -> int:
        return 0 if self.sign == 1 else 1

    def permuted(self, order: Sequence[int]) -> "PauliString":
        return PauliString(tuple(self.factors[k] for k in order), self.sign)

    def __str__(self) -> str:
        return ("+" if self.sign == 1 else "-") + "".join(self.factors)

    def to_json(self) -> dict:
        return {"factors": list(self.factors), "sign": self.sign}


def pauli_product(factors: Sequence[str]) -> Array:
    out = np.ones((1, 1), dtype=np.complex128)
    for c in factors:
        out = np.kron(out, PAULI[c])
    return out


def pauli_matrix(s: PauliString) -> Array:
    """``sign * P_1 (x) ... (x) P_r + Id``."""
    P = pauli_product(s.factors)
    return s.sign * P + np.eye(P.shape[0])


@lru_cache(maxsize=8)
def _basis(r: int) -> tuple[tuple[str, ...], Array]:
    labels = tuple("".join(p) for p in itertools.product("IXYZ", repeat=r))
    mats = np.array([pauli_product(p).reshape(-1) for p in labels])
    return labels, mats


def pauli_coefficients(M: npt.ArrayLike) -> dict[str, complex]:
    """Coefficients of ``M`` in the Pauli basis, ``c_P = tr(P M) / 2^r``."""
    M = np.asarray(M, dtype=np.complex128)
    r = linalg.num_qubits(M.shape[0])
    labels, mats = _basis(r)
    coeffs = mats.conj() @ M.reshape(-1) / 2**r
    return dict(zip(labels, coeffs))


def recognize_pauli(M: npt.ArrayLike, tol: float = RECOGNITION_TOL) -> PauliString:
    coeffs = pauli_coefficients(M)
    r = len(next(iter(coeffs)))
    ident = "I" * r
    best = max((k for k in coeffs if k != ident), key=lambda k: abs(coeffs[k]))
    c = coeffs[best]
    if "I" in best or abs(abs(c) - 1) > tol or abs(c.imag) > tol:
        raise PauliRecognitionError(f"not a Pauli PSD predicate (leading string {best}, coefficient {c:.3g})")
    s = PauliString(tuple(best), 1 if c.real > 0 else -1)
    if np.max(np.abs(np.asarray(M) - pauli_matrix(s))) > tol:
        raise PauliRecognitionError(f"predicate differs from {s} + Id beyond {tol}")
    return s


def pauli_term(T: Sequence[int], s: PauliString, weight: float = 1.0) -> Term:
    if len(T) != s.r:
        raise ValueError(f"tuple {tuple(T)} does not match string arity {s.r}")
    return Term(tuple(T), pauli_matrix(s), weight, label=s)


def term_string(t: Term) -> PauliString:
    if isinstance(t.label, PauliString):
        return t.label
    return recognize_pauli(t.predicate)


def canonical(T: Sequence[int], s: PauliString) -> tuple[tuple[int, ...], PauliString]:
    """Sort the tuple ascending and permute the factors along with it."""
    order = sorted(range(len(T)), key=lambda k: T[k])
    return tuple(T[k] for k in order), s.permuted(order)


@dataclass(frozen=True)
class PauliClass:
    string: PauliString
    members: tuple[int, ...]
    tuples: tuple[tuple[int, ...], ...]


def group_terms(H: Hamiltonian) -> list[PauliClass]:
    """Partition term indices by canonical string, in order of first appearance."""
    buckets: dict[PauliString, list[tuple[int, tuple[int, ...]]]] = {}
    for i, t in enumerate(H.terms):
        try:
            s = term_string(t)
        except PauliRecognitionError as exc:
            raise PauliRecognitionError(f"term {i}: {exc}") from None
        T, cs = canonical(t.tuple, s)
        buckets.setdefault(cs, []).append((i, T))
    return [PauliClass(s, tuple(i for i, _ in v), tuple(T for _, T in v)) for s, v in buckets.items()]


def partite_eigenbasis(s: PauliString, labels: Sequence[int], n: int) -> Array:
    """Unitary whose column ``tau`` is the product eigenvector selected by the bits of ``tau``.

    Qubit ``q`` uses the eigenbasis of factor ``labels[q]``.
    """
    U = np.ones((1, 1), dtype=np.complex128)
    for q in range(n):
        U = np.kron(U, EIGENBASIS[s.factors[labels[q]]])
    return U


def reduce_to_xor(
    tuples: Sequence[Sequence[int]],
    weights: Sequence[float],
    s: PauliString,
    labels: Sequence[int],
    n: int,
    scale: float = 2.0,
) -> XorInstance:
    """One parity constraint per term, with weight ``scale * nu``.

    On a partite basis vector ``tau`` the piece's energy is exactly the
    satisfied mass of ``tau`` when ``scale`` is 2.
    """
    cons = []
    for T, nu in zip(tuples, weights):
        if any(labels[q] != k for k, q in enumerate(T)):
            raise ValueError(f"tuple {tuple(T)} is not partite under the given labels")
        cons.append(XorConstraint(tuple(T), s.parity, scale * nu))
    return XorInstance(n, tuple(cons))


def _merged(H: Hamiltonian, members: Sequence[int], tuples: Sequence[tuple[int, ...]]):
    """Representative index and summed weight for each distinct tuple."""
    rep: dict[tuple[int, ...], int] = {}
    total: dict[int, float] = {}
    for i, T in zip(members, tuples):
        nu = H.terms[i].weight
        if nu <= 0:
            continue
        j = rep.setdefault(T, i)
        total[j] = total.get(j, 0.0) + nu
    return [(j, T, total[j]) for T, j in rep.items()]


def _sparsify_class(H, rows, s, eps, seed, xor_scale, stream, diag):
    """Peel merged rows ``(index, tuple, weight)`` and sparsify piece by piece."""
    out: dict[int, float] = {}
    if not rows:
        return out
    deco = peel_partition([T for _, T, _ in rows], s.r, H.n)
    diag["pieces"] = diag.get("pieces", 0) + len(deco)
    for p_idx, piece in enumerate(deco.pieces):
        sel = [rows[k] for k in piece.indices]
        inst = reduce_to_xor([T for _, T, _ in sel], [nu for _, _, nu in sel], s, piece.labels, H.n, xor_scale)
        sub: dict = {}
        xw = sparsify_xor_unbiased(inst, eps, seed=_piece_seed(seed, stream, p_idx), diagnostics=sub)
        diag["xor_attempts"] = diag.get("xor_attempts", 0) + sub.get("attempts", 0)
        for k, v in xw.items():
            out[sel[k][0]] = v / xor_scale
    return out


def _piece_seed(seed: int, stream: str, piece: int) -> int:
    return int(seeds.seed_sequence(seed, "pauli", stream, piece).generate_state(1)[0])


def sparsify_pauli(H: Hamiltonian, eps: float, seed: int = 0, diagnostics: dict | None = None) -> SparsifierWeights:
    """Weights that ``eps``-sparsify a Hamiltonian of Pauli PSD terms."""
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    diag = diagnostics if diagnostics is not None else {}
    classes = group_terms(H)
    diag["classes"] = len(classes)
    w: dict[int, float] = {}
    for cls in classes:
        rows = _merged(H, cls.members, cls.tuples)
        w.update(_sparsify_class(H, rows, cls.string, eps, seed, 2.0, str(cls.string), diag))
    return SparsifierWeights(w)


def sparsify_decomposition(
    M: npt.ArrayLike,
    eta: Sequence[float],
    strings: Sequence[PauliString],
    H: Hamiltonian,
    eps: float,
    seed: int = 0,
    diagnostics: dict | None = None,
) -> SparsifierWeights:
    """Sparsify an instance whose every predicate is ``M = sum_j eta_j (s_j + Id)``.

    All strings must carry the same sign, so every piece reduces to a single
    XOR instance shared by all components. That instance is sparsified once
    with weights ``eta_1 * nu`` and the result is divided by ``eta_1``.
    """
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    if len(eta) != len(strings) or not strings:
        raise ValueError("need one positive coefficient per string")
    if any(e <= 0 for e in eta):
        raise ValueError("coefficients must be positive")
    M = np.asarray(M, dtype=np.complex128)
    recon = sum(e * pauli_matrix(s) for e, s in zip(eta, strings))
    if np.max(np.abs(M - recon)) > DECOMPOSITION_TOL:
        raise ValueError(f"decomposition residual {np.max(np.abs(M - recon)):.3e} exceeds {DECOMPOSITION_TOL}")
    if len({s.sign for s in strings}) != 1 or len({s.r for s in strings}) != 1:
        raise ValueError("strings must share arity and sign to reduce to one XOR instance")
    for i, t in enumerate(H.terms):
        if t.predicate.shape != M.shape or np.max(np.abs(t.predicate - M)) > DECOMPOSITION_TOL:
            raise ValueError(f"term {i} does not carry the decomposed predicate")
    diag = diagnostics if diagnostics is not None else {}
    rows = _merged(H, range(H.m), H.tuples)
    w = _sparsify_class(H, rows, strings[0], eps, seed, float(eta[0]), str(strings[0]), diag)
    return SparsifierWeights(w)


MAXCUT_DECOMPOSITION = (
    (0.5, 0.5, 0.5),
    (PauliString(("X", "X"), -1), PauliString(("Y", "Y"), -1), PauliString(("Z", "Z"), -1)),
)
