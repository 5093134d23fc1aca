"""Non-redundancy: certificates, constructions, automorphisms, and projections.

A Hamiltonian is non-redundant when dropping any single term strictly grows
the ground space. Everything here is brute force over dense ground spaces and
is meant for instances of at most a dozen or so qubits.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import numpy.typing as npt

from . import linalg, seeds
from .linalg import Array
from .model import CapacityError, ConsistencyError, Hamiltonian, Term, energy, ground_space, require_dense

WITNESS_TOL = 1e-9
DET_TOL = 1e-9
AUT_TOL = 1e-9
MAX_GROUP_N = 10
MAX_CONNECTIVITY_TERMS = 16


# --- certificates -----------------------------------------------------------


@dataclass(frozen=True)
class NrdCertificate:
    non_redundant: bool
    redundant_term: int | None
    witnesses: tuple[Array | None, ...]
    ground_dim: int
    dropped_dims: tuple[int, ...]

    def witness_energies(self, H: Hamiltonian) -> npt.NDArray[np.float64]:
        """Row ``i`` holds the energy of every term on witness ``i`` (NaN if absent)."""
        E = np.full((H.m, H.m), np.nan)
        for i, psi in enumerate(self.witnesses):
            if psi is not None:
                E[i] = [energy(psi, t, H.n) for t in H.terms]
        return E

    def to_json(self) -> dict:
        return {
            "non_redundant": self.non_redundant,
            "redundant_term": self.redundant_term,
            "ground_dim": self.ground_dim,
            "dropped_dims": list(self.dropped_dims),
        }


def _witness(K: Array, Ki: Array) -> Array:
    """Unit vector in ``span(Ki)`` orthogonal to ``span(K)``."""
    P = Ki - K @ (K.conj().T @ Ki)
    U, s, _ = np.linalg.svd(P, full_matrices=False)
    return U[:, 0]


def is_non_redundant(H: Hamiltonian) -> NrdCertificate:
    """Drop each term in turn and compare ground-space dimensions.

    Each witness is re-checked: positive energy on its own term and zero on
    every other term. A witness that fails its re-check raises
    ``ConsistencyError`` since the dimension count and the energies disagree.
    """
    require_dense(H.n)
    K = ground_space(H)
    witnesses: list[Array | None] = []
    dims = []
    first_bad = None
    for i in range(H.m):
        Ki = ground_space(H.without(i))
        dims.append(Ki.shape[1])
        if Ki.shape[1] <= K.shape[1]:
            witnesses.append(None)
            if first_bad is None:
                first_bad = i
            continue
        psi = _witness(K, Ki)
        e = [energy(psi, t, H.n) for t in H.terms]
        if e[i] <= WITNESS_TOL or any(e[j] > WITNESS_TOL for j in range(H.m) if j != i):
            raise ConsistencyError(f"witness for term {i} fails its energy re-check")
        witnesses.append(psi)
    return NrdCertificate(first_bad is None, first_bad, tuple(witnesses), K.shape[1], tuple(dims))


def greedy_nrd_search(M: npt.ArrayLike, n: int, candidates: Sequence[Sequence[int]], seed: int = 0) -> list[tuple[int, ...]]:
    """Add candidate tuples in random order, keeping each that leaves the instance non-redundant.

    The size of the result is a lower bound on the largest non-redundant
    instance, not its exact value.
    """
    M = np.asarray(M, dtype=np.complex128)
    order = seeds.rng(seed, "nrd-search").permutation(len(candidates))
    kept: list[tuple[int, ...]] = []
    for k in order:
        trial = kept + [tuple(candidates[k])]
        H = Hamiltonian(n, tuple(Term(T, M) for T in trial))
        if is_non_redundant(H).non_redundant:
            kept = trial
    return kept


# --- tensor construction ----------------------------------------------------


def _extreme_vectors(M: Array) -> tuple[Array, Array]:
    dec = linalg.hermitian_eig(M)
    w = dec.eigenvalues
    if w[-1] <= linalg.KERNEL_TOL:
        raise ValueError("factor is zero")
    if w[0] > linalg.KERNEL_TOL * max(1.0, w[-1]):
        raise ValueError("factor has full rank, so no zero-energy state exists")
    return dec.eigenvectors[:, -1], dec.eigenvectors[:, 0]


def tensor_witness_instance(
    factors: Sequence[npt.ArrayLike], parts: Sequence[Sequence[int]], n: int | None = None
) -> tuple[Hamiltonian, dict[tuple[int, ...], Array]]:
    """Complete r-partite instance of ``M_1 (x) ... (x) M_r`` with product witnesses.

    Part ``k`` feeds slot ``k``. The witness for tuple ``T`` puts the top
    eigenvector of ``M_k`` on ``T[k]`` and a kernel vector of ``M_k`` on every
    other qubit of part ``k``; qubits outside all parts are set to ``|0>``.
    """
    if len(factors) != len(parts):
        raise ValueError("need one part per factor")
    mats = [linalg.as_hermitian(F) for F in factors]
    if any(F.shape != (2, 2) for F in mats):
        raise ValueError("factors must be 2x2")
    vecs = [_extreme_vectors(F) for F in mats]
    flat = [q for p in parts for q in p]
    if len(set(flat)) != len(flat):
        raise ValueError("parts overlap")
    n = max(flat) + 1 if n is None else n
    M = mats[0]
    for F in mats[1:]:
        M = np.kron(M, F)
    part_of = {q: k for k, p in enumerate(parts) for q in p}
    terms = []
    witnesses = {}
    zero = np.array([1, 0], dtype=np.complex128)
    for T in itertools.product(*parts):
        terms.append(Term(T, M))
        psi = np.ones(1, dtype=np.complex128)
        for q in range(n):
            if q not in part_of:
                phi = zero
            else:
                top, ker = vecs[part_of[q]]
                phi = top if q in T else ker
            psi = np.kron(psi, phi)
        witnesses[tuple(T)] = psi
    return Hamiltonian(n, tuple(terms)), witnesses


# --- two-qubit classification -----------------------------------------------


def _det(u: Array) -> complex:
    return complex(u[0] * u[3] - u[1] * u[2])


def _range(M: Array) -> Array:
    dec = linalg.hermitian_eig(M)
    w = dec.eigenvalues
    return dec.eigenvectors[:, w > linalg.KERNEL_TOL * max(1.0, w[-1])]


# Two roots at most per pair, so any three of these would do.
_LAMBDAS = tuple(complex((1 + k / 8) * math.cos(2.4 * k), (1 + k / 8) * math.sin(2.4 * k)) for k in range(32))


def _nonsingular(u: Array) -> bool:
    return abs(_det(u)) > DET_TOL * float(np.vdot(u, u).real)


def _tensor_form(V: Array) -> str | None:
    """``(1,2)`` when span ``= a (x) C^2``, ``(2,1)`` when ``C^2 (x) b``, else None."""
    k = V.shape[1]
    A = V.T.reshape(k, 2, 2)
    # ``a (x) x`` reshapes to ``a x^T``: all column spaces coincide.
    left = np.concatenate([A[j] for j in range(k)], axis=1)
    right = np.concatenate([A[j] for j in range(k)], axis=0)
    if np.linalg.matrix_rank(left, tol=1e-9) == 1:
        return "(1,2)" if k == 2 else "(1,1)"
    if np.linalg.matrix_rank(right, tol=1e-9) == 1:
        return "(2,1)" if k == 2 else "(1,1)"
    return None


def nonsingular_search(M: npt.ArrayLike, seed: int = 0) -> Array | None:
    """A span vector whose 2x2 reshape is invertible, or None if all are singular.

    The determinant of ``u + lambda v`` is quadratic in ``lambda``, so checking
    every basis vector and every pair at a few values of ``lambda`` is
    complete. A random-combination pass guards against poor conditioning. A
    None result is cross-checked against the tensor-product shapes.
    """
    M = linalg.as_hermitian(M)
    if M.shape != (4, 4):
        raise ValueError("expected a 4x4 predicate")
    V = _range(M)
    k = V.shape[1]
    cols = [V[:, j] for j in range(k)]
    for u in cols:
        if _nonsingular(u):
            return u
    for a, b in itertools.combinations(range(k), 2):
        for lam in _LAMBDAS:
            u = cols[a] + lam * cols[b]
            if _nonsingular(u):
                return u / np.linalg.norm(u)
    gen = seeds.rng(seed, "nonsingular")
    for _ in range(64):
        c = gen.normal(size=k) + 1j * gen.normal(size=k)
        u = V @ c
        if _nonsingular(u):
            return u / np.linalg.norm(u)
    if k and _tensor_form(V) is None:
        raise ConsistencyError("no nonsingular vector found yet the span is not a tensor shape")
    return None


def tensor_rank1_check(M: npt.ArrayLike) -> tuple[Array, Array] | None:
    """``(M_1, M_2)`` with ``M = M_1 (x) M_2`` and both of rank one, else None."""
    M = linalg.as_hermitian(M)
    if M.shape != (4, 4) or linalg.numerical_rank(M) != 1:
        return None
    dec = linalg.hermitian_eig(M)
    lam, v = dec.eigenvalues[-1], dec.eigenvectors[:, -1]
    U, s, Vh = np.linalg.svd(v.reshape(2, 2))
    if s[1] > 1e-9 * s[0]:
        return None
    # v = s0 * kron(a, Vh[0])
    a, b = U[:, 0], Vh[0]
    M1 = lam * s[0] ** 2 * np.outer(a, a.conj())
    M2 = np.outer(b, b.conj())
    if np.max(np.abs(np.kron(M1, M2) - M)) > 1e-9:
        raise ConsistencyError("rank-one tensor reconstruction failed")
    return M1, M2


def classify_2qubit(M: npt.ArrayLike) -> str:
    """One of ``nonsingular``, ``tensor-(1,1)``, ``tensor-(1,2)``, ``tensor-(2,1)``.

    Ranks are listed as ``(rank M_1, rank M_2)``. Only ``tensor-(1,1)`` has
    quadratic non-redundancy.
    """
    M = linalg.as_hermitian(M)
    if linalg.numerical_rank(M) == 0:
        raise ValueError("predicate is zero")
    if nonsingular_search(M) is not None:
        return "nonsingular"
    if tensor_rank1_check(M) is not None:
        return "tensor-(1,1)"
    shape = _tensor_form(_range(M))
    if shape in ("(1,2)", "(2,1)"):
        return "tensor-" + shape
    raise ConsistencyError("singular span without a recognised tensor shape")


# --- permutations and automorphisms -----------------------------------------


@dataclass(frozen=True)
class QubitPermutation:
    """``pi[i]`` is the image of qubit ``i``; ``U_pi`` moves the bit of qubit ``i`` to ``pi[i]``."""

    pi: tuple[int, ...]

    def __post_init__(self) -> None:
        p = tuple(int(k) for k in self.pi)
        if sorted(p) != list(range(len(p))):
            raise ValueError(f"{self.pi} is not a permutation")
        object.__setattr__(self, "pi", p)

    @property
    def n(self) -> int:
        return len(self.pi)

    @classmethod
    def identity(cls, n: int) -> "QubitPermutation":
        return cls(tuple(range(n)))

    @classmethod
    def from_swaps(cls, n: int, swaps: Iterable[tuple[int, int]]) -> "QubitPermutation":
        """Product of disjoint transpositions."""
        p = list(range(n))
        for a, b in swaps:
            if a == b:
                continue
            if p[a] != a or p[b] != b:
                raise ValueError(f"swap ({a}, {b}) is not disjoint from earlier swaps")
            p[a], p[b] = b, a
        return cls(tuple(p))

    def __matmul__(self, other: "QubitPermutation") -> "QubitPermutation":
        """Composition ``self o other``."""
        if other.n != self.n:
            raise ValueError("permutations act on different qubit counts")
        return QubitPermutation(tuple(self.pi[other.pi[i]] for i in range(self.n)))

    def inverse(self) -> "QubitPermutation":
        inv = [0] * self.n
        for i, j in enumerate(self.pi):
            inv[j] = i
        return QubitPermutation(tuple(inv))

    def apply(self, psi: npt.ArrayLike) -> Array:
        return linalg.apply_permutation(self.pi, psi)

    def matrix(self) -> npt.NDArray[np.float64]:
        return linalg.permutation_operator(self.pi)


def automorphism_applies(psi: npt.ArrayLike, pi: QubitPermutation | Sequence[int]) -> bool:
    pi = pi if isinstance(pi, QubitPermutation) else QubitPermutation(tuple(pi))
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    return bool(np.linalg.norm(pi.apply(psi) - psi) <= AUT_TOL * np.linalg.norm(psi))


def space_invariant(K: Array, pi: QubitPermutation) -> bool:
    """Whether ``U_pi`` fixes every vector of ``span(K)``."""
    return all(automorphism_applies(K[:, j], pi) for j in range(K.shape[1]))


@dataclass(frozen=True)
class AutomorphismCheck:
    holds: bool | None
    permutation: QubitPermutation | None
    ground_dim: int
    vacuous: bool = False
    notice: str = ""


def _shared_slot(Ta: Sequence[int], Tb: Sequence[int]) -> tuple[int, int]:
    shared = set(Ta) & set(Tb)
    if len(shared) != 1:
        raise ValueError(f"tuples {tuple(Ta)} and {tuple(Tb)} must share exactly one qubit")
    a = shared.pop()
    s = list(Ta).index(a)
    if list(Tb).index(a) != s:
        raise ValueError(f"shared qubit {a} sits in different slots of {tuple(Ta)} and {tuple(Tb)}")
    return a, s


def block_swap(Ta: Sequence[int], Tb: Sequence[int], n: int) -> QubitPermutation:
    """Swap ``Ta[k]`` with ``Tb[k]`` in every slot where they differ."""
    return QubitPermutation.from_swaps(n, [(Ta[k], Tb[k]) for k in range(len(Ta)) if Ta[k] != Tb[k]])


def _union_instance(H: Hamiltonian) -> tuple[Hamiltonian, list[int]]:
    """The same terms relabelled onto the sorted union of their qubits."""
    U = sorted(H.covered_qubits())
    pos = {q: k for k, q in enumerate(U)}
    terms = tuple(Term(tuple(pos[q] for q in t.tuple), t.predicate, t.weight, t.label) for t in H.terms)
    return Hamiltonian(len(U), terms), U


def derived_automorphism_check(H: Hamiltonian, mode: str = "2-qubit") -> AutomorphismCheck:
    """Check the predicted permutation on a basis of the pair's joint ground space.

    ``H`` holds two terms with one predicate, sharing a single qubit in the
    same slot. The prediction swaps the remaining slots of the two tuples. In
    two-qubit mode that is the transposition of the unshared qubits, derived
    from a nonsingular span vector or from a rank-``(2,1)`` tensor shape
    (rank-``(1,2)`` with the shared qubit second). The generic mode is the
    block swap for rank ``2^(r-1) - 1`` predicates.
    """
    if H.m != 2:
        raise ValueError("need exactly two terms")
    ta, tb = H.terms
    if ta.predicate.shape != tb.predicate.shape or np.max(np.abs(ta.predicate - tb.predicate)) > linalg.HERMITIAN_TOL:
        raise ValueError("both terms must carry the same predicate")
    _, slot = _shared_slot(ta.tuple, tb.tuple)
    r = ta.arity
    if mode == "2-qubit":
        if r != 2:
            raise ValueError("2-qubit mode needs 2-local terms")
        cls = classify_2qubit(ta.predicate)
        allowed = {"nonsingular": (0, 1), "tensor-(2,1)": (0,), "tensor-(1,2)": (1,)}.get(cls, ())
        if slot not in allowed:
            return AutomorphismCheck(None, None, 0, notice=f"skipped: {cls} predicate with shared slot {slot}")
    elif mode == "generic":
        if r < 2:
            raise ValueError("generic mode needs r >= 2")
        rank = linalg.numerical_rank(ta.predicate)
        if rank != 2 ** (r - 1) - 1:
            raise ValueError(f"generic mode needs rank {2 ** (r - 1) - 1}, got {rank}")
    else:
        raise ValueError(f"unknown mode {mode!r}")
    local, _ = _union_instance(H)
    la, lb = local.terms
    pi = block_swap(la.tuple, lb.tuple, local.n)
    K = ground_space(local)
    if K.shape[1] == 0:
        return AutomorphismCheck(True, pi, 0, vacuous=True, notice="empty ground space")
    return AutomorphismCheck(space_invariant(K, pi), pi, K.shape[1])


def bipartite_cycle_edges(left: Sequence[int], right: Sequence[int]) -> list[tuple[int, int]]:
    """``(i1,j1), (i1,j2), (i2,j2), ..., (ik,jk), (ik,j1)``."""
    k = len(left)
    if len(right) != k or k < 1:
        raise ValueError("need k >= 1 left and right vertices")
    edges = []
    for t in range(k):
        edges.append((left[t], right[t]))
        edges.append((left[t], right[(t + 1) % k]))
    return edges


def bipartite_cycle_redundant_check(H: Hamiltonian, cycle: Sequence[int] | None = None) -> bool:
    """Whether removing the closing edge of the cycle leaves the ground space unchanged.

    ``cycle`` lists term indices ``e_1, ..., e_2k`` in cycle order and defaults
    to all terms.
    """
    if not H.m:
        raise ValueError("empty instance")
    idx = list(range(H.m)) if cycle is None else list(cycle)
    if len(idx) % 2:
        raise ValueError("a bipartite cycle has an even number of edges")
    if nonsingular_search(H.terms[idx[0]].predicate) is None:
        raise ValueError("the predicate has no nonsingular span vector")
    last = idx[-1]
    return ground_space(H).shape[1] == ground_space(H.without(last)).shape[1]


# --- connectivity -----------------------------------------------------------


def connectivity_parameter(terms: Sequence[npt.ArrayLike], alpha: float) -> int:
    """Smallest ``N`` so that every subset of size at least ``N`` has an ``alpha``-dominated member.

    Member ``i`` of subset ``S`` is dominated when ``alpha A_i <= sum_{j in S, j != i} A_j``.
    The property is upward closed, so sizes are scanned from 1. Returns
    ``m + 1`` when no size works.
    """
    m = len(terms)
    if m > MAX_CONNECTIVITY_TERMS:
        raise CapacityError(f"{m} terms exceed the subset brute-force cap of {MAX_CONNECTIVITY_TERMS}")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    A = [linalg.as_hermitian(t) for t in terms]
    if A:
        require_dense(linalg.num_qubits(A[0].shape[0]))

    def good(S: tuple[int, ...]) -> bool:
        total = sum(A[j] for j in S)
        return any(linalg.loewner_leq(alpha * A[i], total - A[i]) for i in S)

    for N in range(1, m + 1):
        if all(good(S) for S in itertools.combinations(range(m), N)):
            return N
    return m + 1


# --- relations and projections ----------------------------------------------


@dataclass(frozen=True)
class Relation:
    r: int
    tuples: frozenset[tuple[int, ...]]

    def __post_init__(self) -> None:
        ts = frozenset(tuple(int(b) for b in t) for t in self.tuples)
        for t in ts:
            if len(t) != self.r or any(b not in (0, 1) for b in t):
                raise ValueError(f"{t} is not a {self.r}-bit tuple")
        object.__setattr__(self, "tuples", ts)

    @classmethod
    def from_strings(cls, r: int, strings: Iterable[str]) -> "Relation":
        return cls(r, frozenset(tuple(int(c) for c in s) for s in strings))

    def strings(self) -> list[str]:
        return sorted("".join(map(str, t)) for t in self.tuples)

    def __contains__(self, t: object) -> bool:
        return tuple(t) in self.tuples  # type: ignore[arg-type]

    def __len__(self) -> int:
        return len(self.tuples)


@dataclass(frozen=True)
class Literal:
    """A constant bit, or variable ``var`` possibly negated."""

    const: int | None = None
    var: int | None = None
    negated: bool = False

    def __post_init__(self) -> None:
        if (self.const is None) == (self.var is None):
            raise ValueError("a literal is either a constant or a variable")
        if self.const is not None and self.const not in (0, 1):
            raise ValueError("constants are 0 or 1")

    @classmethod
    def parse(cls, s: "str | int | Literal") -> "Literal":
        """``0``, ``1``, ``x3`` or ``~x3`` (variables are 0-based)."""
        if isinstance(s, Literal):
            return s
        if isinstance(s, int):
            return cls(const=s)
        s = s.strip()
        if s in ("0", "1"):
            return cls(const=int(s))
        neg = s.startswith("~")
        body = s[1:] if neg else s
        if not body.startswith("x") or not body[1:].isdigit():
            raise ValueError(f"cannot parse literal {s!r}")
        return cls(var=int(body[1:]), negated=neg)

    def value(self, x: Sequence[int]) -> int:
        if self.const is not None:
            return self.const
        return x[self.var] ^ int(self.negated)  # type: ignore[index]

    def __str__(self) -> str:
        if self.const is not None:
            return str(self.const)
        return ("~" if self.negated else "") + f"x{self.var}"


def project_relation(R: Relation, literals: Sequence["str | int | Literal"], c: int | None = None) -> Relation:
    """``{x in {0,1}^c : (l_1(x), ..., l_r(x)) in R}``."""
    lits = [Literal.parse(s) for s in literals]
    if len(lits) != R.r:
        raise ValueError(f"need {R.r} literals, got {len(lits)}")
    if c is None:
        c = 1 + max((l.var for l in lits if l.var is not None), default=-1)
    if any(l.var is not None and not 0 <= l.var < c for l in lits):
        raise ValueError(f"literal variable outside the pool of {c}")
    out = [x for x in itertools.product((0, 1), repeat=c) if tuple(l.value(x) for l in lits) in R.tuples]
    return Relation(c, frozenset(out))


def and_relation(c: int) -> Relation:
    return Relation(c, frozenset({(1,) * c}))


def find_and_projection(R: Relation, c: int) -> tuple[Literal, ...] | None:
    """First literal tuple whose projection is ``AND_c``.

    Constants fill the first ``r - c`` slots and variable ``x_i``, possibly
    negated, fills slot ``r - c + i``.
    """
    r = R.r
    if not 0 <= c <= r or r > 10:
        raise ValueError(f"need 0 <= c <= r <= 10, got c={c}, r={r}")
    target = and_relation(c)
    for b in itertools.product((0, 1), repeat=r - c):
        for signs in itertools.product((False, True), repeat=c):
            lits = tuple(Literal(const=v) for v in b) + tuple(Literal(var=i, negated=s) for i, s in enumerate(signs))
            if project_relation(R, lits, c) == target:
                return lits
    return None


def random_relation(r: int, k: int, seed: int) -> Relation:
    gen = seeds.rng(seed, "relation", r, k)
    picks = gen.choice(2**r, size=k, replace=False)
    return Relation(r, frozenset(tuple((int(p) >> (r - 1 - j)) & 1 for j in range(r)) for p in picks))


def projection_failure_bound(r: int, k: int, c: int) -> float:
    """Union bound ``2^((r+1)/2) (1 - 2^c p (1-p)^(2^c - 1))^(2^(r-c))`` with ``p = k / 2^r``."""
    p = k / 2**r
    return 2 ** ((r + 1) / 2) * (1 - 2**c * p * (1 - p) ** (2**c - 1)) ** (2 ** (r - c))


def projection_summary_bound(r: int) -> float:
    """``1 - 2^((r+1)/2) exp(-2^(r/2))``."""
    return 1 - 2 ** ((r + 1) / 2) * math.exp(-(2 ** (r / 2)))


@dataclass(frozen=True)
class ProjectionHitRate:
    r: int
    k: int
    c: int
    trials: int
    hits: int
    failure_bound: float

    @property
    def rate(self) -> float:
        return self.hits / self.trials

    def to_json(self) -> dict:
        return {"r": self.r, "k": self.k, "c": self.c, "trials": self.trials, "hits": self.hits, "rate": self.rate, "bound": max(0.0, 1 - self.failure_bound)}


def projection_hit_rate(r: int, k: int, c: int, trials: int, seed: int = 0) -> ProjectionHitRate:
    hits = sum(find_and_projection(random_relation(r, k, seed + t), c) is not None for t in range(trials))
    return ProjectionHitRate(r, k, c, trials, hits, projection_failure_bound(r, k, c))


# --- automorphism groups ------------------------------------------------------


def aut_group_order(generators: Sequence[QubitPermutation], n: int | None = None) -> int:
    """Order of the generated subgroup by breadth-first closure."""
    if n is None:
        if not generators:
            raise ValueError("need n when there are no generators")
        n = generators[0].n
    if n > MAX_GROUP_N:
        raise CapacityError(f"n={n} exceeds the closure cap of {MAX_GROUP_N}")
    gens = [g.pi for g in generators]
    if any(len(g) != n for g in gens):
        raise ValueError("generators act on different qubit counts")
    start = tuple(range(n))
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for h in frontier:
            for g in gens:
                e = tuple(g[h[i]] for i in range(n))
                if e not in seen:
                    seen.add(e)
                    nxt.append(e)
        frontier = nxt
    return len(seen)


@dataclass(frozen=True)
class GrowthStep:
    term: int
    partner: int
    generator: tuple[int, ...]
    order_before: int
    order_after: int
    new_in_ground: bool
    generator_fixes_pair: bool


@dataclass(frozen=True)
class GrowthAudit:
    tuples: tuple[tuple[int, ...], ...]
    forest: tuple[int, ...]
    steps: tuple[GrowthStep, ...]
    non_redundant: bool

    @property
    def doubles(self) -> bool:
        return all(s.order_after >= 2 * s.order_before for s in self.steps)

    def to_json(self) -> dict:
        return {
            "tuples": [list(t) for t in self.tuples],
            "forest": list(self.forest),
            "non_redundant": self.non_redundant,
            "doubles": self.doubles,
            "steps": [
                {
                    "term": s.term,
                    "partner": s.partner,
                    "generator": list(s.generator),
                    "order_before": s.order_before,
                    "order_after": s.order_after,
                    "new_in_ground": s.new_in_ground,
                    "generator_fixes_pair": s.generator_fixes_pair,
                }
                for s in self.steps
            ],
        }


def _forest(tuples: Sequence[tuple[int, ...]]) -> list[int]:
    covered: set[int] = set()
    out = []
    for i, T in enumerate(tuples):
        if not set(T) <= covered:
            out.append(i)
            covered |= set(T)
    return out


def automorphism_growth_audit(
    M: npt.ArrayLike, parts: Sequence[Sequence[int]], seed: int = 0
) -> GrowthAudit:
    """Grow a non-redundant r-partite instance and track its derived automorphism group.

    Tuples are taken greedily from the complete r-partite family in random
    order. Terms are then split into a spanning forest and the rest. Each later
    term is paired with a forest term, preferring one that shares a single
    qubit; the block swap of the pair generates the next group. Each step
    records whether that swap fixes the pair's ground space, and whether it
    moves the ground space built so far, as non-redundancy requires.
    """
    M = linalg.as_hermitian(M)
    n = 1 + max(q for p in parts for q in p)
    require_dense(n)
    if n > MAX_GROUP_N:
        raise CapacityError(f"n={n} exceeds the closure cap of {MAX_GROUP_N}")
    candidates = [tuple(T) for T in itertools.product(*parts)]
    kept = greedy_nrd_search(M, n, candidates, seed)
    forest = _forest(kept)
    fset = set(forest)
    order = forest + [i for i in range(len(kept)) if i not in fset]
    tuples = [kept[i] for i in order]
    f = len(forest)

    def ham(k: int) -> Hamiltonian:
        return Hamiltonian(n, tuple(Term(T, M) for T in tuples[:k]))

    gens: list[QubitPermutation] = []
    steps = []
    size = 1
    for p in range(f, len(tuples)):
        T = tuples[p]
        overlaps = [len(set(T) & set(tuples[j])) for j in range(f)]
        partner = next((j for j in range(f) if overlaps[j] == 1), None)
        if partner is None:
            partner = next(j for j in range(f) if overlaps[j])
        pi = block_swap(T, tuples[partner], n)
        pair = Hamiltonian(n, (Term(T, M), Term(tuples[partner], M)))
        fixes = space_invariant(ground_space(pair), pi)
        fresh = not space_invariant(ground_space(ham(p)), pi)
        gens.append(pi)
        new = aut_group_order(gens, n)
        steps.append(GrowthStep(p, partner, pi.pi, size, new, fresh, fixes))
        size = new
    nr = is_non_redundant(ham(len(tuples))).non_redundant
    return GrowthAudit(tuple(tuples), tuple(range(f)), tuple(steps), nr)
