"""Sparsification for predicates whose kernels have dimension at most one.

A spanning forest covers every qubit touched by the instance. A dominating
cover adds at most one booster per qubit, where a booster is a term with
positive energy on some ground state of the current cover. Every term outside
a dominating cover is Loewner-bounded by a constant multiple of the cover.
The recursive sampler keeps many disjoint covers at the current weight and
halves the rest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import numpy.typing as npt

from . import linalg, seeds
from .linalg import Array
from .model import CapacityError, ConsistencyError, Hamiltonian, SparsifierWeights, Term, dense_cap, ground_space, verify_sparsifier

DOMINATION_TOL = 1e-9
RETRY_BUDGET = 16


def _nullity(M: npt.ArrayLike) -> int:
    return linalg.kernel_basis(M).shape[1]


def spanning_forest(H: Hamiltonian, indices: Sequence[int] | None = None) -> list[int]:
    """Greedy in index order: keep a term when it touches a qubit not yet covered."""
    covered: set[int] = set()
    forest = []
    for i in range(H.m) if indices is None else indices:
        T = H.terms[i].tuple
        if not covered.issuperset(T):
            forest.append(i)
            covered.update(T)
    return forest


def _local_sum(terms: Sequence[Term], qubits: Sequence[int]) -> Array:
    pos = {q: k for k, q in enumerate(qubits)}
    k = len(qubits)
    A = np.zeros((2**k, 2**k), dtype=np.complex128)
    for t in terms:
        A += linalg.kron_lift(t.predicate, [pos[q] for q in t.tuple], k)
    return A


@dataclass(frozen=True)
class Domination:
    dominates: bool
    witness: Array | None
    qubits: tuple[int, ...]
    value: float


def _family_kernel(family: Sequence[Term], qubits: Sequence[int]) -> Array:
    if not family:
        return np.eye(2 ** len(qubits), dtype=np.complex128)
    return linalg.kernel_basis(_local_sum(family, qubits))


def _domination_from_kernel(candidate: Term, K: Array, qubits: Sequence[int]) -> Domination:
    pos = {q: k for k, q in enumerate(qubits)}
    if K.shape[1] == 0:
        return Domination(False, None, tuple(qubits), 0.0)
    Mt = linalg.kron_lift(candidate.predicate, [pos[q] for q in candidate.tuple], len(qubits))
    G = K.conj().T @ Mt @ K
    value = float(np.real(np.trace(G)))
    if value <= DOMINATION_TOL:
        return Domination(False, None, tuple(qubits), value)
    j = int(np.argmax(np.real(np.diag(G))))
    return Domination(True, K[:, j], tuple(qubits), value)


def dominates(candidate: Term, family: Sequence[Term]) -> Domination:
    """Whether some zero-energy state of ``family`` gives ``candidate`` positive energy.

    Computed on the qubits touched by ``family`` and the candidate, where
    all operators act nontrivially. The witness is the kernel basis vector
    with the largest candidate energy, on ``qubits`` in ascending order.
    """
    qubits = sorted({q for t in family for q in t.tuple} | set(candidate.tuple))
    if len(qubits) > dense_cap():
        raise CapacityError(f"domination test on {len(qubits)} qubits exceeds the dense cap")
    return _domination_from_kernel(candidate, _family_kernel(family, qubits), qubits)


@dataclass(frozen=True)
class DominatingCover:
    forest: tuple[int, ...]
    boosters: dict[int, int] = field(default_factory=dict)

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.forest) | set(self.boosters.values())))

    def __len__(self) -> int:
        return len(self.members)


def extract_dominating_cover(H: Hamiltonian, indices: Sequence[int] | None = None) -> DominatingCover:
    """Spanning forest plus at most one booster per qubit, lowest index first."""
    idx = list(range(H.m) if indices is None else indices)
    forest = spanning_forest(H, idx)
    cover = list(forest)
    qubits = sorted({q for i in idx for q in H.terms[i].tuple})
    K = _family_kernel([H.terms[i] for i in cover], qubits)
    boosters: dict[int, int] = {}
    by_qubit: dict[int, list[int]] = {}
    for i in idx:
        for q in H.terms[i].tuple:
            by_qubit.setdefault(q, []).append(i)
    for v in qubits:
        if K.shape[1] == 0:
            break
        in_cover = set(cover)
        for i in by_qubit.get(v, []):
            if i in in_cover:
                continue
            if _domination_from_kernel(H.terms[i], K, qubits).dominates:
                boosters[v] = i
                cover.append(i)
                K = _family_kernel([H.terms[j] for j in cover], qubits)
                break
    return DominatingCover(tuple(forest), boosters)


@dataclass(frozen=True)
class BoundednessEstimate:
    C: float
    scalings: dict[int, float]

    @property
    def C2(self) -> float:
        return self.C**2


def _lifted(H: Hamiltonian, i: int, weighted: bool = True) -> Array:
    t = H.terms[i]
    return (t.weight if weighted else 1.0) * linalg.kron_lift(t.predicate, t.tuple, H.n)


def local_gap_constant(H: Hamiltonian, cover: DominatingCover | Sequence[int], indices: Sequence[int] | None = None) -> BoundednessEstimate:
    """Smallest ``s_T`` with ``M_T <= s_T * A_D`` for every term outside the cover.

    ``A_D`` is the weighted sum of the cover's terms. ``s_T`` is the top
    eigenvalue of ``A_D^{+1/2} M_T A_D^{+1/2}``, after checking that
    ``ker A_D`` lies inside ``ker M_T``.
    """
    members = cover.members if isinstance(cover, DominatingCover) else tuple(cover)
    idx = list(range(H.m) if indices is None else indices)
    outside = [i for i in idx if i not in set(members)]
    lam = max((H.terms[i].weight * linalg.lambda_max(H.terms[i].predicate) for i in idx), default=1.0)
    if not outside:
        return BoundednessEstimate(math.sqrt(max(lam, 1e-300)), {})
    A = sum(_lifted(H, i) for i in members)
    dec = linalg.hermitian_eig(A)
    w, V = dec.eigenvalues, dec.eigenvectors
    cut = linalg.KERNEL_TOL * max(1.0, float(w[-1]))
    K, R, wr = V[:, w < cut], V[:, w >= cut], w[w >= cut]
    Wh = R / np.sqrt(wr)[None, :]
    scalings: dict[int, float] = {}
    for i in outside:
        Mt = _lifted(H, i)
        if K.shape[1]:
            leak = linalg.op_norm(K.conj().T @ Mt @ K)
            if leak > linalg.KERNEL_TOL * max(1.0, linalg.op_norm(Mt)):
                raise ConsistencyError(f"term {i} is not annihilated by the cover's kernel (leak {leak:.3e})")
        # The range of A_D need not have power-of-two dimension.
        S = Wh.conj().T @ Mt @ Wh
        scalings[i] = float(np.linalg.eigvalsh((S + S.conj().T) / 2)[-1])
    C2 = max(max(scalings.values()), lam)
    return BoundednessEstimate(math.sqrt(C2), scalings)


def lemma_audit(H: Hamiltonian, cover: DominatingCover, est: BoundednessEstimate, indices: Sequence[int] | None = None) -> bool:
    """Direct Loewner check ``M_T <= C^2 A_D`` for every term outside the cover."""
    members = set(cover.members)
    A = sum(_lifted(H, i) for i in cover.members)
    idx = range(H.m) if indices is None else indices
    return all(linalg.loewner_leq(_lifted(H, i), est.C2 * A) for i in idx if i not in members)


def _check_nullity(H: Hamiltonian, indices: Sequence[int]) -> None:
    for i in indices:
        k = _nullity(H.terms[i].predicate)
        if k > 1:
            raise ValueError(f"term {i} has nullity {k} > 1")


def max_depth(n: int, r: int) -> float:
    return 20 * r * math.log2(max(n, 2))


def _verified(H: Hamiltonian, w: SparsifierWeights, eps: float) -> bool:
    return H.n > dense_cap() or verify_sparsifier(H, w, eps).passed


def sparsify_nullity1(
    H: Hamiltonian,
    eps: float,
    seed: int = 0,
    cover_count: int | None = None,
    base_threshold: float | None = None,
    retry_budget: int = RETRY_BUDGET,
    diagnostics: dict | None = None,
) -> SparsifierWeights:
    """Recursive cover-and-halve sparsifier.

    The base case returns the term weights when ``m <= 100 C^2 n^2 / eps'^2``
    with ``eps' = eps / (200 r log2 n)``. Otherwise ``ceil(100 C^2 n / eps'^2)``
    disjoint covers stay at the current weight and the remaining terms are kept
    with probability 1/2 at doubled weight. ``cover_count`` and
    ``base_threshold`` override the two sizes. Full-rank terms take the uniform
    sampling path. ``C`` is recomputed at every level and the running maximum
    is used.
    """
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    diag = diagnostics if diagnostics is not None else {}
    if H.m == 0:
        return SparsifierWeights()
    live = [i for i, t in enumerate(H.terms) if t.weight > 0]
    _check_nullity(H, live)
    full = [i for i in live if _nullity(H.terms[i].predicate) == 0]
    null1 = [i for i in live if i not in set(full)]
    out: dict[int, float] = {}
    if full:
        sd: dict = {}
        fw = sparsify_fullrank(H.subset(full), eps, int(seeds.seed_sequence(seed, "fullrank").generate_state(1)[0]), diagnostics=sd)
        out.update({full[j]: v for j, v in fw.items()})
        diag["fullrank"] = sd
    if null1:
        sub = H.subset(null1)
        r = max(t.arity for t in sub.terms)
        for attempt in range(retry_budget):
            trace: list[dict] = []
            w = _recurse(sub, list(range(sub.m)), eps, r, seeds.rng(seed, "nullity1", attempt), cover_count, base_threshold, trace)
            diag.update(levels=trace, depth=len(trace) - 1, attempts=attempt + 1)
            sw = SparsifierWeights(w)
            if _verified(sub, sw, eps):
                out.update({null1[j]: v for j, v in sw.items()})
                break
        else:
            raise RuntimeError(f"nullity-1 sparsification failed verification {retry_budget} times")
    return SparsifierWeights(out)


def _recurse(H, idx, eps, r, gen, cover_count, base_threshold, trace, mult=1.0, C2=0.0):
    n = H.n
    eps1 = eps / (200 * r * math.log2(max(n, 2)))
    depth = len(trace)
    if depth > max_depth(n, r):
        raise RecursionError(f"recursion depth {depth} exceeds {max_depth(n, r):.1f}")
    level = {"m": len(idx), "weight": mult, "covers": 0}
    trace.append(level)
    if not idx:
        level["C2"] = C2
        return {}
    first = extract_dominating_cover(H, idx)
    est = local_gap_constant(H, first, idx)
    C2 = max(C2, est.C2)
    level["C2"] = C2
    threshold = 100 * C2 * n**2 / eps1**2 if base_threshold is None else base_threshold
    if len(idx) <= threshold:
        return {i: mult * H.terms[i].weight for i in idx}
    k = math.ceil(100 * C2 * n / eps1**2) if cover_count is None else cover_count
    kept: list[int] = []
    residual = list(idx)
    cover = first
    for j in range(k):
        if j:
            cover = extract_dominating_cover(H, residual)
        members = set(cover.members)
        if not members:
            break
        kept.extend(sorted(members))
        residual = [i for i in residual if i not in members]
        level["covers"] += 1
        if not residual:
            break
    # ``gen.random`` is drawn once per residual term, so streams stay aligned.
    coins = gen.random(len(residual)) < 0.5
    sample = [i for i, c in zip(residual, coins) if c]
    w = {i: mult * H.terms[i].weight for i in kept}
    w.update(_recurse(H, sample, eps, r, gen, cover_count, base_threshold, trace, 2 * mult, C2))
    return w


def sparsify_fullrank(
    H: Hamiltonian,
    eps: float,
    seed: int = 0,
    constant: float = 100.0,
    retry_budget: int = RETRY_BUDGET,
    diagnostics: dict | None = None,
) -> SparsifierWeights:
    """Uniform sampling at rate ``p = c kappa^2 n / (eps^2 m)`` with weight ``nu / p``.

    ``kappa`` is the ratio of the largest weighted top eigenvalue to the
    smallest weighted bottom eigenvalue over all terms.
    """
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    diag = diagnostics if diagnostics is not None else {}
    live = [i for i, t in enumerate(H.terms) if t.weight > 0]
    if not live:
        return SparsifierWeights()
    tops, bottoms = [], []
    for i in live:
        ev = linalg.eigvalsh(H.terms[i].predicate) * H.terms[i].weight
        tops.append(ev[-1])
        bottoms.append(ev[0])
    low = min(bottoms)
    if low <= linalg.KERNEL_TOL * max(tops):
        raise ValueError("full-rank path needs every predicate to be positive definite")
    kappa = max(tops) / low
    p = constant * kappa**2 * H.n / (eps**2 * len(live))
    diag.update(kappa=float(kappa), rate=float(min(1.0, p)))
    if p >= 1:
        diag["attempts"] = 0
        return SparsifierWeights({i: H.terms[i].weight for i in live})
    for attempt in range(retry_budget):
        keep = seeds.rng(seed, "fullrank", attempt).random(len(live)) < p
        w = SparsifierWeights({i: H.terms[i].weight / p for i, k in zip(live, keep) if k})
        diag["attempts"] = attempt + 1
        if _verified(H, w, eps):
            return w
    raise RuntimeError(f"full-rank sampling failed verification {retry_budget} times")


def ground_dim_audit(H: Hamiltonian) -> int | None:
    """Ground-space dimension of a covering nullity-1 instance; None when not covering."""
    _check_nullity(H, range(H.m))
    if H.covered_qubits() != set(range(H.n)):
        return None
    d = ground_space(H).shape[1]
    if d > 1:
        raise ConsistencyError(f"covering nullity-1 instance has ground-space dimension {d}")
    return d
