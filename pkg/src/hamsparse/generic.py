"""Sparsification for predicates of high random rank.

When two terms with rank at least ``2^(r-1) + 1`` share a qubit, their joint
kernel is generically trivial. Greedily matching intersecting pairs then gives
a per-instance lower bound on ``lambda_min``. Dividing ``lambda_max`` of each
term by that bound yields valid importance scores for matrix-Chernoff
sampling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import numpy.typing as npt

from . import linalg, seeds
from .linalg import Array
from .model import Hamiltonian, SparsifierWeights, Term, dense_cap, verify_sparsifier
from .partition import peel_partition

DEGENERACY_TOL = 1e-9
RETRY_BUDGET = 16


@dataclass(frozen=True)
class RandomPredicateSpec:
    r: int
    R: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.r < 1 or not 1 <= self.R <= 2**self.r:
            raise ValueError(f"need r >= 1 and 1 <= R <= 2^r, got r={self.r}, R={self.R}")


def sample_random_psd(spec: RandomPredicateSpec | None = None, *, r: int | None = None, R: int | None = None, rng: np.random.Generator | None = None) -> Array:
    """``sum_j v_j v_j^dagger`` for ``R`` unit vectors from a complex Gaussian.

    Pass either a spec (seeded stream) or ``r``, ``R`` and a generator.
    """
    if spec is not None:
        r, R = spec.r, spec.R
        rng = seeds.rng(spec.seed, "random-psd", r, R)
    if r is None or R is None or rng is None:
        raise ValueError("supply a spec or r, R and rng")
    d = 2**r
    for _ in range(8):
        V = rng.normal(size=(R, d)) + 1j * rng.normal(size=(R, d))
        V /= np.linalg.norm(V, axis=1, keepdims=True)
        M = linalg.rank1_sum(list(V))
        if linalg.numerical_rank(M) == R:
            return M
    raise ArithmeticError(f"could not draw a rank-{R} predicate")


def _union_lift(terms: Sequence[Term], weights: Sequence[float]) -> tuple[list[int], Array]:
    """Sum of the weighted terms lifted to the union of their qubits."""
    U = sorted({q for t in terms for q in t.tuple})
    pos = {q: k for k, q in enumerate(U)}
    A = np.zeros((2 ** len(U),) * 2, dtype=np.complex128)
    for t, c in zip(terms, weights):
        A += c * linalg.kron_lift(t.predicate, [pos[q] for q in t.tuple], len(U))
    return U, A


def genericity_check(M: npt.ArrayLike, M2: npt.ArrayLike, T: Sequence[int], T2: Sequence[int]) -> bool:
    """Whether the lifted kernels of ``(T, M)`` and ``(T2, M2)`` meet only in zero."""
    if not set(T) & set(T2):
        raise ValueError(f"tuples {tuple(T)} and {tuple(T2)} are disjoint")
    _, A = _union_lift([Term(tuple(T), M), Term(tuple(T2), M2)], [1.0, 1.0])
    return linalg.kernel_basis(A).shape[1] == 0


@dataclass(frozen=True)
class PairMatching:
    pairs: tuple[tuple[int, int], ...]
    leftover: tuple[int, ...]


def pair_matching(H: Hamiltonian, indices: Sequence[int] | None = None) -> PairMatching:
    """Greedily remove intersecting pairs while more than ``n / r`` terms remain.

    The lowest remaining index is paired with its lowest intersecting partner.
    """
    remaining = list(range(H.m) if indices is None else indices)
    if not remaining:
        return PairMatching((), ())
    r = max(H.terms[i].arity for i in remaining)
    pairs: list[tuple[int, int]] = []
    while len(remaining) * r > H.n:
        found = None
        for ia, a in enumerate(remaining):
            Ta = set(H.terms[a].tuple)
            for b in remaining[ia + 1 :]:
                if Ta & set(H.terms[b].tuple):
                    found = (a, b)
                    break
            if found:
                break
        if found is None:
            break
        pairs.append(found)
        remaining = [i for i in remaining if i not in found]
    return PairMatching(tuple(pairs), tuple(remaining))


@dataclass(frozen=True)
class EigCertificate:
    lower: float
    pair_minima: tuple[float, ...]


def lambda_min_certificate(H: Hamiltonian, matching: PairMatching) -> EigCertificate:
    """Sum of exact ``lambda_min`` of each matched pair on its own qubits."""
    minima = []
    for a, b in matching.pairs:
        ta, tb = H.terms[a], H.terms[b]
        _, A = _union_lift([ta, tb], [ta.weight, tb.weight])
        minima.append(max(0.0, linalg.lambda_min(A)))
    return EigCertificate(float(sum(minima)), tuple(minima))


def _verify(H: Hamiltonian, w: Mapping[int, float], eps: float, seed: int) -> bool:
    return verify_sparsifier(H, w, eps, seed=seed).passed


def importance_sample(
    H: Hamiltonian,
    p: Sequence[float],
    eps: float,
    seed: int = 0,
    constant: float | None = None,
    retry_budget: int = RETRY_BUDGET,
    verify: bool = True,
    diagnostics: dict | None = None,
) -> SparsifierWeights:
    """Keep term ``i`` with probability ``q_i = min(1, p_i C)`` at weight ``nu_i / q_i``.

    ``C`` defaults to ``100 n / eps^2``. Each failed verification draws again
    from a fresh stream.
    """
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    p = np.asarray(p, dtype=float)
    if p.shape != (H.m,):
        raise ValueError(f"need one score per term, got shape {p.shape}")
    C = 100 * H.n / eps**2 if constant is None else float(constant)
    q = np.minimum(1.0, p * C)
    nu = H.weights
    diag = diagnostics if diagnostics is not None else {}
    diag["expected_support"] = float(q[nu > 0].sum())
    for attempt in range(retry_budget):
        keep = (seeds.rng(seed, "importance", attempt).random(H.m) < q) & (nu > 0)
        w = SparsifierWeights({int(i): nu[i] / q[i] for i in np.flatnonzero(keep)})
        diag["attempts"] = attempt + 1
        if not verify or _verify(H, w, eps, seed + attempt):
            return w
    raise RuntimeError(f"importance sampling failed verification {retry_budget} times")


def _check_ranks(H: Hamiltonian) -> int:
    rs = {t.arity for t in H.terms}
    if len(rs) != 1:
        raise ValueError(f"terms have mixed arities {sorted(rs)}")
    r = rs.pop()
    need = 2 ** (r - 1) + 1
    for i, t in enumerate(H.terms):
        rank = linalg.numerical_rank(t.predicate)
        if rank < need:
            raise ValueError(f"term {i} has rank {rank} < {need}")
    return r


def sparsify_generic(
    H: Hamiltonian,
    eps: float,
    seed: int = 0,
    constant: float | None = None,
    diagnostics: dict | None = None,
) -> SparsifierWeights:
    """Peel, match, certify, and importance-sample each piece."""
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    diag = diagnostics if diagnostics is not None else {}
    if H.m == 0:
        return SparsifierWeights()
    _check_ranks(H)
    if H.m <= 4 * H.n:
        diag.update(pieces=0, certificate=None)
        return SparsifierWeights.identity(H)
    deco = peel_partition(H.tuples, None, H.n)
    out: dict[int, float] = {}
    cert_total = 0.0
    piece_info = []
    for k, piece in enumerate(deco.pieces):
        sub = H.subset(piece.indices)
        matching = pair_matching(sub)
        cert = lambda_min_certificate(sub, matching)
        for (a, b), mn in zip(matching.pairs, cert.pair_minima):
            if mn <= DEGENERACY_TOL * max(1.0, sub.terms[a].weight + sub.terms[b].weight):
                ia, ib = piece.indices[a], piece.indices[b]
                raise ArithmeticError(f"degenerate pair ({ia}, {ib}): joint kernel is nontrivial")
        if cert.lower > 0:
            lam = np.array([t.weight * linalg.lambda_max(t.predicate) for t in sub.terms])
            p = np.minimum(1.0, lam / cert.lower)
        else:
            p = np.ones(sub.m)
        sd: dict = {}
        piece_seed = int(seeds.seed_sequence(seed, "generic", k).generate_state(1)[0])
        w = importance_sample(sub, p, eps, piece_seed, constant, diagnostics=sd, verify=sub.n <= dense_cap())
        for j, v in w.items():
            out[piece.indices[j]] = v
        cert_total += cert.lower
        piece_info.append({"size": sub.m, "pairs": len(matching.pairs), "certificate": cert.lower, "attempts": sd["attempts"]})
    diag.update(pieces=len(deco), certificate=cert_total, piece_info=piece_info)
    result = SparsifierWeights(out)
    if H.n <= dense_cap() and not _verify(H, result, eps, seed):
        raise ArithmeticError("piecewise sparsifiers failed to combine")
    return result
