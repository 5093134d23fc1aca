"""Near-optimum-preserving sparsification for quantum MAX-CUT and MAX-CSP.

Every predicate is shifted by the identity. The shifted Hamiltonian dominates
``m * Id``, so importance ``lambda_max(M_e + Id) w_e / m`` is valid for every
edge. Sampling happens on the shifted system. The total weight is then
rescaled to its original value, which makes the identity part cancel exactly
and carries the sandwich back to states of near-maximum energy.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import linalg, seeds
from .linalg import Array
from .model import Hamiltonian, SparsifierWeights, Term, assemble, dense_cap, hamiltonian_energy
from .pauli import PAULI

RETRY_BUDGET = 16
MAXCUT_GAMMA = 160.0

SINGLET = np.array([0, 1, -1, 0], dtype=np.complex128)


def maxcut_predicate() -> Array:
    """``v v^dagger`` with ``v = |01> - |10>``; checked against the Pauli form."""
    M = np.outer(SINGLET, SINGLET.conj())
    I2 = np.eye(4)
    pauli_form = 0.5 * (I2 - sum(np.kron(PAULI[c], PAULI[c]) for c in "XYZ"))
    if np.max(np.abs(M - pauli_form)) > 1e-12:
        raise ArithmeticError("MAX-CUT predicate forms disagree")
    return M


@dataclass(frozen=True)
class WeightedGraph:
    n: int
    edges: tuple[tuple[int, int, float], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        clean = []
        for u, v, w in self.edges:
            u, v, w = int(u), int(v), float(w)
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) outside [0, {self.n})")
            if not w > 0:
                raise ValueError(f"edge ({u}, {v}) has non-positive weight {w}")
            clean.append((u, v, w))
        object.__setattr__(self, "edges", tuple(clean))

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [[u, v, w] for u, v, w in self.edges]}


def maxcut_hamiltonian(G: WeightedGraph) -> Hamiltonian:
    M = maxcut_predicate()
    return Hamiltonian(G.n, tuple(Term((u, v), M, w, label="maxcut") for u, v, w in G.edges))


def opt_energy(H: Hamiltonian) -> float:
    """Largest eigenvalue of the assembled Hamiltonian."""
    return linalg.lambda_max(assemble(H))


def shifted(H: Hamiltonian, c: float = 1.0) -> Hamiltonian:
    """Every predicate replaced by ``M + c Id``."""
    return Hamiltonian(H.n, tuple(t.__class__(t.tuple, t.predicate + c * np.eye(t.predicate.shape[0]), t.weight) for t in H.terms))


def _shifted_sandwich(H: Hamiltonian, w: SparsifierWeights, eps: float, tol: float = 1e-8) -> tuple[bool, float, float]:
    A = assemble(shifted(H))
    B = assemble(shifted(H), w)
    lo = linalg.lambda_min(B - (1 - eps) * A)
    hi = linalg.lambda_min((1 + eps) * A - B)
    scale = max(1.0, (1 + eps) * linalg.op_norm(A), linalg.op_norm(B))
    return (lo >= -tol * scale and hi >= -tol * scale), float(lo), float(hi)


def inclusion_probabilities(H: Hamiltonian, eps_inner: float) -> np.ndarray:
    """``q_e = min(1, p_e 100 n / eps'^2)`` with ``p_e = lambda_max(M_e + Id) w_e / m``."""
    nu = H.weights
    m = float(nu.sum())
    lam = np.array([linalg.lambda_max(t.predicate) + 1.0 for t in H.terms])
    return np.minimum(1.0, lam * nu / m * (100 * H.n / eps_inner**2))


@dataclass
class ShiftedResult:
    weights: SparsifierWeights
    eps_inner: float
    attempts: int
    sandwich: tuple[float, float] | None = None

    @property
    def support(self) -> list[int]:
        return list(self.weights)


def sparsify_shifted(
    H: Hamiltonian,
    eps: float,
    seed: int = 0,
    eps_inner: float | None = None,
    retry_budget: int = RETRY_BUDGET,
    verify: bool = True,
) -> ShiftedResult:
    """Sample the identity-shifted system and rescale to the original total weight.

    The inner accuracy defaults to ``eps / 10``. When ``verify`` holds and the
    instance is within the dense cap, the shifted sandwich is checked at the
    inner accuracy and a failed check triggers a fresh draw.
    """
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    e1 = eps / 10 if eps_inner is None else float(eps_inner)
    if not 0 < e1 < 1:
        raise ValueError(f"inner accuracy must lie in (0, 1), got {e1}")
    nu = H.weights
    m = float(nu.sum())
    q = inclusion_probabilities(H, e1)
    check = verify and H.n <= dense_cap()
    for attempt in range(retry_budget):
        keep = seeds.rng(seed, "shifted", attempt).random(H.m) < q
        if not keep.any():
            continue
        raw = np.where(keep, nu / np.where(keep, q, 1.0), 0.0)
        raw *= m / raw.sum()
        w = SparsifierWeights({int(i): raw[i] for i in np.flatnonzero(keep)})
        if not check:
            return ShiftedResult(w, e1, attempt + 1)
        ok, lo, hi = _shifted_sandwich(H, w, e1)
        if ok:
            return ShiftedResult(w, e1, attempt + 1, (lo, hi))
    raise RuntimeError(f"shifted sampling failed verification {retry_budget} times")


def _graph_from_weights(G: WeightedGraph, w: SparsifierWeights) -> WeightedGraph:
    return WeightedGraph(G.n, tuple((G.edges[i][0], G.edges[i][1], v) for i, v in w.items()))


def maxcut_sparsify(G: WeightedGraph, eps: float, seed: int = 0, eps_inner: float | None = None) -> WeightedGraph:
    """Sparsify with inner accuracy ``eps / 200`` unless overridden."""
    res = sparsify_shifted(maxcut_hamiltonian(G), eps, seed, eps / 200 if eps_inner is None else eps_inner)
    return _graph_from_weights(G, res.weights)


@dataclass(frozen=True)
class TransferCertificate:
    opt_original: float
    opt_sparse: float
    gamma: float
    tested_states: int
    worst_ratio: float
    holds: bool


def transfer_check(
    H: Hamiltonian,
    w: SparsifierWeights,
    eps: float,
    seed: int = 0,
    top_k: int = 5,
    perturbations: int = 100,
) -> TransferCertificate:
    """Near-maximum states of the sparsifier must stay near-maximum for ``H``.

    The tested states are the top eigenvectors of the sparsifier plus random
    perturbations of the leading one at angles up to ``eps``. A state counts
    when its sparse energy is at least ``(1 - eps)`` of the sparse optimum,
    and it must then reach ``(1 - 2 eps)`` of the original optimum.
    """
    A = assemble(H)
    B = assemble(H, w)
    wa = linalg.eigvalsh(A)
    dec = linalg.hermitian_eig(B)
    opt_a, opt_b = float(wa[-1]), float(dec.eigenvalues[-1])
    gen = seeds.rng(seed, "transfer")
    k = min(top_k, dec.dim)
    states = [dec.eigenvectors[:, -1 - j] for j in range(k)]
    top = dec.eigenvectors[:, -1]
    for _ in range(perturbations):
        d = gen.normal(size=top.shape) + 1j * gen.normal(size=top.shape)
        d -= np.vdot(top, d) * top
        d /= np.linalg.norm(d)
        theta = gen.uniform(0, eps)
        states.append(math.cos(theta) * top + math.sin(theta) * d)
    tested = 0
    worst = math.inf
    ok = True
    for psi in states:
        psi = psi / np.linalg.norm(psi)
        eb = float(np.real(np.vdot(psi, B @ psi)))
        if eb < (1 - eps) * opt_b:
            continue
        tested += 1
        ea = float(np.real(np.vdot(psi, A @ psi)))
        ratio = ea / opt_a if opt_a > 0 else 1.0
        worst = min(worst, ratio)
        if ea < (1 - 2 * eps) * opt_a - 1e-9 * max(1.0, opt_a):
            ok = False
    return TransferCertificate(opt_a, opt_b, math.nan, tested, worst, ok)


def maxcsp_sparsify(
    H: Hamiltonian,
    eps: float,
    gamma: float,
    seed: int = 0,
    eps_inner: float | None = None,
    audit: bool = True,
) -> tuple[SparsifierWeights, TransferCertificate | None]:
    """Shift-sample-rescale at inner accuracy ``eps / (200 gamma)``.

    ``gamma`` must satisfy ``OPT >= 10 m / gamma``, which is checked densely
    when the instance is small enough.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    m = float(H.weights.sum())
    dense = H.n <= dense_cap()
    if audit and dense:
        opt = opt_energy(H)
        if opt < 10 * m / gamma - 1e-9 * max(1.0, m):
            raise ValueError(f"OPT = {opt:.6g} is below 10 m / gamma = {10 * m / gamma:.6g}")
    e1 = eps / (200 * gamma) if eps_inner is None else eps_inner
    res = sparsify_shifted(H, eps, seed, e1)
    cert = None
    if audit and dense:
        c = transfer_check(H, res.weights, eps, seed)
        cert = TransferCertificate(c.opt_original, c.opt_sparse, gamma, c.tested_states, c.worst_ratio, c.holds)
    return res.weights, cert


@dataclass
class ReservoirSampler:
    """Single-pass sampler with the same inclusion law as the batch shifted sampler.

    Edge ``e`` draws a uniform ``u_e`` on arrival and has priority
    ``u_e / a_e`` with ``a_e = lambda_max(M_e + Id) w_e``. After ``m`` total
    weight has streamed past, the sample is every edge with priority at most
    ``K / m``, where ``K = 100 n / eps'^2``. That is a Bernoulli draw with
    probability ``min(1, K a_e / m)``, exactly as in the batch sampler. The
    threshold only shrinks, so an evicted edge never returns. Storage is capped
    at ``capacity`` entries; past the cap the largest priority is evicted and
    the threshold drops to it.
    """

    n: int
    eps_inner: float
    seed: int = 0
    lam_shifted: float = 3.0
    capacity: int = 0
    _heap: list = field(default_factory=list)
    _total: float = 0.0
    _count: int = 0
    _cap_threshold: float = math.inf
    _gen: np.random.Generator | None = None
    overflow: int = 0

    def __post_init__(self) -> None:
        if not self.capacity:
            self.capacity = math.ceil(400 * self.n / self.eps_inner**2)
        self._gen = seeds.rng(self.seed, "reservoir")

    @property
    def constant(self) -> float:
        return 100 * self.n / self.eps_inner**2

    def _threshold(self) -> float:
        return min(self.constant / self._total, self._cap_threshold) if self._total > 0 else math.inf

    def push(self, u: int, v: int, weight: float) -> None:
        if weight <= 0:
            raise ValueError("stream weights must be positive")
        idx = self._count
        self._count += 1
        self._total += weight
        a = self.lam_shifted * weight
        key = float(self._gen.random()) / a
        t = self._threshold()
        if key <= t:
            heapq.heappush(self._heap, (-key, idx, u, v, weight, a))
        while self._heap and -self._heap[0][0] > t:
            heapq.heappop(self._heap)
        while len(self._heap) > self.capacity:
            nk, *_ = heapq.heappop(self._heap)
            self._cap_threshold = -nk
            self.overflow += 1

    def extend(self, events: Iterable[tuple[int, int, float]]) -> "ReservoirSampler":
        for u, v, w in events:
            self.push(int(u), int(v), float(w))
        return self

    def members(self) -> list[int]:
        return sorted(idx for _, idx, *_ in self._heap)

    def snapshot(self) -> WeightedGraph:
        """Current sample reweighted by inverse inclusion and rescaled to the streamed total."""
        t = self._threshold()
        rows = sorted((idx, u, v, w / min(1.0, a * t)) for _, idx, u, v, w, a in self._heap)
        s = sum(r[3] for r in rows)
        scale = self._total / s if s > 0 else 0.0
        return WeightedGraph(self.n, tuple((u, v, w * scale) for _, u, v, w in rows))


def stream_sparsify(
    events: Iterable[tuple[int, int, float]],
    n: int,
    eps: float,
    seed: int = 0,
    eps_inner: float | None = None,
) -> WeightedGraph:
    """Insertion-only MAX-CUT sparsification; the inner accuracy defaults to ``eps / 200``."""
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    e1 = eps / 200 if eps_inner is None else eps_inner
    return ReservoirSampler(n, e1, seed).extend(events).snapshot()


def batch_inclusion(G: WeightedGraph, eps_inner: float, seed: int) -> np.ndarray:
    """One batch draw of the inclusion indicator, without verification or retries."""
    return seeds.rng(seed, "shifted", 0).random(G.m) < _maxcut_q(G, eps_inner)


def _maxcut_q(G: WeightedGraph, eps_inner: float) -> np.ndarray:
    # lambda_max of the shifted MAX-CUT predicate is 3.
    w = np.array([e[2] for e in G.edges])
    return np.minimum(1.0, 3.0 * w / w.sum() * (100 * G.n / eps_inner**2))


def stream_inclusion(G: WeightedGraph, eps_inner: float, seed: int) -> np.ndarray:
    s = ReservoirSampler(G.n, eps_inner, seed).extend(G.edges)
    out = np.zeros(G.m, dtype=bool)
    out[s.members()] = True
    return out
