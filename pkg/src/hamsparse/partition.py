"""Deterministic r-partite decomposition of r-uniform hypergraphs.

A labelling ``p`` sends each qubit to a part in ``0 .. r-1`` (or ``None`` while
undecided). An edge is retained by a full labelling when its slot ``k`` lands in
part ``k`` for every ``k``. The greedy labelling maximises the potential

    Phi(p) = sum over edges of prod_k delta(k, p(t_k)),  delta(a, None) = 1/r,

one qubit at a time. All potentials are tracked as integers ``r^r * Phi``,
so ties and the monotonicity audit are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

Edge = tuple[int, ...]
Labels = Mapping[int, int | None] | Sequence[int | None]


def _label(p: Labels, q: int) -> int | None:
    if isinstance(p, Mapping):
        return p.get(q)
    return p[q] if q < len(p) else None


def _edge_value(edge: Edge, p: Labels, r: int) -> int:
    """``r^r`` times the potential of one edge."""
    assigned = 0
    for k, q in enumerate(edge):
        a = _label(p, q)
        if a is None:
            continue
        if a != k:
            return 0
        assigned += 1
    return r**assigned


def potential_scaled(edges: Sequence[Edge], p: Labels, r: int) -> int:
    return sum(_edge_value(tuple(e), p, r) for e in edges)


def potential(edges: Sequence[Edge], p: Labels, r: int | None = None) -> float:
    """``Phi(p)`` as a float; the all-undecided labelling gives ``|edges| / r^r``."""
    if not edges:
        return 0.0
    r = len(edges[0]) if r is None else r
    return potential_scaled(edges, p, r) / r**r


@dataclass(frozen=True)
class AssignmentTrace:
    labels: tuple[int, ...]
    potentials: tuple[int, ...] = field(default=())
    r: int = 2

    @property
    def potential_values(self) -> list[float]:
        return [v / self.r**self.r for v in self.potentials]


def _arity(edges: Sequence[Edge]) -> int:
    if not edges:
        raise ValueError("edge list is empty")
    r = len(edges[0])
    for e in edges:
        if len(e) != r:
            raise ValueError(f"mixed arities: {len(e)} vs {r}")
        if len(set(e)) != r:
            raise ValueError(f"edge {tuple(e)} repeats a vertex")
    return r


def find_partition_assignment(edges: Sequence[Edge], r: int | None = None, n: int | None = None) -> AssignmentTrace:
    """Greedy labelling over qubits in ascending order, smallest label on ties.

    ``potentials[0]`` is the starting value and ``potentials[i + 1]`` the value
    after qubit ``i`` is labelled, all scaled by ``r^r``.
    """
    edges = [tuple(int(q) for q in e) for e in edges]
    r_found = _arity(edges)
    r = r_found if r is None else r
    if r != r_found:
        raise ValueError(f"edges have arity {r_found}, expected {r}")
    n = max(max(e) for e in edges) + 1 if n is None else n
    incident: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for j, e in enumerate(edges):
        for k, q in enumerate(e):
            incident[q].append((j, k))
    # Per edge: number of decided slots, or -1 once some slot is mismatched.
    decided = [0] * len(edges)
    phi = len(edges)
    trace = [phi]
    labels: list[int] = []
    for q in range(n):
        best_a, best_gain = 0, None
        for a in range(r):
            gain = 0
            for j, k in incident[q]:
                c = decided[j]
                if c < 0:
                    continue
                gain += r**c * (r - 1) if k == a else -(r**c)
            if best_gain is None or gain > best_gain:
                best_a, best_gain = a, gain
        for j, k in incident[q]:
            if decided[j] >= 0:
                decided[j] = decided[j] + 1 if k == best_a else -1
        phi += best_gain or 0
        labels.append(best_a)
        trace.append(phi)
    return AssignmentTrace(tuple(labels), tuple(trace), r)


def retained(edges: Sequence[Edge], labels: Sequence[int]) -> list[int]:
    """Indices of edges whose slot ``k`` carries label ``k``."""
    return [j for j, e in enumerate(edges) if all(labels[q] == k for k, q in enumerate(e))]


def piece_count_bound(n: int, r: int) -> int:
    if r == 1:
        return 1
    return math.ceil(math.log(2 * n**r) / -math.log(1 - r ** (-r)))


@dataclass(frozen=True)
class Piece:
    labels: tuple[int, ...]
    indices: tuple[int, ...]


@dataclass(frozen=True)
class PartiteDecomposition:
    pieces: tuple[Piece, ...]
    r: int
    n: int
    traces: tuple[AssignmentTrace, ...] = ()

    def __len__(self) -> int:
        return len(self.pieces)

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "n": self.n,
            "pieces": [{"labels": list(p.labels), "indices": list(p.indices)} for p in self.pieces],
        }


def peel_partition(edges: Sequence[Edge], r: int | None = None, n: int | None = None) -> PartiteDecomposition:
    """Extract r-partite pieces until no edge is left.

    Repeated tuples are treated as one edge and always land in the same piece.
    """
    edges = [tuple(int(q) for q in e) for e in edges]
    if not edges:
        return PartiteDecomposition((), r or 0, n or 0)
    r_found = _arity(edges)
    r = r_found if r is None else r
    n = max(max(e) for e in edges) + 1 if n is None else n
    groups: dict[Edge, list[int]] = {}
    for j, e in enumerate(edges):
        groups.setdefault(e, []).append(j)
    remaining = list(groups)
    pieces: list[Piece] = []
    traces: list[AssignmentTrace] = []
    while remaining:
        tr = find_partition_assignment(remaining, r, n)
        keep = set(retained(remaining, tr.labels))
        if not keep:
            raise ArithmeticError("greedy labelling retained no edge")
        idx = sorted(j for pos in keep for j in groups[remaining[pos]])
        pieces.append(Piece(tr.labels, tuple(idx)))
        traces.append(tr)
        remaining = [e for pos, e in enumerate(remaining) if pos not in keep]
    return PartiteDecomposition(tuple(pieces), r, n, tuple(traces))
