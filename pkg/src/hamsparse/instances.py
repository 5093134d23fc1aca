"""Seeded instance families with creation-time validity audits."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import linalg, seeds
from .generic import sample_random_psd
from .maxcsp import WeightedGraph, maxcut_hamiltonian, maxcut_predicate
from .model import Hamiltonian, Term
from .nrd import Relation
from .pauli import PauliString, pauli_term, recognize_pauli

FAMILIES = ("pauli", "generic", "nullity1", "fullrank", "maxcut", "classical")


@dataclass(frozen=True)
class InstanceSpec:
    family: str
    n: int
    m: int
    seed: int
    r: int = 2
    R: int | None = None
    predicates: int | None = None
    weights: str = "uniform"
    relation: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        if self.n < 1 or self.m < 0:
            raise ValueError(f"need n >= 1 and m >= 0, got n={self.n}, m={self.m}")
        if not 1 <= self.r <= self.n:
            raise ValueError(f"arity r={self.r} must lie in [1, n]")
        if self.weights not in ("uniform", "random"):
            raise ValueError(f"weights must be 'uniform' or 'random', got {self.weights!r}")
        if self.family == "maxcut" and self.r != 2:
            raise ValueError("maxcut instances are 2-local")
        object.__setattr__(self, "relation", tuple(self.relation))

    def to_json(self) -> dict:
        d = asdict(self)
        d["relation"] = list(self.relation)
        return d


def _tuple(gen: np.random.Generator, n: int, r: int) -> tuple[int, ...]:
    return tuple(int(q) for q in gen.choice(n, r, replace=False))


def _weight(gen: np.random.Generator, mode: str) -> float:
    return 1.0 if mode == "uniform" else float(gen.uniform(0.5, 1.5))


def _pauli(spec: InstanceSpec, gen: np.random.Generator) -> Hamiltonian:
    terms = []
    for _ in range(spec.m):
        T = _tuple(gen, spec.n, spec.r)
        s = PauliString(tuple(str(c) for c in gen.choice(list("XYZ"), spec.r)), int(gen.choice([1, -1])))
        terms.append(pauli_term(T, s, _weight(gen, spec.weights)))
    H = Hamiltonian(spec.n, tuple(terms))
    for i, t in enumerate(H.terms):
        if recognize_pauli(t.predicate) != t.label:
            raise ArithmeticError(f"term {i} fails Pauli recognition")
    return H


def _palette_size(spec: InstanceSpec, default: int = 4) -> int:
    return max(1, default if spec.predicates is None else spec.predicates)


def _palette(spec: InstanceSpec, gen: np.random.Generator, R: int, default: int = 4) -> list[np.ndarray]:
    return [sample_random_psd(r=spec.r, R=R, rng=gen) for _ in range(_palette_size(spec, default))]


def _from_palette(
    spec: InstanceSpec, gen: np.random.Generator, palette: Sequence[np.ndarray], in_order: bool = False
) -> Hamiltonian:
    terms = []
    for i in range(spec.m):
        T = _tuple(gen, spec.n, spec.r)
        k = i if in_order else int(gen.integers(len(palette)))
        terms.append(Term(T, palette[k], _weight(gen, spec.weights)))
    return Hamiltonian(spec.n, tuple(terms))


def _generic(spec: InstanceSpec, gen: np.random.Generator) -> Hamiltonian:
    R = 2 ** (spec.r - 1) + 1 if spec.R is None else spec.R
    if R < 2 ** (spec.r - 1) + 1:
        raise ValueError(f"generic family needs R >= {2 ** (spec.r - 1) + 1}, got {R}")
    # A fresh predicate per term by default: a repeated tuple with a repeated
    # predicate has a nontrivial joint kernel.
    if spec.predicates is None:
        return _from_palette(spec, gen, _palette(spec, gen, R, default=max(1, spec.m)), in_order=True)
    return _from_palette(spec, gen, _palette(spec, gen, R))


def _nullity1(spec: InstanceSpec, gen: np.random.Generator) -> Hamiltonian:
    R = 2**spec.r - 1
    if spec.R not in (None, R):
        raise ValueError(f"nullity-1 family has R = 2^r - 1 = {R}")
    H = _from_palette(spec, gen, _palette(spec, gen, R))
    for i, t in enumerate(H.terms):
        if linalg.numerical_rank(t.predicate) != R:
            raise ArithmeticError(f"term {i} does not have nullity one")
    return H


def _fullrank(spec: InstanceSpec, gen: np.random.Generator) -> Hamiltonian:
    d = 2**spec.r
    palette = []
    for _ in range(_palette_size(spec)):
        # Shifting by the identity keeps the condition number below 2.
        P = sample_random_psd(r=spec.r, R=d, rng=gen)
        palette.append(P / linalg.lambda_max(P) + np.eye(d))
    return _from_palette(spec, gen, palette)


def _maxcut(spec: InstanceSpec, gen: np.random.Generator) -> Hamiltonian:
    return maxcut_hamiltonian(random_graph(spec.n, spec.m, gen, spec.weights))


def random_graph(n: int, m: int, gen: np.random.Generator, weights: str = "uniform") -> WeightedGraph:
    """``m`` edges drawn independently; repeats are allowed."""
    edges = []
    for _ in range(m):
        u, v = _tuple(gen, n, 2)
        edges.append((u, v, _weight(gen, weights)))
    return WeightedGraph(n, tuple(edges))


def relation_predicate(R: Relation) -> np.ndarray:
    """Diagonal 0/1 predicate that charges energy on the tuples of ``R``."""
    d = np.zeros(2**R.r)
    for t in R.tuples:
        d[int("".join(map(str, t)), 2)] = 1.0
    return np.diag(d).astype(np.complex128)


def _classical(spec: InstanceSpec, gen: np.random.Generator) -> Hamiltonian:
    if spec.relation:
        rels = [Relation.from_strings(spec.r, spec.relation)]
    else:
        rels = []
        for _ in range(_palette_size(spec)):
            k = int(gen.integers(1, 2**spec.r))
            picks = gen.choice(2**spec.r, size=k, replace=False)
            rels.append(Relation(spec.r, frozenset(tuple((int(p) >> (spec.r - 1 - j)) & 1 for j in range(spec.r)) for p in picks)))
    return _from_palette(spec, gen, [relation_predicate(R) for R in rels])


_BUILDERS = {
    "pauli": _pauli,
    "generic": _generic,
    "nullity1": _nullity1,
    "fullrank": _fullrank,
    "maxcut": _maxcut,
    "classical": _classical,
}


def generate_instance(spec: InstanceSpec) -> Hamiltonian:
    gen = seeds.rng(spec.seed, "instance", spec.family)
    return _BUILDERS[spec.family](spec, gen)


def maxcut_graph(spec: InstanceSpec) -> WeightedGraph:
    """The graph behind a maxcut instance, drawn from the same stream."""
    if spec.family != "maxcut":
        raise ValueError("not a maxcut spec")
    return random_graph(spec.n, spec.m, seeds.rng(spec.seed, "instance", spec.family), spec.weights)


def is_maxcut(H: Hamiltonian) -> bool:
    M = maxcut_predicate()
    return all(t.arity == 2 and np.max(np.abs(t.predicate - M)) < 1e-12 for t in H.terms)


def graph_of(H: Hamiltonian) -> WeightedGraph:
    if not is_maxcut(H):
        raise ValueError("instance does not consist of MAX-CUT terms")
    return WeightedGraph(H.n, tuple((t.tuple[0], t.tuple[1], t.weight) for t in H.terms if t.weight > 0))
