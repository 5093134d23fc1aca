"""Weighted affine-parity CSPs and an unbiased, exhaustively verified sparsifier.

Constraint ``i`` on variable set ``T_i`` with parity ``b_i`` is satisfied by
``x`` when ``XOR_{j in T_i} x_j == b_i``. Variable 0 is the most significant
bit of an assignment index.

Sampling uses exact importances ``p_i = max_x nu_i sat_i(x) / total(x)``.
They come from enumerating the codewords of the generator matrix, which
bounds the instance size to roughly 20 variables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np
import numpy.typing as npt

from . import seeds
from .model import SparsifierReport, SparsifierWeights

MAX_VARS = 20
VERIFY_TOL = 1e-8
BLOCK_BITS = 12


@dataclass(frozen=True)
class XorConstraint:
    vars: tuple[int, ...]
    parity: int = 0
    weight: float = 1.0

    def __post_init__(self) -> None:
        v = tuple(sorted(int(j) for j in self.vars))
        if not v:
            raise ValueError("constraint needs at least one variable")
        if len(set(v)) != len(v):
            raise ValueError(f"repeated variable in {self.vars}")
        if self.parity not in (0, 1):
            raise ValueError(f"parity must be 0 or 1, got {self.parity}")
        if not (self.weight >= 0 and math.isfinite(self.weight)):
            raise ValueError(f"bad weight {self.weight}")
        object.__setattr__(self, "vars", v)
        object.__setattr__(self, "weight", float(self.weight))


@dataclass(frozen=True)
class XorInstance:
    n: int
    constraints: tuple[XorConstraint, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        cs = tuple(self.constraints)
        for i, c in enumerate(cs):
            if max(c.vars) >= self.n or min(c.vars) < 0:
                raise ValueError(f"constraint {i} uses variables outside [0, {self.n})")
        object.__setattr__(self, "constraints", cs)

    @property
    def m(self) -> int:
        return len(self.constraints)

    @property
    def weights(self) -> npt.NDArray[np.float64]:
        return np.array([c.weight for c in self.constraints])

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "constraints": [{"vars": list(c.vars), "parity": c.parity, "weight": c.weight} for c in self.constraints],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "XorInstance":
        return cls(
            int(data["n"]),
            tuple(XorConstraint(tuple(c["vars"]), int(c.get("parity", 0)), float(c.get("weight", 1.0))) for c in data["constraints"]),
        )


def eval_xor(x: Sequence[int] | int, inst: XorInstance, w: Mapping[int, float] | None = None) -> float:
    """Weighted satisfied mass of one assignment (bit list or basis index)."""
    if isinstance(x, (int, np.integer)):
        bits = [(int(x) >> (inst.n - 1 - j)) & 1 for j in range(inst.n)]
    else:
        bits = [int(b) for b in x]
        if len(bits) != inst.n:
            raise ValueError(f"assignment has {len(bits)} bits, expected {inst.n}")
    pairs = ((i, c.weight) for i, c in enumerate(inst.constraints)) if w is None else w.items()
    total = 0.0
    for i, c in pairs:
        c_i = inst.constraints[i]
        if sum(bits[j] for j in c_i.vars) % 2 == c_i.parity:
            total += c
    return total


def build_generator(inst: XorInstance) -> npt.NDArray[np.uint8]:
    """``m x (n+2)`` matrix over F2.

    Row ``i`` has ones on ``T_i``, ``b_i XOR 1`` in column ``n`` and a one in
    column ``n+1``. Multiplying by ``(x, 1, 0)`` gives the satisfaction bits of
    ``x``, and ``(0, 0, 1)`` gives the all-ones codeword.
    """
    G = np.zeros((inst.m, inst.n + 2), dtype=np.uint8)
    for i, c in enumerate(inst.constraints):
        G[i, list(c.vars)] = 1
        G[i, inst.n] = c.parity ^ 1
        G[i, inst.n + 1] = 1
    return G


def _assignment_blocks(n: int) -> Iterator[npt.NDArray[np.uint8]]:
    N = 2**n
    step = min(N, 2**BLOCK_BITS)
    shifts = np.arange(n - 1, -1, -1)
    for start in range(0, N, step):
        x = np.arange(start, min(N, start + step))
        yield ((x[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def _codewords(G: npt.NDArray[np.uint8], n: int) -> Iterator[npt.NDArray[np.uint8]]:
    """Satisfaction bits for every assignment, block by block, via ``G (x, 1, 0)``."""
    A = G[:, :n].T.astype(np.int64)
    offset = G[:, n].astype(np.int64)
    for X in _assignment_blocks(n):
        yield ((X.astype(np.int64) @ A + offset) & 1).astype(np.uint8)


def _masks(inst: XorInstance) -> tuple[npt.NDArray[np.int64], npt.NDArray[np.int64]]:
    masks = np.array([sum(1 << (inst.n - 1 - j) for j in c.vars) for c in inst.constraints], dtype=np.int64)
    parities = np.array([c.parity for c in inst.constraints], dtype=np.int64)
    return masks, parities


def satisfied_mass(inst: XorInstance, w: Mapping[int, float] | None = None) -> npt.NDArray[np.float64]:
    """Weighted satisfied mass for every assignment, computed by popcount parity."""
    if inst.n > MAX_VARS:
        raise ValueError(f"n={inst.n} exceeds the enumeration cap of {MAX_VARS}")
    vec = inst.weights if w is None else np.array([w.get(i, 0.0) for i in range(inst.m)])
    masks, parities = _masks(inst)
    N = 2**inst.n
    out = np.empty(N)
    step = min(N, 2**BLOCK_BITS)
    for start in range(0, N, step):
        x = np.arange(start, min(N, start + step), dtype=np.int64)
        par = np.bitwise_count(x[:, None] & masks[None, :]) & 1
        out[start : start + len(x)] = (par == parities[None, :]) @ vec
    return out


def xor_report(inst: XorInstance, w: Mapping[int, float], eps: float, tol: float = VERIFY_TOL) -> SparsifierReport:
    """Exhaustive ``(1-eps)``/``(1+eps)`` check over all assignments, with both slacks."""
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    a = satisfied_mass(inst)
    b = satisfied_mass(inst, w)
    scale = max(1.0, (1 + eps) * float(a.max(initial=0.0)), float(b.max(initial=0.0)))
    lo = float(np.min(b - (1 - eps) * a))
    hi = float(np.min((1 + eps) * a - b))
    ok = lo >= -tol * scale and hi >= -tol * scale
    return SparsifierReport(bool(ok), eps, lo, hi, sum(1 for v in w.values() if v > 0), scale, mode="exhaustive")


def verify_xor(inst: XorInstance, w: Mapping[int, float], eps: float, tol: float = VERIFY_TOL) -> bool:
    return xor_report(inst, w, eps, tol).passed


def importances(inst: XorInstance) -> npt.NDArray[np.float64]:
    """``p_i = max over x with positive total of nu_i sat_i(x) / total(x)``."""
    if inst.n > MAX_VARS:
        raise ValueError(f"n={inst.n} exceeds the enumeration cap of {MAX_VARS}")
    nu = inst.weights
    p = np.zeros(inst.m)
    for S in _codewords(build_generator(inst), inst.n):
        total = S @ nu
        pos = total > 0
        if not np.any(pos):
            continue
        frac = S[pos] * (nu[None, :] / total[pos, None])
        p = np.maximum(p, frac.max(axis=0))
    return p


def base_constant(n: int, eps: float) -> float:
    return 8 * (n + 2) * math.log(2) / eps**2


def sparsify_xor_unbiased(
    inst: XorInstance,
    eps: float,
    seed: int = 0,
    retry_budget: int = 64,
    constant: float | None = None,
    diagnostics: dict | None = None,
) -> SparsifierWeights:
    """Importance-sample constraints, rescale to keep the total weight, verify exhaustively.

    Constraint ``i`` survives with probability ``q_i = min(1, p_i C)`` at
    weight ``nu_i / q_i``. ``C = 8 (n+2) ln 2 / eps^2`` doubles after each failed
    verification. Inputs of at most ``C`` constraints are returned unchanged.
    ``constant`` replaces the starting ``C``.
    """
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    if inst.n > MAX_VARS:
        raise ValueError(f"n={inst.n} exceeds the enumeration cap of {MAX_VARS}")
    diag = diagnostics if diagnostics is not None else {}
    live = [i for i, c in enumerate(inst.constraints) if c.weight > 0]
    C0 = base_constant(inst.n, eps) if constant is None else float(constant)
    diag.update(attempts=0, constant=C0, live=len(live))
    if len(live) <= C0:
        return SparsifierWeights({i: inst.constraints[i].weight for i in live})
    sub = XorInstance(inst.n, tuple(inst.constraints[i] for i in live))
    nu = sub.weights
    p = importances(sub)
    diag["importance_sum"] = float(p.sum())
    for attempt in range(retry_budget):
        kappa = 2.0**attempt
        q = np.minimum(1.0, p * C0 * kappa)
        gen = seeds.rng(seed, "xor", attempt)
        keep = gen.random(sub.m) < q
        w = np.zeros(sub.m)
        w[keep] = nu[keep] / q[keep]
        diag["attempts"] = attempt + 1
        if w.sum() <= 0:
            continue
        w *= nu.sum() / w.sum()
        local = {j: float(w[j]) for j in np.flatnonzero(keep)}
        if verify_xor(sub, local, eps):
            diag["kappa"] = kappa
            return SparsifierWeights({live[j]: v for j, v in local.items()})
    raise RuntimeError(f"XOR sparsification failed after {retry_budget} attempts (n={inst.n}, m={sub.m}, eps={eps})")
