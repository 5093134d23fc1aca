"""JSON encodings for Hamiltonians, weights, XOR instances, and graphs.

Hamiltonian::

    {"n": 4, "terms": [{"tuple": [0, 1], "weight": 1.0,
                        "predicate": {"dim": 4, "entries": [[re, im], ...]}}]}

``entries`` lists the matrix row by row. A predicate may instead be given as
``{"pauli": "-XZ"}``. Weights are ``{"index": weight}``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .maxcsp import WeightedGraph
from .model import Hamiltonian, SparsifierWeights, Term
from .pauli import PauliString, pauli_matrix
from .xorsparse import XorInstance


def parse_pauli(s: str) -> PauliString:
    s = s.strip()
    sign = -1 if s.startswith("-") else 1
    return PauliString(tuple(s.lstrip("+-")), sign)


def predicate_to_json(M: np.ndarray) -> dict:
    M = np.asarray(M, dtype=np.complex128)
    return {"dim": int(M.shape[0]), "entries": [[float(z.real), float(z.imag)] for z in M.reshape(-1)]}


def predicate_from_json(data: Mapping[str, Any]) -> tuple[np.ndarray, object]:
    if "pauli" in data:
        s = parse_pauli(str(data["pauli"]))
        return pauli_matrix(s), s
    dim = int(data["dim"])
    entries = data["entries"]
    if len(entries) != dim * dim:
        raise ValueError(f"predicate lists {len(entries)} entries, expected {dim * dim}")
    flat = np.array([complex(float(e[0]), float(e[1])) for e in entries])
    return flat.reshape(dim, dim), None


def hamiltonian_to_json(H: Hamiltonian) -> dict:
    terms = []
    for t in H.terms:
        pred = {"pauli": str(t.label)} if isinstance(t.label, PauliString) else predicate_to_json(t.predicate)
        terms.append({"tuple": list(t.tuple), "predicate": pred, "weight": t.weight})
    return {"n": H.n, "terms": terms}


def hamiltonian_from_json(data: Mapping[str, Any]) -> Hamiltonian:
    n = int(data["n"])
    terms = []
    for i, row in enumerate(data["terms"]):
        try:
            M, label = predicate_from_json(row["predicate"])
            terms.append(Term(tuple(row["tuple"]), M, float(row.get("weight", 1.0)), label))
        except (KeyError, ValueError) as exc:
            raise ValueError(f"term {i}: {exc}") from None
    return Hamiltonian(n, tuple(terms))


def weights_from_json(data: Mapping[str, Any]) -> SparsifierWeights:
    return SparsifierWeights({int(k): float(v) for k, v in data.items()})


def graph_from_json(data: Mapping[str, Any]) -> WeightedGraph:
    return WeightedGraph(int(data["n"]), tuple((int(e[0]), int(e[1]), float(e[2]) if len(e) > 2 else 1.0) for e in data["edges"]))


def xor_from_json(data: Mapping[str, Any]) -> XorInstance:
    return XorInstance.from_json(data)


def dumps(obj: Any) -> str:
    """Canonical text: sorted keys and a trailing newline, so equal inputs give equal bytes."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_json(obj: Any, path: str | Path | None) -> str:
    text = dumps(obj)
    if path is not None and str(path) != "-":
        Path(path).write_text(text)
    return text


def read_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text())
