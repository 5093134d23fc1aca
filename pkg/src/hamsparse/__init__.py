"""Spectral sparsification and non-redundancy tools for local Hamiltonians."""

from .model import (
    CapacityError,
    ConsistencyError,
    Hamiltonian,
    SparsifierReport,
    SparsifierWeights,
    Term,
    assemble,
    energy,
    ground_space,
    verify_sparsifier,
)
from .generic import sparsify_generic
from .maxcsp import WeightedGraph, maxcsp_sparsify, maxcut_hamiltonian, maxcut_sparsify, stream_sparsify
from .nullity1 import sparsify_fullrank, sparsify_nullity1
from .partition import peel_partition
from .pauli import PauliString, pauli_term, sparsify_pauli
from .xorsparse import XorConstraint, XorInstance, sparsify_xor_unbiased

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "ConsistencyError",
    "Hamiltonian",
    "PauliString",
    "SparsifierReport",
    "SparsifierWeights",
    "Term",
    "WeightedGraph",
    "XorConstraint",
    "XorInstance",
    "assemble",
    "energy",
    "ground_space",
    "maxcsp_sparsify",
    "maxcut_hamiltonian",
    "maxcut_sparsify",
    "pauli_term",
    "peel_partition",
    "sparsify_fullrank",
    "sparsify_generic",
    "sparsify_nullity1",
    "sparsify_pauli",
    "sparsify_xor_unbiased",
    "stream_sparsify",
    "verify_sparsifier",
]
