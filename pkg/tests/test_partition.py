import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamsparse.partition import (
    find_partition_assignment,
    peel_partition,
    piece_count_bound,
    potential,
    retained,
)


def oracle_potential(edges, p, r):
    total = Fraction(0)
    for e in edges:
        v = Fraction(1)
        for k, q in enumerate(e):
            lab = p.get(q)
            v *= Fraction(1, r) if lab is None else Fraction(int(lab == k))
        total += v
    return total


def random_edges(seed, n, r, m):
    rng = np.random.default_rng(seed)
    return [tuple(int(q) for q in rng.choice(n, r, replace=False)) for _ in range(m)]


def test_potential_examples():
    edges = random_edges(0, 6, 3, 10)
    assert potential(edges, {}, 3) == pytest.approx(10 / 27)
    assert potential([(4, 1, 2)], {4: 0, 1: 1, 2: 2}, 3) == 1
    assert potential([(4, 1, 2)], {4: 0, 1: 2, 2: 2}, 3) == 0


def test_single_edge():
    for r in (1, 2, 3):
        tr = find_partition_assignment([tuple(range(r))], r, r)
        assert len(retained([tuple(range(r))], tr.labels)) == 1


def test_star_against_brute_force():
    edges = [(0, 1), (0, 2), (0, 3)]
    tr = find_partition_assignment(edges, 2, 4)
    got = len(retained(edges, tr.labels))
    best = max(len(retained(edges, lab)) for lab in itertools.product(range(2), repeat=4))
    assert got >= math.ceil(3 / 4)
    assert best == 3 and got == best


def test_complete_graph_k6():
    edges = list(itertools.combinations(range(6), 2))
    deco = peel_partition(edges, 2, 6)
    assert len(deco) <= piece_count_bound(6, 2)
    got = sorted(i for p in deco.pieces for i in p.indices)
    assert got == list(range(15))


def test_already_partite_only_bound_promised():
    edges = [(0, 3), (1, 4), (2, 5), (0, 4)]
    deco = peel_partition(edges, 2, 6)
    assert 1 <= len(deco) <= piece_count_bound(6, 2)


def test_empty_input():
    assert len(peel_partition([], 2, 4)) == 0


@pytest.mark.parametrize("seed", range(50))
def test_greedy_potential_nondecreasing(seed):
    r = 2 + seed % 2
    edges = random_edges(seed, 12, r, 40)
    tr = find_partition_assignment(edges, r, 12)
    vals = tr.potential_values
    assert vals[0] == pytest.approx(len(edges) / r**r)
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
    # Replay the trace against the exact rational oracle.
    p = {}
    assert oracle_potential(edges, p, r) == Fraction(tr.potentials[0], r**r)
    for q, lab in enumerate(tr.labels):
        p[q] = lab
        assert oracle_potential(edges, p, r) == Fraction(tr.potentials[q + 1], r**r)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3), st.integers(1, 60))
def test_peel_invariants(seed, r, m):
    n = 9
    edges = random_edges(seed, n, r, m)
    deco = peel_partition(edges, r, n)
    seen = [i for p in deco.pieces for i in p.indices]
    assert sorted(seen) == list(range(m))
    assert len(deco) <= piece_count_bound(n, r)
    for p in deco.pieces:
        for i in p.indices:
            assert all(p.labels[q] == k for k, q in enumerate(edges[i]))
    # first extraction meets the r^-r fraction exactly
    assert len(deco.pieces[0].indices) * r**r >= m


def test_deterministic():
    edges = random_edges(3, 10, 3, 30)
    assert peel_partition(edges, 3, 10) == peel_partition(edges, 3, 10)
