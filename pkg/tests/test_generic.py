import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamsparse import linalg
from hamsparse.generic import (
    RandomPredicateSpec,
    genericity_check,
    importance_sample,
    lambda_min_certificate,
    pair_matching,
    sample_random_psd,
    sparsify_generic,
)
from hamsparse.model import Hamiltonian, SparsifierWeights, Term, assemble, hamiltonian_energy, verify_sparsifier
from conftest import random_state


def generic_instance(seed, n=8, m=120, r=2, R=3):
    rng = np.random.default_rng(seed)
    terms = []
    for _ in range(m):
        T = tuple(int(q) for q in rng.choice(n, r, replace=False))
        terms.append(Term(T, sample_random_psd(r=r, R=R, rng=rng)))
    return Hamiltonian(n, tuple(terms))


def test_sample_random_psd_ranks():
    assert linalg.kernel_basis(sample_random_psd(RandomPredicateSpec(2, 4, 0))).shape[1] == 0
    assert linalg.numerical_rank(sample_random_psd(RandomPredicateSpec(3, 1, 0))) == 1
    M = sample_random_psd(RandomPredicateSpec(2, 3, 9))
    assert linalg.kernel_basis(M).shape[1] == 1
    assert linalg.lambda_max(M) <= 3 + 1e-12
    assert np.allclose(np.trace(M).real, 3)  # unit vectors


def test_sample_random_psd_seeded():
    a = sample_random_psd(RandomPredicateSpec(2, 3, 5))
    assert np.array_equal(a, sample_random_psd(RandomPredicateSpec(2, 3, 5)))
    with pytest.raises(ValueError):
        RandomPredicateSpec(2, 5)


def test_genericity_same_predicate_100_seeds():
    for s in range(100):
        M = sample_random_psd(RandomPredicateSpec(2, 3, s))
        assert genericity_check(M, M, (0, 1), (0, 2))


def test_genericity_below_threshold_is_observational():
    outcomes = []
    for s in range(20):
        M = sample_random_psd(RandomPredicateSpec(2, 2, s))
        outcomes.append(genericity_check(M, M, (0, 1), (0, 2)))
    assert all(isinstance(o, bool) for o in outcomes)


def test_genericity_full_rank_and_disjoint():
    assert genericity_check(np.eye(4), np.eye(4), (0, 1), (1, 2))
    with pytest.raises(ValueError):
        genericity_check(np.eye(4), np.eye(4), (0, 1), (2, 3))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_genericity_symmetric_and_relabel_invariant(seed):
    rng = np.random.default_rng(seed)
    M, N = sample_random_psd(r=2, R=3, rng=rng), sample_random_psd(r=2, R=3, rng=rng)
    a = genericity_check(M, N, (0, 1), (1, 2))
    assert a == genericity_check(N, M, (1, 2), (0, 1))
    assert a == genericity_check(M, N, (5, 1), (1, 7))


def test_pair_matching_examples():
    # Pairing stops once at most n / r terms remain: 4 -> 2 terms at n/r = 2.5.
    star = Hamiltonian(5, tuple(Term((0, q), np.eye(4)) for q in range(1, 5)))
    assert len(pair_matching(star).pairs) == 1
    star4 = Hamiltonian(4, tuple(Term((0, q), np.eye(4)) for q in (1, 2, 3, 1, 2, 3)))
    assert len(pair_matching(star4).pairs) == 2
    disjoint = Hamiltonian(6, tuple(Term((2 * k, 2 * k + 1), np.eye(4)) for k in range(3)))
    pm = pair_matching(disjoint)
    assert pm.pairs == () and pm.leftover == (0, 1, 2)
    H = generic_instance(4, n=8, m=64)
    pm = pair_matching(H)
    assert len(pm.pairs) >= 16
    flat = [i for p in pm.pairs for i in p] + list(pm.leftover)
    assert sorted(flat) == list(range(64))
    for a, b in pm.pairs:
        assert set(H.terms[a].tuple) & set(H.terms[b].tuple)


def test_certificate_examples():
    H = generic_instance(1, n=3, m=2)
    H = Hamiltonian(3, (Term((0, 1), H.terms[0].predicate), Term((1, 2), H.terms[1].predicate)))
    cert = lambda_min_certificate(H, pair_matching(H))
    assert cert.lower == pytest.approx(linalg.lambda_min(assemble(H)), abs=1e-12)
    assert lambda_min_certificate(H, pair_matching(H, [])).lower == 0


def test_certificate_disjoint_pairs_dense_audit():
    rng = np.random.default_rng(2)
    terms = []
    for base in (0, 3, 5):
        for T in ((base, base + 1), (base + 1, base + 2)) if base < 5 else ((5, 6), (6, 7)):
            terms.append(Term(T, sample_random_psd(r=2, R=3, rng=rng)))
    H = Hamiltonian(8, tuple(terms))
    pm = pair_matching(H)
    cert = lambda_min_certificate(H, pm)
    assert cert.lower == pytest.approx(sum(cert.pair_minima))
    assert cert.lower <= linalg.lambda_min(assemble(H)) + 1e-8


@pytest.mark.parametrize("seed", range(5))
def test_certificate_sound_and_importances_valid(seed):
    H = generic_instance(seed, n=7, m=40)
    cert = lambda_min_certificate(H, pair_matching(H))
    assert 0 < cert.lower <= linalg.lambda_min(assemble(H)) + 1e-8
    p = np.array([t.weight * linalg.lambda_max(t.predicate) for t in H.terms]) / cert.lower
    rng = np.random.default_rng(seed)
    for _ in range(50):
        psi = random_state(7, rng)
        total = hamiltonian_energy(psi, H)
        for i, t in enumerate(H.terms):
            assert t.weight * hamiltonian_energy(psi, H, {i: 1.0}) <= p[i] * total * (1 + 1e-8)


def test_importance_identity_when_saturated():
    H = generic_instance(0, n=4, m=10)
    w = importance_sample(H, np.ones(10), 0.3)
    assert dict(w) == dict(SparsifierWeights.identity(H))


def test_importance_scalar_concentration():
    # Identical terms on one tuple: the Loewner sandwich collapses to a scalar ratio.
    M = sample_random_psd(RandomPredicateSpec(2, 3, 1))
    m = 400
    H = Hamiltonian(3, tuple(Term((0, 1), M) for _ in range(m)))
    eps = 0.3
    agree = 0
    for s in range(20):
        w = importance_sample(H, np.full(m, 1 / m), eps, seed=s, constant=150.0, verify=False)
        ratio = w.total / m
        scalar = abs(ratio - 1) <= eps
        agree += scalar == verify_sparsifier(H, w, eps).passed
        assert w.support < m
    assert agree == 20


def test_importance_generic_seed6():
    H = generic_instance(6, n=8, m=96)
    cert = lambda_min_certificate(H, pair_matching(H))
    p = np.minimum(1, np.array([linalg.lambda_max(t.predicate) for t in H.terms]) / cert.lower)
    w = importance_sample(H, p, 0.4, seed=6)
    assert verify_sparsifier(H, w, 0.4).passed


def test_importance_budget():
    nus = np.random.default_rng(0).uniform(0.5, 1.5, size=50)
    H = Hamiltonian(2, tuple(Term((0, 1), np.eye(4), nu) for nu in nus))
    with pytest.raises(RuntimeError):
        importance_sample(H, np.full(50, 1 / 50), 0.01, constant=2.0, retry_budget=2)


def test_sparsify_generic_small_identity():
    H = generic_instance(0, n=5, m=20)
    assert dict(sparsify_generic(H, 0.3)) == dict(SparsifierWeights.identity(H))


def test_sparsify_generic_seed12():
    H = generic_instance(12)
    diag = {}
    w = sparsify_generic(H, 0.35, seed=12, diagnostics=diag)
    assert verify_sparsifier(H, w, 0.35).passed
    assert diag["certificate"] > 0


def test_sparsify_generic_full_rank():
    H = generic_instance(3, R=4)
    assert verify_sparsifier(H, sparsify_generic(H, 0.35, seed=3), 0.35).passed


def test_sparsify_generic_rejects_low_rank():
    H = generic_instance(0, n=4, m=20, R=2)
    with pytest.raises(ValueError, match="rank"):
        sparsify_generic(H, 0.3)


def test_sparsify_generic_names_degenerate_pair():
    M = sample_random_psd(RandomPredicateSpec(2, 3, 0))
    H = Hamiltonian(4, tuple(Term((0, 1), M) for _ in range(20)))
    with pytest.raises(ArithmeticError, match="degenerate pair"):
        sparsify_generic(H, 0.3)
