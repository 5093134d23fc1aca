"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import itertools
import math
import time

import numpy as np
import pytest

from hamsparse import linalg
from hamsparse.generic import genericity_check, lambda_min_certificate, pair_matching, sample_random_psd, sparsify_generic
from hamsparse.instances import InstanceSpec, generate_instance
from hamsparse.maxcsp import (
    WeightedGraph,
    batch_inclusion,
    maxcut_hamiltonian,
    maxcut_sparsify,
    opt_energy,
    sparsify_shifted,
    stream_inclusion,
    transfer_check,
)
from hamsparse.model import Hamiltonian, SparsifierWeights, Term, assemble, classical_crosscheck, verify_sparsifier
from hamsparse.nrd import (
    Relation,
    automorphism_growth_audit,
    bipartite_cycle_edges,
    bipartite_cycle_redundant_check,
    derived_automorphism_check,
    is_non_redundant,
    project_relation,
    projection_hit_rate,
    projection_summary_bound,
    tensor_witness_instance,
)
from hamsparse.nullity1 import (
    extract_dominating_cover,
    ground_dim_audit,
    lemma_audit,
    local_gap_constant,
    max_depth,
    sparsify_nullity1,
)
from hamsparse.partition import peel_partition
from hamsparse.pauli import sparsify_pauli

Z = np.diag([1.0, -1.0])
MC = (np.eye(4) - np.kron(Z, Z)) / 2


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail=""):
        with capsys.disabled():
            print(f"\ncriterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, f"criterion {k} failed: {detail}"

    return emit


def test_criterion_1_pauli_end_to_end(report):
    t0 = time.perf_counter()
    failures, sparse_runs, supports = [], 0, []
    for s in range(20):
        H = generate_instance(InstanceSpec("pauli", 8, 120, seed=s, weights="random"))
        w = sparsify_pauli(H, 0.25, seed=s)
        rep = verify_sparsifier(H, w, 0.25, mode="dense")
        nu = H.weights.sum()
        if not rep.passed or min(rep.lambda_min_slack, rep.lambda_max_slack) < -1e-8:
            failures.append((s, "slack"))
        if abs(w.total - nu) > 1e-9 * nu:
            failures.append((s, "total weight"))
        supports.append(w.support)
        sparse_runs += w.support < H.m
    elapsed = time.perf_counter() - t0
    ok = not failures and sparse_runs >= 18 and elapsed <= 60
    report(1, ok, f"sparse on {sparse_runs}/20, supports {min(supports)}..{max(supports)} of 120, {elapsed:.1f}s, failures {failures}")


def _brute_classical(H, w, eps):
    # All assignments at once; each term reads its diagonal at the tuple's bits.
    x = np.arange(2**H.n)
    bits = (x[:, None] >> (H.n - 1 - np.arange(H.n))) & 1
    vals_a = np.zeros(2**H.n)
    vals_b = np.zeros(2**H.n)
    for i, t in enumerate(H.terms):
        idx = bits[:, list(t.tuple)] @ (1 << np.arange(t.arity)[::-1])
        v = np.diag(t.predicate).real[idx]
        vals_a += t.weight * v
        vals_b += w.get(i, 0.0) * v
    scale = max(1.0, (1 + eps) * vals_a.max(), vals_b.max())
    return bool(np.min(vals_b - (1 - eps) * vals_a) >= -1e-8 * scale and np.min((1 + eps) * vals_a - vals_b) >= -1e-8 * scale)


def test_criterion_2_classical_equivalence(report):
    eps = 0.2
    cases, mismatches, verdicts = 0, [], set()
    for s in range(20):
        rel = ("11",) if s % 2 else ("01", "10")
        H = generate_instance(InstanceSpec("classical", 8, 40, seed=s, relation=rel, weights="random"))
        nu = {i: t.weight for i, t in enumerate(H.terms)}
        gen = np.random.default_rng(s)
        drop = dict(nu)
        drop.pop(int(gen.integers(H.m)))
        candidates = {
            "valid": SparsifierWeights(nu),
            "inside": SparsifierWeights({i: v * (1 + 0.9 * eps) for i, v in nu.items()}),
            "over": SparsifierWeights({i: v * (1 + 1.1 * eps) for i, v in nu.items()}),
            "under": SparsifierWeights({i: v * (1 - 1.1 * eps) for i, v in nu.items()}),
            "dropped": SparsifierWeights(drop),
            "spike": SparsifierWeights({**nu, 0: nu[0] * 50}),
        }
        for name, w in candidates.items():
            q = verify_sparsifier(H, w, eps, mode="dense").passed
            c = _brute_classical(H, w, eps)
            lib = classical_crosscheck(H, w, eps)
            cases += 1
            verdicts.add(q)
            if not q == c == lib:
                mismatches.append((s, name, q, c, lib))
    ok = not mismatches and verdicts == {True, False}
    report(2, ok, f"{cases} weight vectors on 20 instances, mismatches {mismatches}")


def _bound(n, r):
    return math.ceil(math.log(2 * n**r) / -math.log(1 - r ** (-r)))


def test_criterion_3_partition(report):
    bad = []
    for s in range(50):
        gen = np.random.default_rng(s)
        r = 2 + s % 2
        pool = list(itertools.combinations(range(12), r))
        m = int(gen.integers(10, len(pool) + 1))
        edges = [tuple(int(q) for q in gen.permutation(pool[j])) for j in gen.choice(len(pool), m, replace=False)]
        deco = peel_partition(edges, r, 12)
        if len(deco.pieces[0].indices) * r**r < m:
            bad.append((s, "first piece"))
        for tr in deco.traces:
            if any(b < a for a, b in zip(tr.potentials, tr.potentials[1:])):
                bad.append((s, "potential"))
        if len(deco) > _bound(12, r):
            bad.append((s, "piece count"))
        if sorted(i for p in deco.pieces for i in p.indices) != list(range(m)):
            bad.append((s, "exhaustive"))
    report(3, not bad, f"50 hypergraphs on n=12, piece bounds r=2: {_bound(12, 2)}, r=3: {_bound(12, 3)}, violations {bad}")


def test_criterion_4_genericity(report):
    trivial = {2: 0, 3: 0}
    short = []
    for r in (2, 3):
        R = 2 ** (r - 1) + 1
        for s in range(100):
            gen = np.random.default_rng(1000 * r + s)
            n = 2 * r
            T = tuple(int(q) for q in gen.choice(n, r, replace=False))
            shared = int(gen.integers(1, r + 1))
            rest = [q for q in range(n) if q not in T]
            T2 = tuple(gen.permutation(list(gen.choice(T, shared, replace=False)) + list(gen.choice(rest, r - shared, replace=False))).tolist())
            M, M2 = sample_random_psd(r=r, R=R, rng=gen), sample_random_psd(r=r, R=R, rng=gen)
            trivial[r] += genericity_check(M, M2, T, T2)
        for s in range(20):
            n = 6 + s % 3
            m = 4 * n + 5 * s
            H = generate_instance(InstanceSpec("generic", n, m, seed=s, r=r))
            pairs = len(pair_matching(H).pairs)
            if 4 * pairs < m:
                short.append((r, s, pairs, m))
    ok = trivial == {2: 100, 3: 100} and not short
    report(4, ok, f"trivial joint kernels r=2: {trivial[2]}/100, r=3: {trivial[3]}/100, short matchings {short}")


def test_criterion_5_generic(report):
    bad = []
    gap = math.inf
    for s in range(20):
        H = generate_instance(InstanceSpec("generic", 8, 120, seed=s, r=2, R=3))
        diag = {}
        w = sparsify_generic(H, 0.35, seed=s, diagnostics=diag)
        if not verify_sparsifier(H, w, 0.35, mode="dense").passed:
            bad.append((s, "verify"))
        lam = linalg.lambda_min(assemble(H))
        if diag["certificate"] > lam + 1e-8:
            bad.append((s, "total certificate"))
        gap = min(gap, lam - diag["certificate"])
        # Recompute each piece's certificate and compare with the piece's own spectrum.
        for piece in peel_partition(H.tuples, None, H.n).pieces:
            sub = H.subset(piece.indices)
            cert = lambda_min_certificate(sub, pair_matching(sub))
            if cert.lower > linalg.lambda_min(assemble(sub)) + 1e-8:
                bad.append((s, "piece certificate"))
    report(5, not bad, f"20 runs, smallest lambda_min - certificate {gap:.3g}, failures {bad}")


def test_criterion_6_nullity1(report):
    bad = []
    for s in range(100):
        gen = np.random.default_rng(s)
        n = 3 + s % 6
        tuples = [(q, q + 1) for q in range(n - 1)] + [tuple(int(q) for q in gen.choice(n, 2, replace=False)) for _ in range(int(gen.integers(0, 2 * n)))]
        H = Hamiltonian(n, tuple(Term(T, sample_random_psd(r=2, R=3, rng=gen)) for T in tuples))
        d = ground_dim_audit(H)
        if d is None or d > 1:
            bad.append((s, "ground dim", d))
    covers = 0
    depths = []
    for s in range(10):
        H = generate_instance(InstanceSpec("nullity1", 6, 40, seed=s))
        residual = list(range(H.m))
        while residual:
            cov = extract_dominating_cover(H, residual)
            if not cov.members:
                break
            est = local_gap_constant(H, cov, residual)
            covers += 1
            if not lemma_audit(H, cov, est, residual):
                bad.append((s, "lemma", cov.members))
            residual = [i for i in residual if i not in set(cov.members)]
        for kw in ({}, {"cover_count": 4, "base_threshold": 20}):
            diag = {}
            w = sparsify_nullity1(H, 0.4, seed=s, diagnostics=diag, **kw)
            depths.append(diag["depth"])
            if not verify_sparsifier(H, w, 0.4, mode="dense").passed:
                bad.append((s, "verify", kw))
            if diag["depth"] > max_depth(6, 2):
                bad.append((s, "depth", diag["depth"]))
    report(6, not bad, f"100 ground-space audits, {covers} covers audited, depths {min(depths)}..{max(depths)} (cap {max_depth(6, 2):.1f}), failures {bad}")


def _graph(n, p, seed):
    gen = np.random.default_rng(seed)
    edges = [(u, v, float(gen.uniform(0.5, 1.5))) for u, v in itertools.combinations(range(n), 2) if gen.random() < p]
    return WeightedGraph(n, tuple(edges))


def test_criterion_7_maxcut(report):
    bad = []
    for s in range(20):
        G = _graph(4 + s % 7, 0.6, s)
        H = maxcut_hamiltonian(G)
        if G.m and opt_energy(H) * 16 < H.weights.sum() - 1e-9:
            bad.append((s, "opt"))
    tested = 0
    for s in range(20):
        G = _graph(6 + s % 5, 0.7, 100 + s)
        H = maxcut_hamiltonian(G)
        Gt = maxcut_sparsify(G, 0.3, seed=s)
        idx = {(u, v): i for i, (u, v, _) in enumerate(G.edges)}
        w = SparsifierWeights({idx[(u, v)]: x for u, v, x in Gt.edges})
        cert = transfer_check(H, w, 0.3, seed=s)
        tested += cert.tested_states
        if not cert.holds:
            bad.append((s, "transfer"))
    # Multigraphs large enough that edges are really dropped.
    dropped = []
    for s in range(2):
        gen = np.random.default_rng(200 + s)
        H = maxcut_hamiltonian(WeightedGraph(6, tuple((int(a), int(b), 1.0) for a, b in (gen.choice(6, 2, replace=False) for _ in range(3000)))))
        res = sparsify_shifted(H, 0.3, seed=s, eps_inner=0.99)
        dropped.append(H.m - res.weights.support)
        if not transfer_check(H, res.weights, 0.3, seed=s).holds:
            bad.append((s, "sampled transfer"))
    gen = np.random.default_rng(7)
    G = WeightedGraph(4, tuple((int(a), int(b), float(gen.uniform(0.5, 1.5))) for a, b in (gen.choice(4, 2, replace=False) for _ in range(4000))))
    e1, T = 1.0 - 1e-9, 500
    fb = np.mean([batch_inclusion(G, e1, s) for s in range(T)], axis=0)
    fs = np.mean([stream_inclusion(G, e1, 50_000 + s) for s in range(T)], axis=0)
    wts = np.array([e[2] for e in G.edges])
    q = np.minimum(1, 3 * wts / wts.sum() * 400 / e1**2)
    sigma = np.sqrt(2 * q * (1 - q) / T)
    z = (fb - fs) / np.where(sigma > 0, sigma, 1)
    within = float(np.mean(np.abs(z) <= 3))
    pooled = float(z.sum() / math.sqrt(len(z)))
    if within < 0.99 or abs(pooled) > 3:
        bad.append(("stream", within, pooled))
    report(7, not bad, f"{tested} transfer states tested, sampled runs dropped {dropped} edges, stream/batch within 3 sigma {within:.4f}, pooled z {pooled:.2f}, failures {bad}")


def test_criterion_8_nrd(report):
    bad = []
    gen = np.random.default_rng(0)
    F = []
    for _ in range(2):
        v = gen.normal(size=2) + 1j * gen.normal(size=2)
        F.append(np.outer(v, v.conj()))
    H, _ = tensor_witness_instance(F, [[0, 1, 2], [3, 4, 5]])
    if not (H.m == 9 and is_non_redundant(H).non_redundant):
        bad.append("tensor")
    cyc = Hamiltonian(4, tuple(Term(e, MC) for e in bipartite_cycle_edges([0, 1], [2, 3])))
    if not bipartite_cycle_redundant_check(cyc) or is_non_redundant(cyc).non_redundant:
        bad.append("cycle")
    derived = 0
    for s in range(50):
        M = sample_random_psd(r=3, R=3, rng=np.random.default_rng(s))
        chk = derived_automorphism_check(Hamiltonian(5, (Term((0, 1, 2), M), Term((0, 3, 4), M))), mode="generic")
        derived += bool(chk.holds) and not chk.vacuous
    if derived != 50:
        bad.append(("derived", derived))
    steps = 0
    for s in range(6):
        M = sample_random_psd(r=3, R=3, rng=np.random.default_rng(s))
        audit = automorphism_growth_audit(M, [[0, 1, 2], [3, 4, 5], [6, 7]], seed=s)
        steps += len(audit.steps)
        if not audit.non_redundant or any(st.order_after < 2 * st.order_before for st in audit.steps):
            bad.append(("growth", s))
    if steps == 0:
        bad.append("growth audit saw no accepted constraints")
    report(8, not bad, f"tensor 9 terms, derived checks {derived}/50, growth steps {steps}, failures {bad}")


def test_criterion_9_projection(report):
    R = Relation.from_strings(3, ["001", "101", "111"])
    exact = project_relation(R, ["x0", "x1", "1"]).strings() == ["00", "10", "11"]
    exact &= project_relation(R, ["x0", "~x0", "x1"]).strings() == ["11"]
    k, T = 2**5 + 1, 500
    rates = {c: projection_hit_rate(6, k, c, T, seed=0) for c in range(4)}
    c0 = math.ceil(math.log2(6) - 3)
    summary = projection_summary_bound(6)
    lows = []
    for c, hr in rates.items():
        b = max(0.0, 1 - hr.failure_bound)
        if hr.rate < b - 3 * math.sqrt(max(b * (1 - b), 1 / T) / T):
            lows.append(c)
    summary_ok = rates[c0].rate >= summary - 3 * math.sqrt(summary * (1 - summary) / T)
    table = ", ".join(f"c={c}: {hr.rate:.3f} (bound {max(0.0, 1 - hr.failure_bound):.3f})" for c, hr in rates.items())
    report(9, exact and not lows and summary_ok, f"examples exact: {exact}; r=6, |R|={k}: {table}; summary bound {summary:.4f}")
