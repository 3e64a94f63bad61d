"""Graph robustness: reachability, peel vs. brute force, joint robustness."""

from random import Random

import pytest

from gen import random_digraph
from spoofsim.errors import (EmptySourceSet, EmptySubset, TooLarge,
                             WindowExceedsHorizon)
from spoofsim.graphs import (DirectedGraph, TimeVaryingGraph, jointly_strongly_robust,
                             max_strong_robustness, r_reachable,
                             strongly_robust_bruteforce, strongly_robust_peel,
                             union_graphs)

R1 = (1, 2, 3, 4)
R2 = (5, 6, 7, 8)
R3 = (9, 10, 11, 12, 13)
SPOOFER = 14


def sample_graph() -> DirectedGraph:
    edges = set()
    for a in R1 + R2:
        for b in R3:
            edges.add((a, b))
            edges.add((b, a))
        edges.add((a, SPOOFER))
    for b in R3:
        edges.add((SPOOFER, b))
    return DirectedGraph(14, frozenset(edges))


def complete_digraph(n) -> DirectedGraph:
    return DirectedGraph(n, frozenset((j, i) for j in range(1, n + 1)
                                      for i in range(1, n + 1) if i != j))


SOURCES_1 = frozenset(R1) | {SPOOFER}
SOURCES_2 = frozenset(R2) | {SPOOFER}


def test_r_reachable_sample_cases():
    g = sample_graph()
    # a single group-2 node has exactly the 5 group-3 nodes as in-neighbors
    assert r_reachable(g, {5}, 5)
    assert not r_reachable(g, {5}, 6)
    k4 = complete_digraph(4)
    assert not r_reachable(k4, {2, 3, 4}, 2)
    assert r_reachable(k4, {2, 3, 4}, 1)
    assert r_reachable(g, {9}, len(g.in_nbrs(9)))


def test_r_reachable_rejects_empty_subset():
    with pytest.raises(EmptySubset):
        r_reachable(sample_graph(), set(), 1)


def test_peel_sample_network():
    g = sample_graph()
    assert strongly_robust_peel(g, SOURCES_1, 5).robust
    cert = strongly_robust_peel(g, SOURCES_1, 6)
    assert not cert.robust
    assert set(R2) <= cert.residual
    assert strongly_robust_peel(complete_digraph(4), {1, 2, 3}, 3).robust


def test_peel_rejects_empty_sources():
    with pytest.raises(EmptySourceSet):
        strongly_robust_peel(sample_graph(), set(), 1)


def test_bruteforce_vacuous_and_isolated():
    g = complete_digraph(4)
    assert strongly_robust_bruteforce(g, {1, 2, 3, 4}, 3)   # no non-empty C exists
    iso = DirectedGraph(3, frozenset({(1, 2), (2, 1)}))
    assert not strongly_robust_bruteforce(iso, {1}, 1)      # node 3 is isolated
    with pytest.raises(TooLarge):
        strongly_robust_bruteforce(complete_digraph(25), {1}, 1)


def test_peel_matches_bruteforce_on_random_graphs():
    rng = Random(2024)
    for trial in range(150):
        n = rng.randint(3, 8)
        g = random_digraph(rng, n, rng.uniform(0.15, 0.8))
        k = rng.randint(1, n - 1)
        sources = frozenset(rng.sample(range(1, n + 1), k))
        for r in range(1, 5):
            assert strongly_robust_peel(g, sources, r).robust == \
                strongly_robust_bruteforce(g, sources, r), (trial, r)


def test_max_strong_robustness_values():
    g = sample_graph()
    assert max_strong_robustness(g, SOURCES_1) == 5
    assert max_strong_robustness(g, SOURCES_2) == 5
    # without counting the claimant the sample network is only 4-robust
    assert max_strong_robustness(g, frozenset(R1)) == 4
    assert max_strong_robustness(complete_digraph(4), {1}) == 1
    edgeless = DirectedGraph(4, frozenset())
    assert max_strong_robustness(edgeless, {1}) == 0


def test_certificate_soundness():
    rng = Random(99)
    for _ in range(80):
        n = rng.randint(3, 8)
        g = random_digraph(rng, n, rng.uniform(0.2, 0.8))
        sources = frozenset(rng.sample(range(1, n + 1), rng.randint(1, n - 1)))
        r = rng.randint(1, 3)
        cert = strongly_robust_peel(g, sources, r)
        if cert.robust:
            accepted = set(sources)
            for i in cert.order:
                assert len(g.in_nbrs(i) & accepted) >= r
                accepted.add(i)
            assert accepted == set(g.nodes)
        else:
            assert not r_reachable(g, cert.residual, r)


def test_monotonicity_properties():
    rng = Random(5)
    for _ in range(40):
        n = rng.randint(4, 8)
        g = random_digraph(rng, n, rng.uniform(0.3, 0.8))
        sources = frozenset(rng.sample(range(1, n + 1), rng.randint(1, n - 2)))
        # monotone in r
        for r in range(2, 5):
            if strongly_robust_peel(g, sources, r).robust:
                assert strongly_robust_peel(g, sources, r - 1).robust
        base = max_strong_robustness(g, sources)
        # adding an edge never decreases robustness
        missing = [(j, i) for j in g.nodes for i in g.nodes
                   if i != j and (j, i) not in g.edges]
        if missing:
            extra = DirectedGraph(n, g.edges | {rng.choice(missing)})
            assert max_strong_robustness(extra, sources) >= base
        # enlarging the source set never decreases robustness
        outside = sorted(set(g.nodes) - sources)
        if len(outside) >= 2:
            bigger = sources | {outside[0]}
            assert max_strong_robustness(g, bigger) >= base


def test_jointly_strongly_robust():
    g = sample_graph()
    # constant sequence reduces to the static verdict
    tv_const = TimeVaryingGraph(((0, g),))
    assert jointly_strongly_robust(tv_const, SOURCES_1, 5, 0, 20).robust
    assert not jointly_strongly_robust(tv_const, SOURCES_1, 6, 0, 20).robust

    # alternate two halves whose union is the sample graph
    edges = sorted(g.edges)
    g_even = DirectedGraph(14, frozenset(edges[::2]))
    g_odd = DirectedGraph(14, frozenset(edges[1::2]))
    intervals = tuple((k, g_even if k % 2 == 0 else g_odd) for k in range(20))
    tv = TimeVaryingGraph(intervals)
    assert union_graphs([g_even, g_odd]).edges == g.edges
    report = jointly_strongly_robust(tv, SOURCES_1, 5, 1, 19, k_bar=2)
    assert report.robust and report.window_within_update_bound

    # mu_bar = 0 on a sparse snapshot reduces to the failing static check
    report0 = jointly_strongly_robust(tv, SOURCES_1, 5, 0, 19)
    assert not report0.robust
    assert report0.first_failing_step is not None

    with pytest.raises(WindowExceedsHorizon):
        jointly_strongly_robust(tv, SOURCES_1, 5, 10, 5)
