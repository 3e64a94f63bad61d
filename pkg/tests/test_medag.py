"""Parent-discovery state machine, layering, verification, motifs."""

import pytest

from spoofsim.errors import CycleDetected, InsufficientParents
from spoofsim.graphs import DirectedGraph
from spoofsim.medag import (MedagNodeState, assign_layers, enumerate_motifs,
                            kbar_bound, medag_node_step, medag_threshold,
                            verify_srmedag)


def test_threshold():
    assert medag_threshold(1, 1) == 5
    assert medag_threshold(0, 3) == 1
    assert medag_threshold(2, 0) == 5


def test_follower_flips_at_threshold():
    state = MedagNodeState(node=9, mode=1, is_source=False)
    view = {i: True for i in (1, 2, 3, 4)}
    assert not medag_node_step(state, view, step=3, threshold=5)
    assert state.counter == 0 and state.parents is None
    view[14] = True
    assert medag_node_step(state, view, step=4, threshold=5)
    assert state.counter == 1
    assert state.parents == frozenset({1, 2, 3, 4, 14})
    assert state.activation_step == 4
    # already active: no further transitions, parents frozen
    view[7] = True
    assert not medag_node_step(state, view, step=5, threshold=5)
    assert state.parents == frozenset({1, 2, 3, 4, 14})


def test_false_flags_do_not_count():
    state = MedagNodeState(node=9, mode=1, is_source=False)
    view = {1: False, 2: True, 3: True, 4: True, 14: True}
    assert not medag_node_step(state, view, step=2, threshold=5)
    assert state.counter == 0


def test_source_flips_immediately():
    state = MedagNodeState(node=1, mode=1, is_source=True)
    assert medag_node_step(state, {}, step=0, threshold=5)
    assert state.counter == 1 and state.parents == frozenset()


def test_counter_transitions_once():
    state = MedagNodeState(node=1, mode=1, is_source=True)
    state.flip(0, ())
    with pytest.raises(RuntimeError):
        state.flip(1, ())


def test_kbar_bound_examples():
    assert kbar_bound(2, 2, 3, 1) == 12
    assert kbar_bound(1, 3, 2, 5) == 6      # tau_bar <= k_bar clamps eta at 0
    assert kbar_bound(1, 2, 6, 1) == 13     # eta = 2


def test_assign_layers_sample_structure():
    sources = {1, 2, 3, 4}
    regular = set(range(1, 14))
    parent_sets = {i: frozenset({1, 2, 3, 4, 14}) for i in (9, 10, 11, 12, 13)}
    parent_sets.update({i: frozenset({9, 10, 11, 12, 13}) for i in (5, 6, 7, 8)})
    out = assign_layers(parent_sets, sources, regular)
    assert out.layers[0] == (1, 2, 3, 4)
    assert out.layers[1] == (9, 10, 11, 12, 13)
    assert out.layers[2] == (5, 6, 7, 8)
    assert out.l_bar == 2


def test_assign_layers_degenerate():
    out = assign_layers({}, {1, 2}, {1, 2})
    assert out.l_bar == 0
    chain = assign_layers({2: {1}, 3: {2}}, {1}, {1, 2, 3})
    assert chain.layer_of == {1: 0, 2: 1, 3: 2}
    # longest path wins when a node hangs off two layers
    mixed = assign_layers({2: {1}, 3: {1, 2}}, {1}, {1, 2, 3})
    assert mixed.layer_of[3] == 2


def test_assign_layers_cycle():
    with pytest.raises(CycleDetected):
        assign_layers({2: {1, 3}, 3: {2}}, {1}, {1, 2, 3})


def fig_graph():
    edges = set()
    for a in (1, 2, 3, 4):
        for b in (9, 10, 11, 12, 13):
            edges.add((a, b))
            edges.add((b, a))
    for a in (5, 6, 7, 8):
        for b in (9, 10, 11, 12, 13):
            edges.add((a, b))
            edges.add((b, a))
    for b in (9, 10, 11, 12, 13):
        edges.add((14, b))
    return DirectedGraph(14, frozenset(edges))


def test_verify_srmedag_clean():
    parent_sets = {i: frozenset({1, 2, 3, 4, 14}) for i in (9, 10, 11, 12, 13)}
    parent_sets.update({i: frozenset({9, 10, 11, 12, 13}) for i in (5, 6, 7, 8)})
    parent_sets.update({i: frozenset() for i in (1, 2, 3, 4)})
    report = verify_srmedag(fig_graph(), parent_sets, {1, 2, 3, 4},
                            set(range(1, 14)), f=1, beta=1, mode=1,
                            termination_step=4)
    assert report.ok
    assert report.l_bar == 2
    assert report.violations == []


def test_verify_srmedag_threshold_violation():
    parent_sets = {i: frozenset({1, 2, 3, 14}) for i in (9, 10, 11, 12, 13)}
    parent_sets.update({i: frozenset({9, 10, 11, 12, 13}) for i in (5, 6, 7, 8)})
    report = verify_srmedag(fig_graph(), parent_sets, {1, 2, 3, 4},
                            set(range(1, 14)), f=1, beta=1)
    assert any("threshold" in v for v in report.violations)


def test_verify_srmedag_cycle_violation():
    parent_sets = {2: frozenset({1, 3}), 3: frozenset({2})}
    report = verify_srmedag(None, parent_sets, {1}, {1, 2, 3}, f=0, beta=0)
    assert any("acyclicity" in v for v in report.violations)


def test_verify_srmedag_nontermination():
    report = verify_srmedag(None, {2: None}, {1}, {1, 2}, f=0, beta=0)
    assert not report.terminated
    assert any("never" in v for v in report.violations)


def test_enumerate_motifs_spec_example():
    # five parents, one spoofer and one impersonated node among them
    parents = {2, 3, 4, 5, 14}
    motifs = enumerate_motifs(9, parents, regular=set(range(1, 14)),
                              impersonated={2}, adversaries={14}, f=1, beta=1)
    assert len(motifs) == 2
    assert len({m.common for m in motifs}) == 1
    suspects = {m.suspect for m in motifs}
    assert suspects == {2, 14}
    independents = [m.independent for m in motifs]
    assert len(set(independents)) == len(independents)
    common = motifs[0].common
    assert common not in suspects and common not in independents


def test_enumerate_motifs_padding_and_edges():
    # clean neighborhood: suspects are padded hypothetically
    motifs = enumerate_motifs(9, {1, 2, 3, 4, 5}, regular=set(range(1, 14)),
                              impersonated=set(), adversaries=set(), f=1, beta=1)
    assert len(motifs) == 2
    assert all(m.suspect_hypothetical for m in motifs)
    # f = 0: no suspects required, no motifs produced
    assert enumerate_motifs(9, {1}, regular={1, 9}, impersonated=set(),
                            adversaries=set(), f=0, beta=0) == []
    with pytest.raises(InsufficientParents):
        enumerate_motifs(9, {1, 2, 3, 4}, regular=set(range(1, 14)),
                         impersonated=set(), adversaries=set(), f=1, beta=1)
