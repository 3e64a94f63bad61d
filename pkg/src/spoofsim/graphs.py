"""Directed communication graphs and strong-robustness checks.

Strong r-robustness with respect to a source set S is the connectivity
condition every convergence guarantee in this package rests on: each
non-empty subset of non-source nodes must contain a node with at least r
in-neighbors outside the subset.  The production checker is a peeling
closure; an exhaustive enumerator with identical verdicts serves as its
test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import chain, combinations

from .errors import EmptySourceSet, EmptySubset, TooLarge, WindowExceedsHorizon


@dataclass(frozen=True)
class DirectedGraph:
    """Nodes 1..n_nodes with directed edges (j, i) meaning j transmits to i."""

    n_nodes: int
    edges: frozenset
    in_neighbors: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        edges = frozenset((int(j), int(i)) for j, i in self.edges)
        for j, i in edges:
            if j == i:
                raise ValueError(f"self-loop on node {j}")
            if not (1 <= j <= self.n_nodes and 1 <= i <= self.n_nodes):
                raise ValueError(f"edge ({j},{i}) references missing node")
        nbrs = {i: set() for i in range(1, self.n_nodes + 1)}
        for j, i in edges:
            nbrs[i].add(j)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "in_neighbors",
                           {i: frozenset(s) for i, s in nbrs.items()})

    @property
    def nodes(self):
        return range(1, self.n_nodes + 1)

    def has_edge(self, j: int, i: int) -> bool:
        return (j, i) in self.edges

    def in_nbrs(self, i: int) -> frozenset:
        return self.in_neighbors[i]


def union_graphs(graphs) -> DirectedGraph:
    graphs = list(graphs)
    n = graphs[0].n_nodes
    if any(g.n_nodes != n for g in graphs):
        raise ValueError("graphs must share the node set")
    return DirectedGraph(n, frozenset().union(*(g.edges for g in graphs)))


def r_reachable(g: DirectedGraph, subset, r: int) -> bool:
    """True iff some node in the subset has >= r in-neighbors outside it."""
    subset = frozenset(subset)
    if not subset:
        raise EmptySubset("r-reachability is defined for non-empty subsets")
    if not subset <= frozenset(g.nodes):
        raise ValueError("subset contains unknown nodes")
    if r < 1:
        raise ValueError("r must be a positive integer")
    return any(len(g.in_nbrs(i) - subset) >= r for i in subset)


@dataclass(frozen=True)
class RobustnessCertificate:
    """Witness for a strong-robustness verdict.

    On success `order` lists the non-source nodes in acceptance order; on
    failure `residual` is a stalled set that is not r-reachable.
    """

    robust: bool
    order: tuple = ()
    residual: frozenset = frozenset()

    def __bool__(self):
        return self.robust


def strongly_robust_peel(g: DirectedGraph, sources, r: int) -> RobustnessCertificate:
    """Closure check for strong r-robustness w.r.t. a source set.

    Grow an accepted set from the sources, repeatedly admitting any node
    with >= r accepted in-neighbors; the graph is strongly r-robust iff
    the closure reaches every node.
    """
    sources = frozenset(sources)
    if not sources:
        raise EmptySourceSet("source set must be non-empty")
    if r < 1:
        raise ValueError("r must be a positive integer")
    accepted = set(sources)
    order = []
    pending = sorted(set(g.nodes) - accepted)
    progress = True
    while progress:
        progress = False
        still = []
        for i in pending:
            if len(g.in_nbrs(i) & accepted) >= r:
                accepted.add(i)
                order.append(i)
                progress = True
            else:
                still.append(i)
        pending = still
    if pending:
        return RobustnessCertificate(False, tuple(order), frozenset(pending))
    return RobustnessCertificate(True, tuple(order))


def strongly_robust_bruteforce(g: DirectedGraph, sources, r: int,
                               max_free: int = 20) -> bool:
    """Literal quantifier check over all non-empty subsets of V \\ S.

    Exponential in |V \\ S|; guarded.  Kept as the oracle the peeling
    checker is validated against.
    """
    sources = frozenset(sources)
    if not sources:
        raise EmptySourceSet("source set must be non-empty")
    free = sorted(set(g.nodes) - sources)
    if len(free) > max_free:
        raise TooLarge(f"{len(free)} non-source nodes exceeds limit {max_free}")
    for subset in chain.from_iterable(combinations(free, m) for m in range(1, len(free) + 1)):
        if not r_reachable(g, subset, r):
            return False
    return True


def max_strong_robustness(g: DirectedGraph, sources) -> int:
    """Largest r such that the graph is strongly r-robust w.r.t. sources;
    0 if it is not even 1-robust."""
    sources = frozenset(sources)
    if not sources:
        raise EmptySourceSet("source set must be non-empty")
    if sources >= frozenset(g.nodes):
        # no non-source node exists: vacuously robust at any r; report the
        # trivial ceiling (max in-degree) to keep the value finite
        return max((len(g.in_nbrs(i)) for i in g.nodes), default=0)
    upper = max(len(g.in_nbrs(i)) for i in set(g.nodes) - sources)
    for r in range(upper, 0, -1):
        if strongly_robust_peel(g, sources, r).robust:
            return r
    return 0


@dataclass(frozen=True)
class TimeVaryingGraph:
    """Switching sequence of graphs: (start_step, graph), sorted, covering
    steps from 0 onward; the last interval extends to the horizon."""

    intervals: tuple   # ((start_step, DirectedGraph), ...)

    def __post_init__(self):
        iv = tuple(sorted(((int(s), g) for s, g in self.intervals), key=lambda p: p[0]))
        if not iv:
            raise ValueError("need at least one interval")
        if iv[0][0] != 0:
            raise ValueError("first interval must start at step 0")
        starts = [s for s, _ in iv]
        if len(set(starts)) != len(starts):
            raise ValueError("interval starts must be distinct")
        n = iv[0][1].n_nodes
        if any(g.n_nodes != n for _, g in iv):
            raise ValueError("all graphs must share the node set")
        object.__setattr__(self, "intervals", iv)

    @property
    def n_nodes(self):
        return self.intervals[0][1].n_nodes

    def graph_at(self, step: int) -> DirectedGraph:
        current = self.intervals[0][1]
        for start, g in self.intervals:
            if start <= step:
                current = g
            else:
                break
        return current

    def window_union(self, step: int, mu_bar: int) -> DirectedGraph:
        return union_graphs(self.graph_at(k) for k in range(max(0, step - mu_bar), step + 1))


@dataclass(frozen=True)
class JointRobustnessReport:
    robust: bool
    first_failing_step: int = None
    window_within_update_bound: bool = None   # mu_bar <= k_bar when k_bar given


def jointly_strongly_robust(tv: TimeVaryingGraph, sources, r: int, mu_bar: int,
                            horizon: int, k_bar: int = None) -> JointRobustnessReport:
    """Windowed-union robustness for switching topologies: every length
    (mu_bar+1) trailing window union must be strongly r-robust w.r.t. S."""
    if mu_bar < 0:
        raise ValueError("mu_bar must be non-negative")
    if horizon < mu_bar:
        raise WindowExceedsHorizon(f"window {mu_bar} exceeds horizon {horizon}")
    within = None if k_bar is None else (mu_bar <= k_bar)
    for k in range(mu_bar, horizon + 1):
        if not strongly_robust_peel(tv.window_union(k, mu_bar), sources, r).robust:
            return JointRobustnessReport(False, first_failing_step=k,
                                         window_within_update_bound=within)
    return JointRobustnessReport(True, window_within_update_bound=within)
