"""Per-mode trusted-parent discovery and its post-hoc verification.

Before estimating an undetectable mode, each follower waits until the
mode's presence flag has been relayed by 2*(beta+1)*f + 1 distinct
neighbor identities, then freezes those identities as its parent set.
Sources raise their counters on their own.  The frozen parent sets, one
DAG per mode, are what the trimming update later draws values from.

Verification is a simulator-side diagnostic: it re-derives the layer
structure from ground truth and flags any departure from the expected
parent-count, acyclicity, and layering properties.  Motif enumeration
certifies that around every follower there are enough disjoint
(independent parent, common parent, suspect) triples to sandwich any
adversarial value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import CycleDetected, InsufficientParents

# The flag is an arbitrary preset constant, equality-checked and never parsed.
FLAG_TRUE = 1.0


def medag_threshold(f: int, beta: int) -> int:
    """Distinct flag senders a follower needs before accepting parents."""
    return 2 * (beta + 1) * f + 1


@dataclass
class MedagNodeState:
    """Counter and frozen parent set of one node for one mode."""

    node: int
    mode: int
    is_source: bool
    counter: int = 0
    parents: frozenset = None      # frozen at activation; None before
    activation_step: int = None

    @property
    def active(self) -> bool:
        return self.counter == 1

    def flip(self, step: int, parents) -> None:
        if self.counter == 1:
            raise RuntimeError("counter may transition 0 -> 1 only once")
        self.counter = 1
        self.parents = frozenset(parents)
        self.activation_step = step


def medag_node_step(state: MedagNodeState, flag_view: dict, step: int,
                    threshold: int) -> bool:
    """Advance one node's counter from its current mailbox flag view.

    flag_view maps claimed sender identity -> whether its latest flag
    packet for this mode carries the true flag value.  Sources activate
    unconditionally; followers activate once the count of true-flag
    identities reaches the threshold, freezing exactly those identities.
    Returns True when the counter flipped this step.
    """
    if state.active:
        return False
    if state.is_source:
        state.flip(step, frozenset())
        return True
    senders = frozenset(ident for ident, ok in flag_view.items() if ok)
    if len(senders) >= threshold:
        state.flip(step, senders)
        return True
    return False


def kbar_bound(l_bar: int, k_bar: int, tau_bar: int, beta: int) -> int:
    """Worst-case construction time for one mode's parent discovery.

    eta is the extra per-parent suppression budget a spoofer gains when
    link delays exceed the update bound; it clamps at zero otherwise.
    """
    if l_bar < 0 or k_bar < 1 or tau_bar < 0 or beta < 0:
        raise ValueError("arguments out of range")
    eta = beta * max(0, (tau_bar - k_bar) // k_bar)
    return l_bar * ((eta + 1) * k_bar + tau_bar + 1)


@dataclass(frozen=True)
class LayerAssignment:
    layers: dict          # layer index m -> tuple of node ids
    layer_of: dict        # node id -> layer index
    l_bar: int            # longest path length (max layer index)


def assign_layers(parent_sets: dict, sources, regular) -> LayerAssignment:
    """Longest-path layering of the regular nodes over frozen parent sets.

    Layer 0 holds the regular sources; every other regular node sits at
    1 + max layer of its regular parents.  Raises CycleDetected when the
    regular-parent subgraph is cyclic, ValueError when some regular node
    has no parent set or no regular parent to hang from.
    """
    regular = frozenset(regular)
    sources = frozenset(sources) & regular
    layer_of = {i: 0 for i in sources}
    followers = sorted(regular - sources)
    reg_parents = {}
    for i in followers:
        ps = parent_sets.get(i)
        if ps is None:
            raise ValueError(f"node {i} has no frozen parent set")
        reg_parents[i] = frozenset(ps) & regular
        if not reg_parents[i]:
            raise ValueError(f"node {i} has no regular parents")

    remaining = set(followers)
    while remaining:
        placed_any = False
        for i in sorted(remaining):
            deps = reg_parents[i]
            if deps <= layer_of.keys():
                layer_of[i] = 1 + max(layer_of[p] for p in deps)
                remaining.discard(i)
                placed_any = True
        if not placed_any:
            raise CycleDetected(f"regular-parent subgraph stalls on {sorted(remaining)}")

    layers = {}
    for i, m in layer_of.items():
        layers.setdefault(m, []).append(i)
    layers = {m: tuple(sorted(v)) for m, v in sorted(layers.items())}
    l_bar = max(layers) if layers else 0
    return LayerAssignment(layers=layers, layer_of=layer_of, l_bar=l_bar)


@dataclass
class MedagReport:
    """Verification outcome for one mode's construction."""

    mode: int
    terminated: bool
    termination_step: int = None
    layers: dict = field(default_factory=dict)
    l_bar: int = None
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.terminated and not self.violations


def verify_srmedag(graph, parent_sets: dict, sources, regular, f: int, beta: int,
                   mode: int = 0, termination_step: int = None) -> MedagReport:
    """Check the frozen parent sets against the required DAG properties.

    Property 1: every regular follower froze at least 2(beta+1)f+1 parent
    identities, all drawn from its in-neighborhood.  Property 2: the
    regular-parent subgraph is acyclic and every regular parent of a
    layer-m node lies in a strictly earlier layer.  Violations are data,
    not exceptions.
    """
    regular = frozenset(regular)
    sources = frozenset(sources)
    threshold = medag_threshold(f, beta)
    report = MedagReport(mode=mode, terminated=True, termination_step=termination_step)

    followers = sorted(regular - sources)
    for i in followers:
        ps = parent_sets.get(i)
        if ps is None:
            report.terminated = False
            report.violations.append(f"node {i}: counter never reached 1")
            continue
        if len(ps) < threshold:
            report.violations.append(
                f"node {i}: |parents| = {len(ps)} < threshold {threshold}")
        if graph is not None:
            stray = frozenset(ps) - graph.in_nbrs(i)
            if stray:
                report.violations.append(
                    f"node {i}: parents {sorted(stray)} are not in-neighbors")
    if not report.terminated:
        return report

    try:
        assignment = assign_layers(parent_sets, sources, regular)
    except CycleDetected as exc:
        report.violations.append(f"acyclicity: {exc}")
        return report
    except ValueError as exc:
        report.violations.append(f"layering: {exc}")
        return report

    report.layers = assignment.layers
    report.l_bar = assignment.l_bar
    for i in followers:
        m = assignment.layer_of[i]
        for p in frozenset(parent_sets[i]) & regular:
            if assignment.layer_of[p] >= m:
                report.violations.append(
                    f"node {i} (layer {m}): regular parent {p} in layer "
                    f"{assignment.layer_of[p]}")
    return report


@dataclass(frozen=True)
class Motif:
    """Four-node sandwich pattern around a follower: one suspect, one
    independent parent, and the parent common to all motifs of the node."""

    center: int
    mode: int
    independent: int
    common: int
    suspect: int
    suspect_hypothetical: bool = False   # padded worst-case suspect, not observed


def enumerate_motifs(center: int, parents, regular, impersonated, adversaries,
                     f: int, beta: int, mode: int = 0) -> list:
    """Partition a follower's parents into motifs (simulator-side diagnostic).

    Suspects are the adversarial identities among the parents: spoofers
    plus impersonated regular parents.  The suspect list is padded with
    hypothetical victims up to (beta+1)f because any regular parent could
    still be impersonated in the future; each suspect is paired with a
    distinct clean independent parent and they all share one common node.
    """
    parents = frozenset(parents)
    threshold = medag_threshold(f, beta)
    if len(parents) < threshold:
        raise InsufficientParents(
            f"node {center}: {len(parents)} parents < {threshold}")
    budget = (beta + 1) * f
    regular = frozenset(regular)
    observed = sorted(parents & (frozenset(adversaries) | frozenset(impersonated)))
    if len(observed) > budget:
        raise InsufficientParents(
            f"node {center}: {len(observed)} suspects exceed budget {budget}")

    clean = sorted((parents & regular) - frozenset(observed) - frozenset(impersonated))
    suspects = [(h, False) for h in observed]
    n_pad = budget - len(suspects)
    if n_pad > 0:
        # pad with hypothetical victims from the high end, keep low ids clean
        suspects += [(h, True) for h in clean[len(clean) - n_pad:]]
        clean = clean[:len(clean) - n_pad]
    if len(suspects) < budget or len(clean) < budget + 1:
        raise InsufficientParents(
            f"node {center}: cannot form {budget} motifs from {sorted(parents)}")

    common = clean[0]
    independents = clean[1:budget + 1]
    return [Motif(center=center, mode=mode, independent=p, common=common,
                  suspect=h, suspect_hypothetical=hyp)
            for (h, hyp), p in zip(suspects, independents)]
