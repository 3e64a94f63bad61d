"""Shared generators for randomized tests: strongly robust digraphs and full
run configurations with ledger-legal adversaries.

Graphs are built layered so robustness holds by construction (every node
added after the sources receives at least r in-edges from already-placed
nodes), then re-verified with the peeling checker.  Criterion-scale runs
pin k_bar=2, alpha=1 (hence beta=1), the regime the construction-time
bound is stated for.  Plants are diagonal with an explicit identity
transform so mode indices match construction order.
"""

from random import Random

from spoofsim.config import RunConfig
from spoofsim.graphs import DirectedGraph, strongly_robust_peel


def make_robust_digraph(rng: Random, n: int, r: int, sources):
    """Digraph on 1..n strongly r-robust w.r.t. the given source set."""
    sources = sorted(sources)
    rest = [i for i in range(1, n + 1) if i not in sources]
    rng.shuffle(rest)
    placed = list(sources)
    edges = set()
    for i in rest:
        for j in rng.sample(placed, r):
            edges.add((j, i))
        placed.append(i)
    all_ids = list(range(1, n + 1))
    for _ in range(rng.randint(0, 2 * n)):
        j, i = rng.sample(all_ids, 2)
        edges.add((j, i))
    g = DirectedGraph(n, frozenset(edges))
    assert strongly_robust_peel(g, sources, r).robust
    return g


def random_digraph(rng: Random, n: int, p: float) -> DirectedGraph:
    edges = set()
    for j in range(1, n + 1):
        for i in range(1, n + 1):
            if i != j and rng.random() < p:
                edges.add((j, i))
    return DirectedGraph(n, frozenset(edges))


def _distinct_lams(rng: Random, two_modes: bool):
    lams = [rng.uniform(1.02, 1.25)]
    if two_modes:
        lam2 = rng.uniform(1.0, 1.2)
        while abs(lam2 - lams[0]) < 0.02:
            lam2 = rng.uniform(1.0, 1.2)
        lams.append(lam2)
    stable = rng.uniform(-0.8, 0.9)
    while any(abs(stable - l) < 0.02 for l in lams):
        stable = rng.uniform(-0.8, 0.9)
    lams.append(stable)
    return lams


def make_run_config(seed: int, horizon: int = 60, two_modes: bool = True,
                    policy: str = None) -> RunConfig:
    """Random strongly (3(beta+1)f+1)-robust setup with one spoofer.

    f=1, alpha=1, k_bar=2 (so beta=1, parent threshold 5, robustness
    target 7); N in [12, 15]; the last node is the spoofer, wired with
    enough in-edges that the whole graph meets the target w.r.t. every
    source set.
    """
    rng = Random(seed)
    f, alpha, k_bar = 1, 1, 2
    beta = alpha * k_bar - 1
    r_target = 3 * (beta + 1) * f + 1            # 7
    n = rng.randint(12, 15)
    spoofer = n
    tau_bar = rng.choice([2, 3])
    regular = [i for i in range(1, n + 1) if i != spoofer]

    lams = _distinct_lams(rng, two_modes)
    dim = len(lams)
    unstable_modes = [j + 1 for j, lam in enumerate(lams) if abs(lam) >= 1.0]
    a = [[lams[i] if i == j else 0.0 for j in range(dim)] for i in range(dim)]
    psi = [[1.0 if i == j else 0.0 for j in range(dim)] for i in range(dim)]
    x0 = []
    for _ in range(dim):
        v = rng.uniform(-10.0, 10.0)
        x0.append(v if abs(v) > 0.5 else v + 1.0)

    n_sources = rng.randint(r_target, r_target + 2)
    source_map = {j: sorted(rng.sample(regular, n_sources)) for j in unstable_modes}

    union_sources = sorted(set().union(*source_map.values()))
    edges = set(make_robust_digraph(rng, n, r_target, union_sources).edges)
    # each mode's own source set must meet the target too; top up stalled nodes
    for srcs in source_map.values():
        while True:
            g = DirectedGraph(n, frozenset(edges))
            cert = strongly_robust_peel(g, srcs, r_target)
            if cert.robust:
                break
            for i in sorted(cert.residual):
                have = {jj for (jj, ii) in edges if ii == i}
                for jj in [s for s in srcs if s != i and s not in have][:r_target]:
                    edges.add((jj, i))
    # give the spoofer someone to talk to
    for tgt in rng.sample(regular, min(5, len(regular))):
        edges.add((spoofer, tgt))
    g = DirectedGraph(n, frozenset(edges))

    observations = {}
    for i in regular:
        rows = []
        for j, srcs in source_map.items():
            if i in srcs:
                row = [0.0] * dim
                row[j - 1] = rng.choice([1.0, 2.0, -1.5])
                rows.append(row)
        if rows:
            observations[str(i)] = rows

    per_node = {}
    for i in regular:
        if rng.random() < 0.5:
            period = rng.choice([1, 2])
            per_node[str(i)] = {"type": "periodic", "period": period,
                                "offset": rng.randint(0, period - 1)}
        else:
            per_node[str(i)] = {"type": "randomized", "p": rng.uniform(0.3, 1.0)}

    edge_list = [[j, i, rng.randint(0, tau_bar)] for (j, i) in sorted(g.edges)]
    initial = {str(i): {str(m): rng.uniform(-20, 20) for m in range(1, dim + 1)}
               for i in regular}

    spoofer_targets = sorted(tgt for (src, tgt) in g.edges if src == spoofer)
    victim_pool = sorted(set(regular) & set().union(
        *(set(g.in_nbrs(t)) for t in spoofer_targets)))
    victim = rng.choice(victim_pool) if victim_pool else regular[0]
    if policy is None:
        policy = rng.choice(["silent", "random", "random", "construction_suppress"])
    if policy == "silent":
        policy_spec = {"name": "silent"}
    elif policy == "construction_suppress":
        policy_spec = {"name": "construction_suppress", "victim": victim,
                       "mode": unstable_modes[0],
                       "own_value": rng.uniform(-30, 30),
                       "spoof_value": rng.uniform(-30, 30),
                       "targets": spoofer_targets, "k_bar": k_bar,
                       "own_delay": rng.randint(0, tau_bar),
                       "suppress_delay": rng.randint(0, tau_bar),
                       "spoof_delay": rng.randint(0, tau_bar),
                       "claimed_source_modes": unstable_modes}
    elif policy == "dual_sequence":
        policy_spec = {"name": "dual_sequence", "victim": victim,
                       "mode": unstable_modes[0],
                       "own_value": rng.uniform(-30, 30),
                       "spoof_value": rng.uniform(-30, 30),
                       "targets": spoofer_targets, "k_bar": k_bar,
                       "own_delay": rng.randint(0, tau_bar),
                       "spoof_delay": rng.randint(0, tau_bar),
                       "claimed_source_modes": unstable_modes}
    else:
        policy_spec = {"name": "random", "victim": victim, "modes": unstable_modes,
                       "targets": spoofer_targets, "k_bar": k_bar,
                       "tau_bar": tau_bar, "suppress": True,
                       "claimed_source_modes": unstable_modes}

    raw = {
        "system": {"a": a, "x0": x0, "psi": psi},
        "observations": observations,
        "graph": {"n_nodes": n, "edges": edge_list},
        "params": {"f": f, "alpha": alpha, "k_bar": k_bar, "tau_bar": tau_bar,
                   "horizon": horizon},
        "schedule": {"default": {"type": "periodic", "period": 1, "offset": 0},
                     "per_node": per_node},
        "adversary": {"spoofers": [{"node": spoofer, "alpha": alpha,
                                    "policy": policy_spec}]},
        "observers": {"pole_target": 0.5},
        "initial_estimates": initial,
        "seed": seed,
    }
    return RunConfig(raw)
