"""Built-in demonstration scenarios on the 14-node sample network.

Thirteen regular observers in three groups watch a two-mode plant with one
growing mode and one marginal mode; one smart spoofer sits between the
groups.  Group 1 (nodes 1-4) senses only the growing mode, group 2 (nodes
5-8) only the marginal one, group 3 (nodes 9-13) senses nothing and relies
entirely on the network.  Links run group1 <-> group3 and group2 <-> group3
(all-to-all, fixed delays), groups 1 and 2 feed the spoofer, and the
spoofer reaches group 3.

Scenario s1: the spoofer claims sourceness and injects a high/low value
pair (60 under its own identity, 30 under a forged group-1 identity) into
group 3's estimates of the growing mode.  The topology is strong enough
that trimming sandwiches the forgeries and every regular node still
converges.

Scenario s2: the spoofer additionally falsifies one group-1 node's
presence flag during parent discovery, so group 3 never reaches its parent
threshold for the growing mode; with only four parents everything gets
trimmed and the affected estimates stay frozen at their initial values
(6 on group 2, 7 on group 3) forever.
"""

from __future__ import annotations

from .config import RunConfig

R1 = (1, 2, 3, 4)
R2 = (5, 6, 7, 8)
R3 = (9, 10, 11, 12, 13)
SPOOFER = 14

A_MATRIX = [[0.98, 0.02], [-0.04, 1.04]]
X0 = [2.0, 5.0]
PSI = [[0.1, 1.0], [0.2, 1.0]]


def _edges():
    edges = []
    for a in R1:
        for b in R3:
            edges.append([a, b, 2])   # group1 -> group3
            edges.append([b, a, 1])   # group3 -> group1
    for a in R2:
        for b in R3:
            edges.append([a, b, 3])   # group2 -> group3
            edges.append([b, a, 2])   # group3 -> group2
    for a in R1 + R2:
        edges.append([a, SPOOFER, 0])
    for b in R3:
        edges.append([SPOOFER, b, 1])
    return edges


def _base_config() -> dict:
    observations = {}
    for i in R1:
        observations[str(i)] = [[-10.0, 10.0]]
    for i in R2:
        observations[str(i)] = [[2.0, -1.0]]
    for i in R3:
        observations[str(i)] = [[0.0, 0.0]]
    per_node = {str(i): {"type": "periodic", "period": 2, "offset": 0}
                for i in R1 + R2}
    for i in R3:
        per_node[str(i)] = {"type": "periodic", "period": 1, "offset": 0}
    gains = {str(i): [[0.5]] for i in R1 + R2}
    return {
        "system": {"a": A_MATRIX, "x0": X0, "psi": PSI},
        "observations": observations,
        "graph": {"n_nodes": 14, "edges": _edges()},
        "params": {"f": 1, "alpha": 1, "k_bar": 2, "tau_bar": 3, "horizon": 200},
        "schedule": {"default": {"type": "periodic", "period": 1, "offset": 0},
                     "per_node": per_node},
        "observers": {"pole_target": 0.5, "gains": gains},
        "seed": 0,
    }


def scenario_s1(horizon: int = 200, seed: int = 0) -> RunConfig:
    """Dual-sequence injection; the network still reaches omniscience."""
    raw = _base_config()
    raw["params"]["horizon"] = horizon
    raw["seed"] = seed
    raw["initial_estimates"] = {"1": {"1": 100.0}, "2": {"1": 100.0}}
    raw["adversary"] = {"spoofers": [{
        "node": SPOOFER, "alpha": 1,
        "policy": {"name": "dual_sequence", "victim": 1, "mode": 1,
                   "own_value": 60.0, "spoof_value": 30.0,
                   "targets": list(R3), "k_bar": 2,
                   "own_delay": 1, "spoof_delay": 1,
                   "claimed_source_modes": [1, 2]},
    }]}
    return RunConfig(raw)


def scenario_s2(horizon: int = 200, seed: int = 0) -> RunConfig:
    """Construction-phase flag suppression; group 2/3 estimates freeze."""
    raw = _base_config()
    raw["params"]["horizon"] = horizon
    raw["seed"] = seed
    estimates = {"2": {"1": 10.0}}
    for i in R2:
        estimates[str(i)] = {"1": 6.0}
    for i in R3:
        estimates[str(i)] = {"1": 7.0}
    raw["initial_estimates"] = estimates
    raw["adversary"] = {"spoofers": [{
        "node": SPOOFER, "alpha": 1,
        "policy": {"name": "construction_suppress", "victim": 1, "mode": 1,
                   "own_value": 8.0, "spoof_value": 9.0,
                   "targets": list(R3), "k_bar": 2,
                   # the falsified flag rides the same delay as the genuine
                   # group1 -> group3 link so every genuine arrival is
                   # overwritten within its arrival step
                   "own_delay": 1, "suppress_delay": 2, "spoof_delay": 1,
                   "claimed_source_modes": [1, 2]},
    }]}
    return RunConfig(raw)


SCENARIOS = {"s1": scenario_s1, "s2": scenario_s2}
