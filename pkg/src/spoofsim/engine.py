"""Deterministic discrete-time engine for the whole estimation scheme.

Time is an integer global clock.  Each step: due packets are delivered
into per-identity last-write-wins mailboxes, the pre-update state is
recorded, awake regular nodes advance their parent-discovery counters and
consensus estimates and broadcast, local observers correct every step
(sensing is local and needs no network), adversary policies emit through
their capacity ledgers, and the truth advances.

Two scheduling-sensitive rules keep the estimates aligned with a truth
that moves every step even though consensus updates may not:

* a follower that has begun estimating a mode propagates the estimate
  open-loop (z_hat <- lam * z_hat) on steps it does not update;
* consensus inputs are age-compensated: a neighbor value sent at step t
  and read at step k enters the trimmed mean as lam**(k-t) * value, i.e.
  as the sender's implied opinion of the current mode value.  Without
  this, any persistent link delay leaves a permanent multiplicative gap
  on growing modes and convergence to the true state is impossible.

Same-step mailbox overwrites are permitted between packets that traveled
distinct physical links (a spoofed copy of an identity rides the
spoofer's own link); within one step regular broadcasts are sequenced
before adversary emissions, in node-id order, so ties resolve in the
adversary's favor -- strictly conservative for the defense guarantees.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from random import Random

import numpy as np

from . import adversary as adv
from .adversary import CapacityLedger, policy_actions
from .filtering import EstimateSlot, FilterParams, filtered_update
from .graphs import DirectedGraph, TimeVaryingGraph
from .lti import ModeSets
from .medag import (FLAG_TRUE, MedagNodeState, assign_layers, kbar_bound,
                    medag_node_step, medag_threshold, verify_srmedag)
from .observers import LuenbergerObserver, design_gain, luenberger_step

KIND_FLAG = adv.KIND_FLAG
KIND_ESTIMATE = adv.KIND_ESTIMATE


@dataclass(frozen=True)
class Packet:
    """One message on the wire.  true_origin is ground truth the receiving
    node never sees; arrival_seq totally orders same-step arrivals."""

    claimed_sender: int
    true_origin: int
    kind: str
    mode: int
    value: float
    send_step: int
    arrival_step: int
    arrival_seq: int


class Mailbox:
    """Per-receiver store of the last packet per (identity, kind, mode)."""

    def __init__(self):
        self.slots = {}

    def deliver(self, packet: Packet) -> bool:
        key = (packet.claimed_sender, packet.kind, packet.mode)
        held = self.slots.get(key)
        if held is None or (packet.arrival_step, packet.arrival_seq) > \
                (held.arrival_step, held.arrival_seq):
            self.slots[key] = packet
            return True
        return False

    def flag_view(self, senders, mode: int) -> dict:
        view = {}
        for ident in senders:
            pkt = self.slots.get((ident, KIND_FLAG, mode))
            if pkt is not None:
                view[ident] = (pkt.value == FLAG_TRUE)
        return view

    def estimate_packet(self, ident: int, mode: int):
        return self.slots.get((ident, KIND_ESTIMATE, mode))

    def estimate_senders(self, mode: int):
        return sorted(ident for (ident, kind, m) in self.slots
                      if kind == KIND_ESTIMATE and m == mode)


@dataclass(frozen=True)
class PeriodicSchedule:
    period: int
    offset: int = 0

    def awake(self, step: int, last_awake: int, rng) -> bool:
        return step >= self.offset and (step - self.offset) % self.period == 0


@dataclass(frozen=True)
class RandomizedSchedule:
    """Update with probability p each step, forced after k_bar-1 idle steps."""

    p: float
    k_bar: int

    def awake(self, step: int, last_awake: int, rng) -> bool:
        if step - last_awake >= self.k_bar:
            return True
        return rng.random() < self.p


class ScheduleBook:
    """Per-node schedules with the inter-update bound enforced by forcing."""

    def __init__(self, schedules: dict, seed: int):
        self.schedules = schedules
        self.last_awake = {i: -1 for i in schedules}
        self.rngs = {i: Random(_child_seed(seed, "sched", i)) for i in schedules}

    def awake_set(self, step: int) -> set:
        out = set()
        for i, sched in self.schedules.items():
            if sched.awake(step, self.last_awake[i], self.rngs[i]):
                out.add(i)
                self.last_awake[i] = step
        return out


def _child_seed(seed: int, tag: str, ident) -> int:
    digest = hashlib.sha256(f"{seed}:{tag}:{ident}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class Event:
    step: int
    kind: str
    node: int = 0
    mode: int = 0
    sender: int = 0
    value: float = 0.0
    detail: str = ""


@dataclass
class ModeConstructionRecord:
    """Ground-truth record of one mode's parent discovery."""

    mode: int
    sources: frozenset
    flip_steps: dict = field(default_factory=dict)     # node -> step
    parent_sets: dict = field(default_factory=dict)    # node -> frozenset | None
    termination_step: int = None                       # None if not terminated


@dataclass
class SimTrace:
    """Everything a run produced, sufficient for replay checks and reports."""

    config_hash: str
    seed: int
    eigenvalues: tuple
    unstable_modes: tuple
    consensus_modes: tuple
    regular_ids: tuple
    spoofer_ids: tuple
    horizon: int
    k_bar: int
    tau_bar: int
    f: int
    beta: int
    truth_z: list = field(default_factory=list)          # per step, tuple per mode
    truth_x: list = field(default_factory=list)
    estimates: dict = field(default_factory=dict)        # (node, mode) -> list per step
    events: list = field(default_factory=list)
    construction: dict = field(default_factory=dict)     # mode -> ModeConstructionRecord
    impersonated: dict = field(default_factory=dict)     # spoofer -> sorted identities used
    update_steps: dict = field(default_factory=dict)     # regular node -> list of steps
    max_packet_delay: int = 0
    staleness_violations: int = 0

    def error(self, node: int, mode: int, step: int) -> float:
        return self.estimates[(node, mode)][step] - self.truth_z[step][mode - 1]

    def error_series(self, node: int, mode: int) -> list:
        series = self.estimates[(node, mode)]
        return [series[k] - self.truth_z[k][mode - 1] for k in range(len(series))]

    def max_regular_error(self, mode: int, step: int) -> float:
        return max(abs(self.error(i, mode, step)) for i in self.regular_ids)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.config_hash.encode())
        for row in self.truth_z:
            h.update(repr(row).encode())
        for key in sorted(self.estimates):
            h.update(repr((key, self.estimates[key])).encode())
        for ev in self.events:
            h.update(repr((ev.step, ev.kind, ev.node, ev.mode, ev.sender,
                           ev.value, ev.detail)).encode())
        return h.hexdigest()


class SimEngine:
    """Single-threaded, event-deterministic run of one configuration."""

    def __init__(self, config):
        self.config = config
        self.diag = config.diagonalized()
        self.mode_sets = config.mode_sets(self.diag)
        p = config.params
        self.k_bar = p.k_bar
        self.tau_bar = p.tau_bar
        self.f = p.f
        self.beta = adv.beta_from_capacity(p.alpha, p.k_bar)
        self.threshold = medag_threshold(self.f, self.beta)
        self.trim = p.trim_override if p.trim_override is not None \
            else (self.beta + 1) * self.f
        self.horizon = p.horizon
        self.regular = tuple(sorted(config.regular_ids()))
        self._regular_set = frozenset(self.regular)
        self.spoofers = tuple(sorted(s.node for s in config.spoofers))
        self.consensus_modes = tuple(range(1, self.diag.n + 1)) if p.full_scheme \
            else self.diag.unstable_modes
        self.chi_horizon = p.chi_broadcast_horizon

        self.timeline = config.graph_timeline()
        self.delays = config.delay_maps(seed=config.seed)
        self._out_edges = {}
        for _, g in self.timeline.intervals:
            if id(g) in self._out_edges:
                continue
            per_node = {i: [] for i in g.nodes}
            for (src, tgt) in g.edges:
                per_node[src].append((tgt, self.delays[(src, tgt)]))
            self._out_edges[id(g)] = {i: sorted(v) for i, v in per_node.items()}

        self.seq = 0
        self.buckets = {}
        self.mailboxes = {i: Mailbox() for i in range(1, self.timeline.n_nodes + 1)}
        self.events = []
        self._dedup = set()

        self.estimates = {}
        for i in self.regular:
            for j in range(1, self.diag.n + 1):
                self.estimates[(i, j)] = config.initial_estimate(i, j)

        self.observers = {}
        for i in self.regular:
            d_i = self.mode_sets.detectable[i]
            if not d_i:
                continue
            lam_block = self.mode_sets.lam_blocks[i]
            c_block = self.mode_sets.c_blocks[i]
            gain = design_gain(lam_block, c_block,
                               pole_target=config.observer_pole_target(i),
                               explicit=config.observer_gain(i))
            z0 = np.array([self.estimates[(i, j)] for j in d_i])
            self.observers[i] = LuenbergerObserver(node=i, lam_diag=lam_block,
                                                   c_bar=c_block, gain=gain, z_hat=z0)

        self.medag = {}
        for i in self.regular:
            for j in self.consensus_modes:
                self.medag[(i, j)] = MedagNodeState(
                    node=i, mode=j, is_source=self.mode_sets.is_source(i, j))

        self.schedule = ScheduleBook(config.build_schedules(), config.seed)

        self.ledgers = {}
        self.policies = {}
        for spec in config.spoofers:
            self.ledgers[spec.node] = CapacityLedger(spec.node, spec.alpha, self.k_bar)
            policy = spec.make_policy()
            policy.bind(Random(_child_seed(config.seed, "policy", spec.node)))
            self.policies[spec.node] = policy

        self.trace = SimTrace(
            config_hash=config.hash(), seed=config.seed,
            eigenvalues=self.diag.eigenvalues,
            unstable_modes=self.diag.unstable_modes,
            consensus_modes=self.consensus_modes,
            regular_ids=self.regular, spoofer_ids=self.spoofers,
            horizon=self.horizon, k_bar=self.k_bar, tau_bar=self.tau_bar,
            f=self.f, beta=self.beta)
        for key in self.estimates:
            self.trace.estimates[key] = []
        for j in self.consensus_modes:
            self.trace.construction[j] = ModeConstructionRecord(
                mode=j, sources=frozenset(self.mode_sets.sources.get(j, frozenset()))
                & frozenset(self.regular))

    # --- wire helpers -------------------------------------------------

    def _log(self, step, kind, node=0, mode=0, sender=0, value=0.0, detail="",
             once_key=None):
        if once_key is not None:
            if once_key in self._dedup:
                return
            self._dedup.add(once_key)
        self.events.append(Event(step, kind, node, mode, sender, value, detail))

    def _enqueue(self, step, graph, origin, claimed, kind, mode, value, target, delay):
        if not graph.has_edge(origin, target):
            self._log(step, "drop_no_edge", node=target, mode=mode, sender=claimed,
                      detail=f"origin {origin} has no edge to {target}",
                      once_key=("noedge", origin, target, kind, mode))
            return
        if claimed not in graph.in_nbrs(target):
            self._log(step, "drop_implausible", node=target, mode=mode, sender=claimed,
                      detail=f"claimed {claimed} is not an in-neighbor of {target}",
                      once_key=("implaus", claimed, target, kind, mode))
            return
        self.seq += 1
        pkt = Packet(claimed_sender=claimed, true_origin=origin, kind=kind,
                     mode=mode, value=value, send_step=step,
                     arrival_step=step + delay, arrival_seq=self.seq)
        if delay > self.trace.max_packet_delay:
            self.trace.max_packet_delay = delay
        if pkt.arrival_step == step:
            self.mailboxes[target].deliver(pkt)
        else:
            self.buckets.setdefault(pkt.arrival_step, []).append((target, pkt))

    def _deliver_due(self, step):
        for target, pkt in self.buckets.pop(step, ()):
            self.mailboxes[target].deliver(pkt)

    # --- per-node step ------------------------------------------------

    def _node_step(self, i, step, graph, awake, x_now):
        new_est = {}
        d_i = set(self.mode_sets.detectable[i])
        broadcast_values = {j: self.estimates[(i, j)] for j in range(1, self.diag.n + 1)}

        if awake:
            in_nbrs = graph.in_nbrs(i)
            for j in self.consensus_modes:
                state = self.medag[(i, j)]
                if not state.active:
                    view = self.mailboxes[i].flag_view(in_nbrs, j)
                    for ident, ok in view.items():
                        if not ok:
                            self._log(step, "wrong_flag", node=i, mode=j, sender=ident,
                                      detail="flag packet did not carry the true flag",
                                      once_key=("wrongflag", i, ident, j))
                    if medag_node_step(state, view, step, self.threshold):
                        rec = self.trace.construction[j]
                        rec.flip_steps[i] = step
                        rec.parent_sets[i] = state.parents
                        self._log(step, "flip", node=i, mode=j,
                                  detail="parents=" + ",".join(map(str, sorted(state.parents))))

            for j in self.consensus_modes:
                if j in d_i:
                    continue
                state = self.medag[(i, j)]
                parents = state.parents if state.active else frozenset(
                    ident for ident, ok in
                    self.mailboxes[i].flag_view(graph.in_nbrs(i), j).items() if ok)
                lam = self.diag.lam(j)
                slots = []
                for ident in sorted(parents):
                    pkt = self.mailboxes[i].estimate_packet(ident, j)
                    if pkt is None:
                        continue
                    age = step - pkt.send_step
                    slot = EstimateSlot(
                        sender=ident, value=pkt.value * lam ** age,
                        arrival_step=pkt.arrival_step,
                        k_tilde=step - pkt.arrival_step,
                        tau=pkt.arrival_step - pkt.send_step)
                    if pkt.true_origin in self._regular_set and \
                            slot.staleness > self.k_bar - 1 + self.tau_bar:
                        self.trace.staleness_violations += 1
                    slots.append(slot)
                for ident in self.mailboxes[i].estimate_senders(j):
                    if ident not in parents:
                        self._log(step, "estimate_ignored", node=i, mode=j, sender=ident,
                                  detail="sender outside parent set",
                                  once_key=("ignored", i, ident, j))
                params = FilterParams(f=self.f, beta=self.beta, lam=lam,
                                      trim_count=self.trim)
                new_est[j] = filtered_update(params, slots, self.estimates[(i, j)])

            for j in range(1, self.diag.n + 1):
                if j in d_i or j in self.consensus_modes:
                    continue
                new_est[j] = self.diag.lam(j) * self.estimates[(i, j)]
        else:
            for j in range(1, self.diag.n + 1):
                if j in d_i:
                    continue
                if j in self.consensus_modes and not self.medag[(i, j)].active:
                    continue   # never started estimating: estimate stays frozen
                new_est[j] = self.diag.lam(j) * self.estimates[(i, j)]

        # local observer corrects every step; sensing needs no network
        if i in self.observers:
            obs = self.observers[i]
            y = self.config.observation(i).c @ x_now
            luenberger_step(obs, y)
            for idx, j in enumerate(self.mode_sets.detectable[i]):
                new_est[j] = float(obs.z_hat[idx])

        if awake:
            self._broadcast(i, step, graph, broadcast_values)

        for j, v in new_est.items():
            self.estimates[(i, j)] = v

    def _broadcast(self, i, step, graph, values):
        out_edges = self._out_edges[id(graph)][i]
        if not out_edges:
            return
        for j in self.consensus_modes:
            state = self.medag[(i, j)]
            if not state.active:
                continue
            if self.chi_horizon is None or step <= self.chi_horizon:
                for tgt, delay in out_edges:
                    self._enqueue(step, graph, i, i, KIND_FLAG, j, FLAG_TRUE, tgt, delay)
            for tgt, delay in out_edges:
                self._enqueue(step, graph, i, i, KIND_ESTIMATE, j, values[j], tgt, delay)

    # --- adversary ----------------------------------------------------

    def _adversary_step(self, step, graph, view):
        for s in self.spoofers:
            emissions = policy_actions(self.policies[s], view, step)
            if not emissions:
                continue
            self.ledgers[s].charge(step, [e.claimed for e in emissions])
            for e in emissions:
                if not 0 <= e.delay <= self.tau_bar:
                    raise ValueError(
                        f"policy of spoofer {s} declared delay {e.delay} > tau_bar")
                self._log(step, "adversary_emit", node=s, mode=e.mode,
                          sender=e.claimed, value=e.value,
                          detail=f"kind={e.kind} targets={','.join(map(str, e.targets))}")
                for tgt in e.targets:
                    self._enqueue(step, graph, s, e.claimed, e.kind, e.mode,
                                  e.value, tgt, e.delay)

    # --- main loop ----------------------------------------------------

    def run(self) -> SimTrace:
        z = np.array(self.diag.z0, dtype=float)
        for step in range(self.horizon):
            graph = self.timeline.graph_at(step)
            self._deliver_due(step)

            x = self.diag.psi @ z
            self.trace.truth_z.append(tuple(float(v) for v in z))
            self.trace.truth_x.append(tuple(float(v) for v in x))
            for (i, j), series in self.trace.estimates.items():
                series.append(self.estimates[(i, j)])

            awake = self.schedule.awake_set(step)
            for i in self.regular:
                if i in awake:
                    self.trace.update_steps.setdefault(i, []).append(step)
                self._node_step(i, step, graph, i in awake, x)

            view = GroundTruthView(engine=self, step=step, z=tuple(z))
            self._adversary_step(step, graph, view)

            z = np.asarray(self.diag.eigenvalues) * z

        for j in self.consensus_modes:
            rec = self.trace.construction[j]
            followers = [i for i in self.regular if i not in rec.sources]
            for i in self.regular:
                state = self.medag[(i, j)]
                rec.parent_sets.setdefault(i, state.parents)
                if state.active and i not in rec.flip_steps:
                    rec.flip_steps[i] = state.activation_step
            if all(self.medag[(i, j)].active for i in self.regular):
                rec.termination_step = max(rec.flip_steps[i] for i in self.regular)
        for s in self.spoofers:
            self.trace.impersonated[s] = sorted(
                {ident for _, ident in self.ledgers[s].impersonations})
        self.trace.events = self.events
        return self.trace


@dataclass
class GroundTruthView:
    """What a smart spoofer is allowed to see: everything."""

    engine: SimEngine
    step: int
    z: tuple

    def truth(self, mode: int) -> float:
        return self.z[mode - 1]

    def estimate(self, node: int, mode: int) -> float:
        return self.engine.estimates[(node, mode)]

    def counter(self, node: int, mode: int) -> int:
        return self.engine.medag[(node, mode)].counter

    @property
    def regular_ids(self):
        return self.engine.regular


def run(config) -> SimTrace:
    """Build and run an engine for a validated configuration."""
    return SimEngine(config).run()


def schedule_updates(book: ScheduleBook, step: int) -> set:
    """Awake set for one step (deterministic given the book's seed)."""
    return book.awake_set(step)


def deliver(packet: Packet, mailbox: Mailbox) -> bool:
    """Expose the last-write-wins mailbox rule for direct use in tests."""
    return mailbox.deliver(packet)


def snapshot_metrics(trace: SimTrace, tol: float = 1e-6) -> dict:
    """Post-run summary: per-mode convergence metrics and construction
    termination versus the worst-case bound."""
    out = {"config_hash": trace.config_hash, "seed": trace.seed, "modes": {}}
    horizon = len(trace.truth_z)
    for j in trace.consensus_modes:
        rec = trace.construction[j]
        final_err = trace.max_regular_error(j, horizon - 1)
        first_below = None
        for k in range(horizon):
            if trace.max_regular_error(j, k) < tol:
                first_below = k
                break
        term = rec.termination_step
        bound = None
        layers = None
        if term is not None:
            try:
                assignment = assign_layers(rec.parent_sets, rec.sources,
                                           trace.regular_ids)
                layers = {m: list(v) for m, v in assignment.layers.items()}
                bound = kbar_bound(assignment.l_bar, trace.k_bar, trace.tau_bar,
                                   trace.beta)
            except Exception:
                pass
        slopes = {}
        start = term if term is not None else 0
        for i in trace.regular_ids:
            if i in rec.sources:
                continue
            slopes[i] = _decay_slope(trace.error_series(i, j), start)
        out["modes"][j] = {
            "final_max_regular_error": final_err,
            "first_step_below_tol": first_below,
            "tolerance": tol,
            "termination_step": term,
            "kbar_bound": bound,
            "layers": layers,
            "follower_log_error_slopes": slopes,
        }
    return out


def _decay_slope(errors, start, floor=1e-13):
    """Least-squares slope of log10 |error| from start until the error first
    reaches the numerical floor; None when already converged / too short."""
    window = []
    for k in range(start, len(errors)):
        e = abs(errors[k])
        if e < floor:
            break
        window.append((k, np.log10(e)))
    if len(window) < 3:
        return None
    ks = np.array([k for k, _ in window], dtype=float)
    vs = np.array([v for _, v in window])
    return float(np.polyfit(ks, vs, 1)[0])
