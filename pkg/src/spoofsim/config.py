"""Run configuration: ingestion, validation, and the topology preflight.

Configs are JSON documents.  Validation is eager and semantic: the plant
must diagonalize, observer gains must be Schur stable, delays must respect
the bound, the switching window must respect the update bound, and the
spoofer placement must be f-local.  The preflight then grades the topology
against the three sufficiency thresholds (full guarantee, no construction
impersonation, randomized schedules) for every unstable mode; running an
under-robust config is allowed -- demonstrating failure is a feature.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from random import Random

import numpy as np

from . import adversary as adv
from .adversary import beta_from_capacity, validate_f_locality
from .errors import ConfigError, SpoofSimError
from .filtering import beta_prime
from .graphs import (DirectedGraph, TimeVaryingGraph, jointly_strongly_robust,
                     max_strong_robustness, strongly_robust_peel, union_graphs)
from .lti import LtiSystem, ModeSets, ObservationModel, diagonalize
from .observers import design_gain

_POLICY_CLASSES = {
    "silent": adv.SilentPolicy,
    "scripted": adv.ScriptedPolicy,
    "dual_sequence": adv.DualSequenceInjectionPolicy,
    "construction_suppress": adv.ConstructionSuppressionPolicy,
    "random": adv.RandomValuedPolicy,
}


@dataclass(frozen=True)
class Params:
    f: int = 0
    alpha: int = 1
    k_bar: int = 1
    tau_bar: int = 0
    horizon: int = 100
    trim_override: int = None
    eig_tol: float = 1e-8
    diag_tol: float = 1e-9
    detect_tol: float = 1e-9
    error_tolerance: float = 1e-6
    full_scheme: bool = False
    chi_broadcast_horizon: int = None


@dataclass(frozen=True)
class SpooferSpec:
    node: int
    alpha: int
    policy_name: str
    policy_params: dict = field(default_factory=dict)

    @property
    def claimed_source_modes(self) -> tuple:
        return tuple(self.policy_params.get("claimed_source_modes", ()))

    def make_policy(self):
        cls = _POLICY_CLASSES[self.policy_name]
        return cls(self.node, **self.policy_params)


class RunConfig:
    """Validated run description; the engine consumes this object."""

    def __init__(self, raw: dict):
        self.raw = raw
        self._diag = None
        self._parse()
        self._validate()

    # --- parsing ------------------------------------------------------

    def _parse(self):
        raw = self.raw
        try:
            sysd = raw["system"]
            self.a = np.asarray(sysd["a"], dtype=float)
            self.x0 = np.asarray(sysd["x0"], dtype=float)
            self.psi = None if sysd.get("psi") is None \
                else np.asarray(sysd["psi"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad system section: {exc}", field="system") from exc

        pd = dict(raw.get("params", {}))
        unknown = set(pd) - set(Params.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}", field="params")
        try:
            self.params = Params(**pd)
        except TypeError as exc:
            raise ConfigError(str(exc), field="params") from exc

        gd = raw.get("graph", {})
        if "n_nodes" not in gd:
            raise ConfigError("graph.n_nodes is required", field="graph.n_nodes")
        self.n_nodes = int(gd["n_nodes"])
        if "switching" in gd:
            self.mu_bar = int(gd.get("mu_bar", 0))
            self.switching = [(int(iv["start_step"]),
                               [(int(j), int(i), d) for j, i, d in iv["edges"]])
                              for iv in gd["switching"]]
        else:
            self.mu_bar = None
            try:
                edges = [(int(j), int(i), d) for j, i, d in gd["edges"]]
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad edge list: {exc}", field="graph.edges") from exc
            self.switching = [(0, edges)]

        self.observations_raw = {int(k): v for k, v in raw.get("observations", {}).items()}

        sd = raw.get("schedule", {})
        self.schedule_default = sd.get("default", {"type": "periodic", "period": 1,
                                                   "offset": 0})
        self.schedule_per_node = {int(k): v for k, v in sd.get("per_node", {}).items()}

        ad = raw.get("adversary", {})
        self.spoofers = []
        for entry in ad.get("spoofers", []):
            try:
                self.spoofers.append(SpooferSpec(
                    node=int(entry["node"]),
                    alpha=int(entry.get("alpha", self.params.alpha)),
                    policy_name=entry["policy"]["name"],
                    policy_params={k: v for k, v in entry["policy"].items()
                                   if k != "name"}))
            except (KeyError, TypeError) as exc:
                raise ConfigError(f"bad spoofer entry: {exc}",
                                  field="adversary.spoofers") from exc

        od = raw.get("observers", {})
        self.pole_target_default = float(od.get("pole_target", 0.5))
        self.gains = {int(k): np.asarray(v, dtype=float)
                      for k, v in od.get("gains", {}).items()}

        self.initial_estimates = {
            int(node): {int(mode): float(v) for mode, v in per.items()}
            for node, per in raw.get("initial_estimates", {}).items()}

        self.seed = int(raw.get("seed", 0))

    # --- validation ---------------------------------------------------

    def _validate(self):
        p = self.params
        if p.f < 0:
            raise ConfigError("f must be non-negative", field="params.f")
        if p.alpha < 1:
            raise ConfigError("alpha must be >= 1", field="params.alpha")
        if p.k_bar < 1:
            raise ConfigError("k_bar must be >= 1", field="params.k_bar")
        if p.tau_bar < 0:
            raise ConfigError("tau_bar must be >= 0", field="params.tau_bar")
        if p.horizon < 0:
            raise ConfigError("horizon must be >= 0", field="params.horizon")
        if self.mu_bar is not None and self.mu_bar > p.k_bar:
            raise ConfigError(
                f"switching window mu_bar={self.mu_bar} exceeds update bound "
                f"k_bar={p.k_bar}", field="graph.mu_bar")

        try:
            self._diag = diagonalize(LtiSystem(self.a, self.x0), psi=self.psi,
                                     eig_tol=p.eig_tol, diag_tol=p.diag_tol)
        except (SpoofSimError, ValueError) as exc:
            raise ConfigError(str(exc), field="system") from exc

        seen_delay = {}
        for start, edges in self.switching:
            for j, i, d in edges:
                if d is not None:
                    if not 0 <= int(d) <= p.tau_bar:
                        raise ConfigError(
                            f"edge ({j},{i}) delay {d} outside [0, {p.tau_bar}]",
                            field="graph.edges")
                if (j, i) in seen_delay and seen_delay[(j, i)] != d:
                    raise ConfigError(
                        f"edge ({j},{i}) has conflicting delays across intervals",
                        field="graph.edges")
                seen_delay[(j, i)] = d
        try:
            self.timeline = self.graph_timeline()
        except ValueError as exc:
            raise ConfigError(str(exc), field="graph") from exc

        spoofer_ids = [s.node for s in self.spoofers]
        if len(set(spoofer_ids)) != len(spoofer_ids):
            raise ConfigError("duplicate spoofer ids", field="adversary.spoofers")
        for s in self.spoofers:
            if not 1 <= s.node <= self.n_nodes:
                raise ConfigError(f"spoofer {s.node} not in graph",
                                  field="adversary.spoofers")
            if s.alpha > self.params.alpha:
                raise ConfigError(
                    f"spoofer {s.node} capacity {s.alpha} exceeds designed alpha "
                    f"{self.params.alpha}", field="adversary.spoofers")
            if s.policy_name not in _POLICY_CLASSES:
                raise ConfigError(f"unknown policy '{s.policy_name}'",
                                  field="adversary.spoofers")
        for _, g in self.timeline.intervals:
            try:
                validate_f_locality(g, spoofer_ids, self.params.f)
            except ValueError as exc:
                raise ConfigError(str(exc), field="adversary") from exc

        for node in self.observations_raw:
            if not 1 <= node <= self.n_nodes:
                raise ConfigError(f"observation for unknown node {node}",
                                  field="observations")
        for node, per in self.initial_estimates.items():
            if not 1 <= node <= self.n_nodes:
                raise ConfigError(f"initial estimate for unknown node {node}",
                                  field="initial_estimates")
            for mode in per:
                if not 1 <= mode <= self._diag.n:
                    raise ConfigError(f"initial estimate for unknown mode {mode}",
                                      field="initial_estimates")

        for node, sched in list(self.schedule_per_node.items()) + [(0, self.schedule_default)]:
            kind = sched.get("type")
            if kind == "periodic":
                period, offset = int(sched.get("period", 1)), int(sched.get("offset", 0))
                if not 1 <= period <= self.params.k_bar:
                    raise ConfigError(
                        f"node {node}: period {period} violates k_bar={self.params.k_bar}",
                        field="schedule")
                if not 0 <= offset < period:
                    raise ConfigError(f"node {node}: offset {offset} >= period",
                                      field="schedule")
            elif kind == "randomized":
                prob = float(sched.get("p", 1.0))
                if not 0.0 < prob <= 1.0:
                    raise ConfigError(f"node {node}: probability {prob} outside (0,1]",
                                      field="schedule")
            else:
                raise ConfigError(f"node {node}: unknown schedule type {kind!r}",
                                  field="schedule")

        # observer gains must give Schur-stable closed loops
        mode_sets = self.mode_sets(self._diag)
        for i in self.regular_ids():
            if not mode_sets.detectable[i]:
                continue
            try:
                design_gain(mode_sets.lam_blocks[i], mode_sets.c_blocks[i],
                            pole_target=self.observer_pole_target(i),
                            explicit=self.observer_gain(i))
            except SpoofSimError as exc:
                raise ConfigError(f"observer for node {i}: {exc}",
                                  field="observers") from exc

    # --- engine-facing accessors ---------------------------------------

    def diagonalized(self):
        return self._diag

    def observation(self, node: int) -> ObservationModel:
        c = self.observations_raw.get(node)
        if c is None:
            c = np.zeros((1, self._diag.n))
        return ObservationModel.build(node, c, self._diag)

    def mode_sets(self, diag) -> ModeSets:
        observations = {i: self.observation(i) for i in self.regular_ids()}
        modes = tuple(range(1, diag.n + 1)) if self.params.full_scheme \
            else diag.unstable_modes
        ms = ModeSets.build(diag, observations, tol=self.params.detect_tol)
        if self.params.full_scheme:
            from .lti import source_sets
            ms = ModeSets(detectable=ms.detectable, undetectable=ms.undetectable,
                          lam_blocks=ms.lam_blocks, c_blocks=ms.c_blocks,
                          sources=source_sets(ms.detectable, modes))
        return ms

    def regular_ids(self):
        spoofers = {s.node for s in self.spoofers}
        return [i for i in range(1, self.n_nodes + 1) if i not in spoofers]

    def graph_timeline(self) -> TimeVaryingGraph:
        intervals = []
        for start, edges in self.switching:
            g = DirectedGraph(self.n_nodes, frozenset((j, i) for j, i, _ in edges))
            intervals.append((start, g))
        return TimeVaryingGraph(tuple(intervals))

    def delay_maps(self, seed: int) -> dict:
        rng = Random(hashlib.sha256(f"{seed}:delays".encode()).digest())
        delays = {}
        for start, edges in self.switching:
            for j, i, d in sorted(edges):
                if (j, i) in delays:
                    continue
                delays[(j, i)] = int(d) if d is not None \
                    else rng.randint(0, self.params.tau_bar)
        return delays

    def initial_estimate(self, node: int, mode: int) -> float:
        return self.initial_estimates.get(node, {}).get(mode, 0.0)

    def observer_gain(self, node: int):
        return self.gains.get(node)

    def observer_pole_target(self, node: int) -> float:
        return self.pole_target_default

    def build_schedules(self) -> dict:
        from .engine import PeriodicSchedule, RandomizedSchedule

        def build(spec):
            if spec["type"] == "periodic":
                return PeriodicSchedule(period=int(spec.get("period", 1)),
                                        offset=int(spec.get("offset", 0)))
            return RandomizedSchedule(p=float(spec.get("p", 1.0)),
                                      k_bar=self.params.k_bar)

        return {i: build(self.schedule_per_node.get(i, self.schedule_default))
                for i in self.regular_ids()}

    # --- serialization --------------------------------------------------

    def to_dict(self) -> dict:
        return json.loads(json.dumps(self.raw))

    def hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @property
    def beta(self) -> int:
        return beta_from_capacity(self.params.alpha, self.params.k_bar)

    @property
    def beta_prime(self) -> int:
        return beta_prime(self.beta, self.params.k_bar)


def load_config(path) -> RunConfig:
    """Parse and validate a JSON config file."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config does not parse: {exc}") from exc
    return RunConfig(raw)


@dataclass
class ModePreflight:
    mode: int
    eigenvalue: float
    regular_sources: tuple
    claimed_sources: tuple
    effective_sources: tuple
    robustness: int                  # max strong robustness w.r.t. effective sources
    threshold_full: int              # 3(beta+1)f+1
    threshold_no_construction_spoof: int   # 2(beta+1)f+1
    threshold_randomized: int        # 3(beta'+1)f+1
    meets_full: bool
    meets_no_construction_spoof: bool
    meets_randomized: bool
    empty_sources: bool


@dataclass
class PreflightReport:
    beta: int
    beta_prime: int
    modes: list
    warnings: list

    def format(self) -> str:
        lines = [f"beta={self.beta} beta'={self.beta_prime}"]
        for m in self.modes:
            lines.append(
                f"mode {m.mode} (lambda={m.eigenvalue:g}): sources="
                f"{sorted(m.effective_sources)} r*={m.robustness} | "
                f"full {m.threshold_full}: {'PASS' if m.meets_full else 'FAIL'} | "
                f"no-spoof {m.threshold_no_construction_spoof}: "
                f"{'PASS' if m.meets_no_construction_spoof else 'FAIL'} | "
                f"randomized {m.threshold_randomized}: "
                f"{'PASS' if m.meets_randomized else 'FAIL'}")
        lines += [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines)


def preflight(config: RunConfig) -> PreflightReport:
    """Grade the topology against the sufficiency thresholds per unstable mode.

    The source set used for the robustness hypothesis is the regular source
    set joined with any adversaries claiming sourceness for the mode: the
    guarantees tolerate spoofers inside the source set, and the scenario
    topologies only meet their stated robustness with the claimant counted.
    """
    diag = config.diagonalized()
    mode_sets = config.mode_sets(diag)
    beta = config.beta
    bprime = config.beta_prime
    f = config.params.f
    t_full = 3 * (beta + 1) * f + 1
    t_nospoof = 2 * (beta + 1) * f + 1
    t_rand = 3 * (bprime + 1) * f + 1

    timeline = config.graph_timeline()
    static = len(timeline.intervals) == 1
    union = union_graphs(g for _, g in timeline.intervals)

    modes, warnings = [], []
    for j in diag.unstable_modes:
        regular_sources = frozenset(mode_sets.sources.get(j, frozenset()))
        claimed = frozenset(s.node for s in config.spoofers
                            if j in s.claimed_source_modes)
        effective = regular_sources | claimed
        empty = not effective
        if not regular_sources:
            warnings.append(f"mode {j}: no regular source can detect it"
                            + ("" if claimed else " (fatal: no information source)"))
        if empty:
            modes.append(ModePreflight(
                mode=j, eigenvalue=diag.lam(j), regular_sources=tuple(),
                claimed_sources=tuple(), effective_sources=tuple(), robustness=0,
                threshold_full=t_full, threshold_no_construction_spoof=t_nospoof,
                threshold_randomized=t_rand, meets_full=False,
                meets_no_construction_spoof=False, meets_randomized=False,
                empty_sources=True))
            continue
        if static:
            r_star = max_strong_robustness(timeline.intervals[0][1], effective)
            meets = {t: r_star >= t for t in (t_full, t_nospoof, t_rand)}
        else:
            horizon = config.params.horizon
            mu = config.mu_bar or 0
            upper = max(len(union.in_nbrs(i)) for i in set(union.nodes) - effective) \
                if set(union.nodes) - effective else 0
            r_star = 0
            for r in range(upper, 0, -1):
                if jointly_strongly_robust(timeline, effective, r, mu, horizon,
                                           k_bar=config.params.k_bar).robust:
                    r_star = r
                    break
            meets = {t: r_star >= t for t in (t_full, t_nospoof, t_rand)}
        modes.append(ModePreflight(
            mode=j, eigenvalue=diag.lam(j),
            regular_sources=tuple(sorted(regular_sources)),
            claimed_sources=tuple(sorted(claimed)),
            effective_sources=tuple(sorted(effective)),
            robustness=r_star, threshold_full=t_full,
            threshold_no_construction_spoof=t_nospoof, threshold_randomized=t_rand,
            meets_full=meets[t_full], meets_no_construction_spoof=meets[t_nospoof],
            meets_randomized=meets[t_rand], empty_sources=False))
    return PreflightReport(beta=beta, beta_prime=bprime, modes=modes,
                           warnings=warnings)
