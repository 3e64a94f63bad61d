"""Smart-spoofer model: capacity accounting and scripted attack policies.

A spoofer combines Byzantine behavior (arbitrary, inconsistent values,
full knowledge of the run, chosen per-packet delays) with identity
impersonation.  Its reach is bounded by a hard ledger: at most alpha
distinct identities emitted per step (its own included), and at most
beta = alpha*k_bar - 1 distinct regular identities impersonated inside
any window of k_bar consecutive steps.  Policies are arbitrary programs,
but every emission passes the ledger or the run aborts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from random import Random

from .errors import CapacityExceeded
from .medag import FLAG_TRUE

KIND_FLAG = "flag"
KIND_ESTIMATE = "estimate"


def beta_from_capacity(alpha: int, k_bar: int) -> int:
    """Distinct regular identities impersonable per k_bar-window."""
    if alpha < 1 or k_bar < 1:
        raise ValueError("need alpha >= 1 and k_bar >= 1")
    return alpha * k_bar - 1


def impersonation_feasible(genuine_arrival, spoof_arrival, victim_next_read: int) -> bool:
    """Necessary condition for an impersonation to take effect.

    Arrivals are (step, seq) pairs.  The spoofed packet must land in a
    strictly later step than the genuine one (a same-step tie on one
    identity slot is excluded by the serial-link idealization) and no
    later than the victim's next mailbox read.  A genuine packet consumed
    with zero delay therefore cannot be overwritten.
    """
    g_step, _ = genuine_arrival
    s_step, _ = spoof_arrival
    return g_step < s_step <= victim_next_read


@dataclass(frozen=True)
class Emission:
    """One packet a policy wants on the wire this step."""

    claimed: int
    kind: str              # KIND_FLAG or KIND_ESTIMATE
    mode: int
    value: float
    targets: tuple
    delay: int


class CapacityLedger:
    """Hard gate on a single spoofer's emission schedule."""

    def __init__(self, spoofer: int, alpha: int, k_bar: int):
        self.spoofer = spoofer
        self.alpha = alpha
        self.k_bar = k_bar
        self.beta = beta_from_capacity(alpha, k_bar)
        self.impersonations = []   # (step, identity), appended in step order

    def charge(self, step: int, claimed_identities) -> None:
        """Account one step's emissions; raises CapacityExceeded on violation.

        Broadcast semantics: each distinct identity counts once per step
        no matter how many packets or targets it covers.
        """
        distinct = sorted(set(claimed_identities))
        if len(distinct) > self.alpha:
            raise CapacityExceeded(
                f"spoofer {self.spoofer} emitted {len(distinct)} identities "
                f"at step {step} (alpha={self.alpha})",
                step=step, evidence=tuple(distinct))
        new = [(step, ident) for ident in distinct if ident != self.spoofer]
        self.impersonations.extend(new)
        window_lo = step - self.k_bar + 1
        window_ids = {ident for s, ident in self.impersonations if s >= window_lo}
        if len(window_ids) > self.beta:
            raise CapacityExceeded(
                f"spoofer {self.spoofer} impersonated {sorted(window_ids)} within "
                f"steps [{window_lo}, {step}] (beta={self.beta})",
                step=step, evidence=tuple(sorted(window_ids)))

    def window_scan_ok(self) -> bool:
        """Brute-force re-check of every window over the recorded history."""
        if not self.impersonations:
            return True
        last = self.impersonations[-1][0]
        for lo in range(0, last + 1):
            ids = {ident for s, ident in self.impersonations
                   if lo <= s <= lo + self.k_bar - 1}
            if len(ids) > self.beta:
                return False
        return True


def validate_f_locality(graph, spoofer_ids, f: int) -> None:
    """Every regular node may have at most f spoofer in-neighbors."""
    spoofers = frozenset(spoofer_ids)
    for i in graph.nodes:
        if i in spoofers:
            continue
        hit = graph.in_nbrs(i) & spoofers
        if len(hit) > f:
            raise ValueError(
                f"node {i} has {len(hit)} spoofer in-neighbors {sorted(hit)} > f={f}")


class SpooferPolicy:
    """Deterministic script mapping (ground-truth view, step) to emissions.

    claimed_source_modes lists the modes for which the policy pretends to
    be a source (sends the true flag under its own identity); victim_ids
    is the fixed pool of regular identities it may impersonate.
    """

    name = "base"
    claimed_source_modes: tuple = ()
    victim_ids: tuple = ()

    def __init__(self, spoofer: int):
        self.spoofer = spoofer

    def bind(self, rng: Random) -> None:
        """Attach the seeded stream; called once by the engine."""
        self.rng = rng

    def emissions(self, view, step: int) -> list:
        raise NotImplementedError


class SilentPolicy(SpooferPolicy):
    """Sends nothing, ever."""

    name = "silent"

    def emissions(self, view, step):
        return []


class ScriptedPolicy(SpooferPolicy):
    """Replays an explicit table: step -> list of emissions."""

    name = "scripted"

    def __init__(self, spoofer: int, table: dict, claimed_source_modes=(),
                 victim_ids=()):
        super().__init__(spoofer)
        self.table = {int(k): [Emission(**e) if isinstance(e, dict) else e for e in v]
                      for k, v in table.items()}
        self.claimed_source_modes = tuple(claimed_source_modes)
        self.victim_ids = tuple(victim_ids)

    def emissions(self, view, step):
        return list(self.table.get(step, []))


class DualSequenceInjectionPolicy(SpooferPolicy):
    """Estimation-phase attack: alternate an own-identity value with a
    forged value under one victim's identity, keeping both identities
    fresh in the targets' mailboxes every update window.

    Claims sourceness for the attacked mode (and any other claimed modes,
    for which it relays the true trajectory value so it blends in).
    """

    name = "dual_sequence"

    def __init__(self, spoofer: int, victim: int, mode: int, own_value: float,
                 spoof_value: float, targets, k_bar: int, own_delay: int,
                 spoof_delay: int, claimed_source_modes=()):
        super().__init__(spoofer)
        self.victim = victim
        self.mode = mode
        self.own_value = own_value
        self.spoof_value = spoof_value
        self.targets = tuple(sorted(targets))
        self.k_bar = k_bar
        self.own_delay = own_delay
        self.spoof_delay = spoof_delay
        self.claimed_source_modes = tuple(claimed_source_modes) or (mode,)
        self.victim_ids = (victim,)

    def emissions(self, view, step):
        out = []
        if step % self.k_bar == self.k_bar - 1:
            # own-identity turn: true flags plus the high injection value
            for j in self.claimed_source_modes:
                out.append(Emission(self.spoofer, KIND_FLAG, j, FLAG_TRUE,
                                    self.targets, self.own_delay))
                value = self.own_value if j == self.mode else view.truth(j)
                out.append(Emission(self.spoofer, KIND_ESTIMATE, j, value,
                                    self.targets, self.own_delay))
        elif step % self.k_bar == 0:
            out.append(Emission(self.victim, KIND_ESTIMATE, self.mode,
                                self.spoof_value, self.targets, self.spoof_delay))
        return out


class ConstructionSuppressionPolicy(SpooferPolicy):
    """Construction-phase attack: keep one victim's presence flag falsified
    so the targets never reach their parent threshold for the mode, then
    inject values during the (stalled) estimation phase.

    The falsified flag is sent with the same delay as the victim's genuine
    link so each genuine arrival is overwritten in the same step.
    """

    name = "construction_suppress"

    def __init__(self, spoofer: int, victim: int, mode: int, own_value: float,
                 spoof_value: float, targets, k_bar: int, own_delay: int,
                 suppress_delay: int, spoof_delay: int, claimed_source_modes=()):
        super().__init__(spoofer)
        self.victim = victim
        self.mode = mode
        self.own_value = own_value
        self.spoof_value = spoof_value
        self.targets = tuple(sorted(targets))
        self.k_bar = k_bar
        self.own_delay = own_delay
        self.suppress_delay = suppress_delay
        self.spoof_delay = spoof_delay
        self.claimed_source_modes = tuple(claimed_source_modes) or (mode,)
        self.victim_ids = (victim,)

    def emissions(self, view, step):
        out = []
        if step % self.k_bar == self.k_bar - 1:
            for j in self.claimed_source_modes:
                out.append(Emission(self.spoofer, KIND_FLAG, j, FLAG_TRUE,
                                    self.targets, self.own_delay))
                value = self.own_value if j == self.mode else view.truth(j)
                out.append(Emission(self.spoofer, KIND_ESTIMATE, j, value,
                                    self.targets, self.own_delay))
        elif step % self.k_bar == 0:
            out.append(Emission(self.victim, KIND_FLAG, self.mode, 0.0,
                                self.targets, self.suppress_delay))
            out.append(Emission(self.victim, KIND_ESTIMATE, self.mode,
                                self.spoof_value, self.targets, self.spoof_delay))
        return out


class RandomValuedPolicy(SpooferPolicy):
    """Seeded junk generator within the ledger's budget.

    Alternates between own-identity emissions (claiming sourceness, junk
    values) and impersonations of a fixed victim (junk estimates, or a
    falsified flag while the victim still broadcasts construction flags).
    Never forges a TRUE flag under a regular identity.
    """

    name = "random"

    def __init__(self, spoofer: int, victim: int, modes, targets, k_bar: int,
                 tau_bar: int, value_range=(-50.0, 50.0), suppress: bool = True,
                 claimed_source_modes=None):
        super().__init__(spoofer)
        self.victim = victim
        self.modes = tuple(modes)
        self.targets = tuple(sorted(targets))
        self.k_bar = k_bar
        self.tau_bar = tau_bar
        self.value_range = value_range
        self.suppress = suppress
        self.claimed_source_modes = tuple(
            self.modes if claimed_source_modes is None else claimed_source_modes)
        self.victim_ids = (victim,)

    def _junk(self):
        lo, hi = self.value_range
        return self.rng.uniform(lo, hi)

    def emissions(self, view, step):
        out = []
        delay = self.rng.randint(0, self.tau_bar)
        if step % self.k_bar == 0 and self.rng.random() < 0.7:
            # impersonation turn, one victim only
            for j in self.modes:
                if self.suppress and self.rng.random() < 0.5:
                    out.append(Emission(self.victim, KIND_FLAG, j, 0.0,
                                        self.targets, delay))
                out.append(Emission(self.victim, KIND_ESTIMATE, j, self._junk(),
                                    self.targets, delay))
        else:
            for j in self.claimed_source_modes:
                out.append(Emission(self.spoofer, KIND_FLAG, j, FLAG_TRUE,
                                    self.targets, delay))
            for j in self.modes:
                out.append(Emission(self.spoofer, KIND_ESTIMATE, j, self._junk(),
                                    self.targets, delay))
        return out


def policy_actions(policy: SpooferPolicy, view, step: int) -> list:
    """Run one policy step; the engine charges the ledger with the result."""
    return list(policy.emissions(view, step))


POLICY_NAMES = ("silent", "scripted", "dual_sequence", "construction_suppress",
                "random")
