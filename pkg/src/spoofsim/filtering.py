"""Trimming-based consensus update used by follower nodes.

For each mode it cannot detect, a follower keeps the last value received
from each accepted parent, discards the (beta+1)*f largest and smallest,
and advances the equal-weighted mean of the survivors by the mode
eigenvalue.  If trimming leaves nothing, the estimate is held unchanged;
that hold rule is what freezes under-parented nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyRetainedSet


@dataclass(frozen=True)
class FilterParams:
    """Trim configuration for one mode."""

    f: int                 # local adversary bound
    beta: int              # impersonation budget per update window
    lam: float             # mode eigenvalue
    trim_count: int = None

    def __post_init__(self):
        if self.f < 0 or self.beta < 0:
            raise ValueError("f and beta must be non-negative")
        if self.trim_count is None:
            object.__setattr__(self, "trim_count", (self.beta + 1) * self.f)


@dataclass(frozen=True)
class EstimateSlot:
    """Last estimate packet retained from one sender identity.

    k_tilde counts steps from arrival to the read; tau is the link delay of
    the packet; their sum is the total staleness of the value.
    """

    sender: int
    value: float
    arrival_step: int = 0
    k_tilde: int = 0
    tau: int = 0

    @property
    def staleness(self) -> int:
        return self.k_tilde + self.tau


def _ordered(slots):
    return sorted(slots, key=lambda s: (s.value, s.sender))


def trim_extremes(slots, trim_count: int):
    """Drop the trim_count largest and smallest slot values.

    Ties are broken by sender id so the retained set is deterministic.
    Returns at most max(0, len(slots) - 2*trim_count) slots.
    """
    if trim_count < 0:
        raise ValueError("trim count must be non-negative")
    ordered = _ordered(slots)
    if trim_count == 0:
        return ordered
    if len(ordered) <= 2 * trim_count:
        return []
    return ordered[trim_count:len(ordered) - trim_count]


def make_weights(retained) -> dict:
    """Equal convex weights over the retained senders (sum exactly 1)."""
    if not retained:
        raise EmptyRetainedSet("no slots left after trimming")
    w = 1.0 / len(retained)
    return {slot.sender: w for slot in retained}


def filtered_update(params: FilterParams, slots, current: float) -> float:
    """One consensus step for a follower's mode estimate.

    Returns lam * weighted mean of the retained neighbor values; if
    trimming retains nothing the current estimate is returned unchanged
    (hold rule -- no eigenvalue factor is applied).
    """
    retained = trim_extremes(slots, params.trim_count)
    if not retained:
        return current
    weights = make_weights(retained)
    total = 0.0
    for slot in retained:
        total += weights[slot.sender] * slot.value
    return params.lam * total


def beta_prime(beta: int, k_bar: int) -> int:
    """Effective impersonation budget under randomized update schedules."""
    if beta < 0 or k_bar < 1:
        raise ValueError("need beta >= 0 and k_bar >= 1")
    return beta // k_bar + 1
