"""Latency-tier clustering and the upload schedule it induces.

Clients are bucketed by how many deadline windows their per-iteration
latency spans: tier j holds the clients with tau*(j-1) < t <= tau*j.
Tier-j clients upload every j-th global round, so round k collects
exactly the clients whose tier divides k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping


def assign_tier(latency_s: float, deadline_s: float) -> int:
    """Tier index j >= 1 with deadline*(j-1) < latency <= deadline*j.

    The upper boundary is inclusive: a client finishing exactly at the
    deadline multiple belongs to the lower tier.
    """
    if not math.isfinite(latency_s):
        raise ValueError(f"latency must be finite, got {latency_s!r}")
    if latency_s <= 0:
        raise ValueError(f"latency must be > 0, got {latency_s!r}")
    if not math.isfinite(deadline_s) or deadline_s <= 0:
        raise ValueError(f"deadline must be finite and > 0, got {deadline_s!r}")
    j = max(1, math.ceil(latency_s / deadline_s))
    # ceil on the float quotient can land one off when latency is an exact
    # multiple of the deadline; nudge until the defining inequality holds.
    while j > 1 and deadline_s * (j - 1) >= latency_s:
        j -= 1
    while deadline_s * j < latency_s:
        j += 1
    return j


def tier_due(tier: int, round_index: int) -> bool:
    """Whether tier-`tier` clients upload at the end of round `round_index`."""
    if tier < 1:
        raise ValueError(f"tier must be >= 1, got {tier!r}")
    if round_index < 1:
        raise ValueError(f"round_index must be >= 1, got {round_index!r}")
    return round_index % tier == 0


@dataclass(frozen=True)
class TierAssignment:
    """Immutable client -> tier map for one deadline.

    Built once at simulation start; the schedule never re-clusters mid-run.
    """

    deadline_s: float
    tiers: Mapping[int, int]
    max_tier: int = field(init=False)

    def __post_init__(self) -> None:
        if not self.tiers:
            raise ValueError("tier assignment must cover at least one client")
        object.__setattr__(self, "tiers", dict(self.tiers))
        object.__setattr__(self, "max_tier", max(self.tiers.values()))

    @classmethod
    def from_latencies(
        cls, latencies: Mapping[int, float], deadline_s: float
    ) -> "TierAssignment":
        tiers = {cid: assign_tier(t, deadline_s) for cid, t in latencies.items()}
        return cls(deadline_s=deadline_s, tiers=tiers)

    def tier_of(self, client_id: int) -> int:
        return self.tiers[client_id]


def clients_due(assign: TierAssignment, round_index: int) -> tuple[int, ...]:
    """Client ids scheduled to upload at round `round_index`, sorted by id."""
    return tuple(
        cid for cid in sorted(assign.tiers)
        if tier_due(assign.tiers[cid], round_index)
    )
