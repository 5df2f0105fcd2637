"""Tier assignment and upload schedule: boundaries, algebra, periodicity."""

import math

import numpy as np
import pytest

from tierfed.cohort import TierAssignment, assign_tier, clients_due, tier_due


# ---------------------------------------------------------------------------
# assign_tier boundaries
# ---------------------------------------------------------------------------


def test_boundary_is_inclusive_above():
    assert assign_tier(10.0, 10.0) == 1


def test_just_past_boundary_moves_up():
    assert assign_tier(10.01, 10.0) == 2


def test_interior_point():
    assert assign_tier(25.0, 10.0) == 3  # 20 < 25 <= 30


def test_assign_tier_rejects_bad_inputs():
    with pytest.raises(ValueError):
        assign_tier(0.0, 10.0)
    with pytest.raises(ValueError):
        assign_tier(float("nan"), 10.0)
    with pytest.raises(ValueError):
        assign_tier(float("inf"), 10.0)
    with pytest.raises(ValueError):
        assign_tier(5.0, 0.0)


def test_assign_tier_defining_inequality_holds_in_floating_point():
    """The recorded invariant tau*(j-1) < t <= tau*j must hold exactly,
    including latencies produced as float multiples of the deadline."""
    rng = np.random.default_rng(17)
    for _ in range(2000):
        tau = float(rng.uniform(0.05, 40.0))
        if rng.random() < 0.5:
            t = float(rng.integers(1, 12)) * tau  # exact-multiple stress
        else:
            t = float(rng.uniform(1e-6, 12 * tau))
        j = assign_tier(t, tau)
        assert j >= 1
        assert tau * (j - 1) < t <= tau * j


def test_assign_tier_single_valued():
    # totality + uniqueness: the defining inequality pins j
    for t in (0.1, 9.999, 10.0, 10.000001, 199.5):
        j = assign_tier(t, 10.0)
        others = [i for i in range(1, 25) if 10.0 * (i - 1) < t <= 10.0 * i]
        assert others == [j]


# ---------------------------------------------------------------------------
# tier_due
# ---------------------------------------------------------------------------


def test_tier_due_divisibility():
    assert tier_due(2, 4)
    assert not tier_due(3, 4)


def test_tier_one_always_due():
    assert all(tier_due(1, k) for k in range(1, 100))


def test_tier_due_rejects_bad_indices():
    with pytest.raises(ValueError):
        tier_due(0, 1)
    with pytest.raises(ValueError):
        tier_due(1, 0)


# ---------------------------------------------------------------------------
# TierAssignment / clients_due
# ---------------------------------------------------------------------------


def test_clients_due_examples():
    assign = TierAssignment(deadline_s=10.0, tiers={0: 1, 1: 2, 2: 4})
    assert clients_due(assign, 4) == (0, 1, 2)
    assert clients_due(assign, 3) == (0,)


def test_all_tier_one_schedules_everyone():
    assign = TierAssignment(deadline_s=10.0, tiers={i: 1 for i in range(20)})
    for k in (1, 2, 7, 63):
        assert clients_due(assign, k) == tuple(range(20))


def test_from_latencies_records_consistent_tiers():
    rng = np.random.default_rng(5)
    latencies = {i: float(rng.uniform(0.5, 90.0)) for i in range(200)}
    assign = TierAssignment.from_latencies(latencies, 10.0)
    assert set(assign.tiers) == set(latencies)
    for cid, t in latencies.items():
        j = assign.tiers[cid]
        assert 10.0 * (j - 1) < t <= 10.0 * j
    assert assign.max_tier == max(assign.tiers.values())


def test_empty_assignment_rejected():
    with pytest.raises(ValueError):
        TierAssignment(deadline_s=10.0, tiers={})


def test_tier_one_subset_of_every_round():
    assign = TierAssignment(deadline_s=5.0, tiers={0: 1, 1: 1, 2: 3, 3: 5})
    for k in range(1, 40):
        due = clients_due(assign, k)
        assert 0 in due and 1 in due


def test_deadline_above_max_latency_puts_everyone_in_tier_one():
    latencies = {i: 1.0 + i for i in range(10)}  # max 10.0
    assign = TierAssignment.from_latencies(latencies, 10.0)
    assert set(assign.tiers.values()) == {1}
    for k in range(1, 12):
        assert clients_due(assign, k) == tuple(range(10))


def test_tier_monotone_in_deadline():
    rng = np.random.default_rng(11)
    for _ in range(300):
        t = float(rng.uniform(0.1, 100.0))
        tau1 = float(rng.uniform(0.5, 30.0))
        tau2 = tau1 + float(rng.uniform(0.0, 30.0))
        assert assign_tier(t, tau2) <= assign_tier(t, tau1)


def test_schedule_periodic_at_lcm():
    tiers = {0: 1, 1: 2, 2: 3, 3: 4, 4: 6}
    assign = TierAssignment(deadline_s=10.0, tiers=tiers)
    period = math.lcm(*tiers.values())
    for k in range(1, 2 * period):
        assert clients_due(assign, k) == clients_due(assign, k + period)


def test_exhaustive_schedule_algebra_tiers_1_to_8():
    """One client per tier 1..8; rounds 1..64 checked against divisibility,
    the tier-product identity, boundary cases, and lcm periodicity."""
    tau = 10.0
    # client j-1 sits exactly on the tier-j upper boundary
    latencies = {j - 1: tau * j for j in range(1, 9)}
    assign = TierAssignment.from_latencies(latencies, tau)
    assert [assign.tiers[j - 1] for j in range(1, 9)] == list(range(1, 9))
    # ...and epsilon past the boundary lands one tier up
    for j in range(1, 9):
        assert assign_tier(tau * j + 1e-9, tau) == j + 1

    period = math.lcm(*range(1, 9))  # 840
    for k in range(1, 65):
        due = clients_due(assign, k)
        # z_ik = x_ij * y_jk: client (j-1) due iff its tier divides k
        expect = tuple(j - 1 for j in range(1, 9) if k % j == 0)
        assert due == expect
        for j in range(1, 9):
            assert tier_due(j, k) == (k % j == 0)
        assert clients_due(assign, k + period) == due
