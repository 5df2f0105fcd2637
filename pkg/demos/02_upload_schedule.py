"""
The upload calendar of a tiered deadline scheduler
==================================================

A tier-j client uploads whenever the round index is divisible by j, so the
schedule is periodic with the least common multiple of the tiers present.
This prints the calendar as a grid: one row per client, one column per round.
"""

import math

from tierfed import TierAssignment, clients_due

# six clients whose latencies straddle several deadline multiples
latencies = {0: 4.0, 1: 9.9, 2: 12.5, 3: 21.0, 4: 38.0, 5: 59.0}
tau = 10.0

tiers = TierAssignment.from_latencies(latencies, tau)
print(f"deadline tau = {tau} s")
for cid in sorted(latencies):
    print(f"  client {cid}: {latencies[cid]:5.1f} s -> tier {tiers.tier_of(cid)}")
print()

rounds = range(1, 25)
print("round    " + " ".join(f"{k:2d}" for k in rounds))
for cid in sorted(latencies):
    j = tiers.tier_of(cid)
    marks = " ".join(" ^" if k % j == 0 else " ." for k in rounds)
    print(f"client {cid}  {marks}")
print()

for k in (6, 12, 24):
    print(f"due at round {k}: {clients_due(tiers, k)}")

period = math.lcm(*set(tiers.tiers.values()))
print(f"\nthe whole pattern repeats every lcm{sorted(set(tiers.tiers.values()))} = {period} rounds")
