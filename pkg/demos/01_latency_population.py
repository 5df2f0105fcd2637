"""
Where round time goes: per-client latency in a simulated cell
=============================================================

Samples a 50-client population, splits each client's latency into compute
and upload, and shows how the deadline carves the population into tiers.
"""

import numpy as np

from tierfed import ChannelParams, PopulationConfig, TierAssignment, sample_population, total_latency

chan = ChannelParams.from_dbm()  # 30 kHz per client, -94 dBm noise, 100 kbit model
clients = sample_population(PopulationConfig(), samples_per_client=1000,
                            rng=np.random.default_rng(7))

breakdowns = {c.id: total_latency(c, chan) for c in clients}
totals = sorted(b.total_s for b in breakdowns.values())

print("latency over 50 clients (seconds)")
print(f"  fastest {totals[0]:7.2f}")
print(f"  median  {totals[len(totals) // 2]:7.2f}")
print(f"  slowest {totals[-1]:7.2f}")
print()

# the slowest client decides the round time for a wait-for-all server;
# see who it is and why it is slow
slowest = max(clients, key=lambda c: breakdowns[c.id].total_s)
b = breakdowns[slowest.id]
print(f"client {slowest.id} is the straggler:")
print(f"  {slowest.distance_km:.2f} km from the base station")
print(f"  {slowest.cpu_freq_hz / 1e9:.2f} GHz CPU")
print(f"  compute {b.compute_s:.2f} s + upload {b.upload_s:.2f} s = {b.total_s:.2f} s")
print()

# a deadline puts every client into the tier that covers its latency:
# tier j finishes within j deadlines and uploads every j-th round
for tau in (10.0, 20.0, 60.0):
    tiers = TierAssignment.from_latencies({c.id: breakdowns[c.id].total_s for c in clients}, tau)
    counts: dict[int, int] = {}
    for j in tiers.tiers.values():
        counts[j] = counts.get(j, 0) + 1
    row = "  ".join(f"tier {j}: {counts[j]:2d}" for j in sorted(counts))
    print(f"tau = {tau:5.1f} s  ->  {row}")
