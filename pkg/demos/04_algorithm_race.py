"""
Three schedulers, one clock
===========================

The same population, data, and model under three strategies:

  lesson  semi-synchronous: tier-j clients upload every j rounds, deadline tau
  fedavg  synchronous: everyone uploads every round, rounds last max latency
  fedcs   deadline filter: only clients faster than tau ever participate

Accuracy is compared at equal *simulated time*, which is the fair axis when
rounds have different lengths.
"""

from tierfed import Algorithm, PartitionConfig, PopulationConfig, RunConfig, run

def race_cfg(algo: Algorithm) -> RunConfig:
    return RunConfig(
        algorithm=algo,
        deadline_s=None if algo is Algorithm.FEDAVG else 15.0,
        time_budget_s=1500.0,
        rng_seed=5,
        partition=PartitionConfig(beta=0.3, num_clients=15, samples_per_client=400,
                                  allow_replacement=True),
        population=PopulationConfig(num_clients=15),
        synth_test_size=1000,
    )

curves = {algo: run(race_cfg(algo)) for algo in Algorithm}

def accuracy_at(records, t):
    best = None
    for rec in records:
        if rec.sim_clock_s > t:
            break
        best = rec.global_test_accuracy
    return "      —" if best is None else f"{best:7.4f}"  # — = no round done yet

print("simulated   lesson   fedavg    fedcs")
for t in (60, 150, 300, 600, 1200):
    row = "  ".join(accuracy_at(curves[a], t) for a in Algorithm)
    print(f"{t:6d} s   {row}")

print()
for algo in Algorithm:
    n = len(curves[algo])
    per_round = curves[algo][0].round_latency_s
    print(f"{algo.value:7s} completed {n:3d} rounds of {per_round:6.2f} s each")
