"""Simulated federated training over a shared clock.

One coordinator owns the global model and the clock. Per round it decides
which clients upload (strategy-dependent), trains each of those from the
global model it last received, averages the results sample-weighted, and
broadcasts the new model back to exactly the uploaders.

Clock semantics differ by strategy: the deadline-driven strategies charge
every round the full deadline; the wait-for-all baseline charges the
slowest client's latency.
"""

from __future__ import annotations

import csv
import hashlib
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .cohort import TierAssignment, clients_due
from .data import (
    DatasetShard,
    LabeledData,
    PartitionConfig,
    partition_dirichlet,
    split_pool,
    synth_dataset,
)
from .learner import (
    DivergenceError,
    ModelParams,
    ModelSpec,
    SGDConfig,
    evaluate as _evaluate_arrays,
    init_params,
    local_train,
)
from .radio import (
    ChannelParams,
    ClientProfile,
    LatencyBreakdown,
    PopulationConfig,
    sample_population,
    total_latency,
)


class Algorithm(Enum):
    LESSON = "lesson"
    FEDAVG = "fedavg"
    FEDCS = "fedcs"


class EmptyUploadError(ValueError):
    """Aggregation was asked to average an empty set of uploads."""


# Named sub-streams of the run seed. Training streams use a fourth word
# (round, client) and deliberately exclude the algorithm, so two strategies
# that schedule the same client at the same round feed it identical batches.
_SS_POPULATION = 1
_SS_DATA = 2
_SS_PARTITION = 3
_SS_INIT = 4
_SS_JITTER = 5
_SS_TRAIN = 9


def _stream(seed: int, *words: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *words]))


@dataclass(frozen=True)
class RunConfig:
    """Everything one experiment run depends on.

    The default partition allows with-replacement fill-in: the default
    synthetic pool is exactly as large as the total demand, so a skewed
    draw will otherwise run a class dry mid-partition.
    """

    algorithm: Algorithm = Algorithm.LESSON
    deadline_s: float | None = 10.0
    num_rounds: int | None = None
    time_budget_s: float | None = None
    rng_seed: int = 0
    channel: ChannelParams = field(default_factory=ChannelParams.from_dbm)
    model: ModelSpec = field(default_factory=lambda: ModelSpec(32, 10))
    sgd: SGDConfig = field(default_factory=SGDConfig)
    partition: PartitionConfig = field(
        default_factory=lambda: PartitionConfig(allow_replacement=True)
    )
    population: PopulationConfig = field(default_factory=PopulationConfig)
    synth_pool_size: int | None = None  # default: num_clients * samples_per_client
    synth_test_size: int = 2000
    eval_stride: int = 1
    latency_jitter_std_s: float = 0.0

    def __post_init__(self) -> None:
        if (self.num_rounds is None) == (self.time_budget_s is None):
            raise ValueError("set exactly one of num_rounds / time_budget_s")
        if self.num_rounds is not None and self.num_rounds < 1:
            raise ValueError(f"num_rounds must be >= 1, got {self.num_rounds}")
        if self.time_budget_s is not None and not self.time_budget_s > 0:
            raise ValueError(f"time_budget_s must be > 0, got {self.time_budget_s}")
        if self.algorithm in (Algorithm.LESSON, Algorithm.FEDCS):
            if self.deadline_s is None or not self.deadline_s > 0:
                raise ValueError(
                    f"{self.algorithm.value} needs a deadline > 0, got {self.deadline_s}"
                )
        if self.eval_stride < 1:
            raise ValueError(f"eval_stride must be >= 1, got {self.eval_stride}")
        if self.latency_jitter_std_s < 0:
            raise ValueError("latency_jitter_std_s must be >= 0")
        if self.partition.num_clients != self.population.num_clients:
            raise ValueError(
                "partition and population disagree on client count: "
                f"{self.partition.num_clients} vs {self.population.num_clients}"
            )


@dataclass(frozen=True)
class RoundRecord:
    """Everything the post-processing pipeline needs about one round."""

    round_index: int
    sim_clock_s: float
    uploader_ids: tuple[int, ...]
    num_uploaders: int
    global_test_accuracy: float | None
    global_test_loss: float | None
    round_latency_s: float
    model_digest: str
    # (client_id, round whose global model that client trained from)
    base_rounds: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class RunSetup:
    """Deterministic pre-round state: population, latencies, tiers, shards."""

    profiles: tuple[ClientProfile, ...]
    breakdowns: Mapping[int, LatencyBreakdown]
    tiers: TierAssignment | None  # None for the wait-for-all baseline
    shards: tuple[DatasetShard, ...]
    test: LabeledData

    @property
    def latencies(self) -> dict[int, float]:
        return {cid: b.total_s for cid, b in self.breakdowns.items()}


def build_setup(
    cfg: RunConfig,
    pool: LabeledData | None = None,
    test: LabeledData | None = None,
) -> RunSetup:
    """Sample the population, compute latencies, assign tiers, cut shards."""
    profiles = sample_population(
        cfg.population,
        cfg.partition.samples_per_client,
        _stream(cfg.rng_seed, _SS_POPULATION),
    )
    breakdowns = {p.id: total_latency(p, cfg.channel) for p in profiles}

    tiers: TierAssignment | None = None
    if cfg.algorithm in (Algorithm.LESSON, Algorithm.FEDCS):
        assert cfg.deadline_s is not None
        latencies = {cid: b.total_s for cid, b in breakdowns.items()}
        tiers = TierAssignment.from_latencies(latencies, cfg.deadline_s)
        if min(tiers.tiers.values()) > 1:
            if cfg.algorithm is Algorithm.FEDCS:
                raise ValueError(
                    f"no client finishes within the deadline ({cfg.deadline_s} s, "
                    f"fastest client {min(latencies.values()):.3f} s); this "
                    "strategy only ever uses such clients — raise the deadline"
                )
            warnings.warn(
                f"deadline {cfg.deadline_s} s is below the fastest client "
                f"({min(latencies.values()):.3f} s); early rounds will have "
                "no uploads",
                RuntimeWarning,
                stacklevel=2,
            )

    if (pool is None) != (test is None):
        raise ValueError("pass both pool and test, or neither")
    if pool is None:
        demand = cfg.partition.num_clients * cfg.partition.samples_per_client
        pool_size = cfg.synth_pool_size if cfg.synth_pool_size is not None else demand
        if pool_size < demand:
            raise ValueError(f"synth_pool_size {pool_size} < partition demand {demand}")
        full = synth_dataset(
            num_classes=cfg.model.num_classes,
            samples=pool_size + cfg.synth_test_size,
            input_dim=cfg.model.input_dim,
            seed=np.random.SeedSequence([cfg.rng_seed, _SS_DATA]),
        )
        pool, test = split_pool(full, cfg.synth_test_size)
    assert test is not None
    if pool.input_dim != cfg.model.input_dim or pool.num_classes != cfg.model.num_classes:
        raise ValueError(
            f"model expects dim={cfg.model.input_dim}, M={cfg.model.num_classes}; "
            f"pool has dim={pool.input_dim}, M={pool.num_classes}"
        )
    if len(test) == 0:
        raise ValueError("test set is empty")

    shards = tuple(
        partition_dirichlet(pool, cfg.partition, rng=_stream(cfg.rng_seed, _SS_PARTITION))
    )
    return RunSetup(
        profiles=tuple(profiles),
        breakdowns=breakdowns,
        tiers=tiers,
        shards=shards,
        test=test,
    )


def aggregate(
    local_models: Sequence[tuple[int, ModelParams, int]],
    due: Iterable[int],
) -> ModelParams:
    """Sample-count-weighted average over exactly the due clients.

    Inputs are consumed in sorted client-id order so the float accumulation
    order — hence the result, bit for bit — does not depend on arrival order.
    """
    due_set = set(due)
    if not due_set:
        raise EmptyUploadError(
            "no client is scheduled to upload: the deadline is shorter than "
            "every client's latency, so the every-round tier is empty — raise "
            "the deadline or provision faster clients"
        )
    supplied = {cid for cid, _, _ in local_models}
    if supplied != due_set:
        missing, extra = due_set - supplied, supplied - due_set
        raise ValueError(f"uploads do not match due set (missing={missing}, extra={extra})")

    ordered = sorted(local_models, key=lambda item: item[0])
    total = float(sum(n for _, _, n in ordered))
    if not total > 0:
        raise ValueError("total sample count of uploads must be positive")

    out = {
        name: np.zeros_like(t) for name, t in ordered[0][1].tensors.items()
    }
    for _, params, n in ordered:
        w = n / total
        for name, tensor in params.tensors.items():
            out[name] += w * tensor
    return ModelParams(ordered[0][1].spec, out)


def evaluate(params: ModelParams, test: LabeledData) -> tuple[float, float]:
    """(top-1 accuracy, mean cross-entropy) of the model on a labeled set."""
    return _evaluate_arrays(params, test.x, test.y)


def model_digest(params: ModelParams) -> str:
    """Short content hash, stable across runs for bit-identical tensors."""
    h = hashlib.sha256()
    for name in sorted(params.tensors):
        h.update(name.encode())
        h.update(np.ascontiguousarray(params.tensors[name]).tobytes())
    return h.hexdigest()[:16]


def _due_clients(cfg: RunConfig, setup: RunSetup, round_index: int) -> tuple[int, ...]:
    if cfg.algorithm is Algorithm.FEDAVG:
        return tuple(p.id for p in setup.profiles)
    assert setup.tiers is not None
    if cfg.algorithm is Algorithm.FEDCS:
        return tuple(cid for cid in sorted(setup.tiers.tiers) if setup.tiers.tiers[cid] == 1)
    return clients_due(setup.tiers, round_index)


def run(
    cfg: RunConfig,
    pool: LabeledData | None = None,
    test: LabeledData | None = None,
    setup: RunSetup | None = None,
) -> list[RoundRecord]:
    """Simulate one experiment and return its per-round record stream.

    The stream is bit-identical across invocations with the same config:
    every random choice comes from a named sub-stream of ``cfg.rng_seed``.
    """
    if setup is None:
        setup = build_setup(cfg, pool, test)
    shards = {s.client_id: s for s in setup.shards}
    latencies = setup.latencies

    global_params = init_params(cfg.model, _stream(cfg.rng_seed, _SS_INIT))
    digest = model_digest(global_params)
    # What each client holds: the newest global model it ever received,
    # tagged with the round that produced it. Round 0 is the initial model.
    base_params: dict[int, ModelParams] = {p.id: global_params for p in setup.profiles}
    base_round: dict[int, int] = {p.id: 0 for p in setup.profiles}

    jitter_rng = (
        _stream(cfg.rng_seed, _SS_JITTER) if cfg.latency_jitter_std_s > 0 else None
    )
    fedavg_round_len = max(latencies.values())

    records: list[RoundRecord] = []
    clock = 0.0
    k = 0
    while True:
        k += 1
        if cfg.num_rounds is not None and k > cfg.num_rounds:
            break

        # --- realized latencies and the round's wall length --------------
        realized = dict(latencies)
        if jitter_rng is not None:
            noise = jitter_rng.normal(0.0, cfg.latency_jitter_std_s, len(realized))
            for cid, eps in zip(sorted(realized), noise):
                realized[cid] = max(realized[cid] + eps, 1e-9)

        if cfg.algorithm is Algorithm.FEDAVG:
            round_len = max(realized.values()) if jitter_rng is not None else fedavg_round_len
        else:
            assert cfg.deadline_s is not None
            round_len = cfg.deadline_s

        if cfg.time_budget_s is not None and clock + round_len > cfg.time_budget_s:
            break
        clock = round_len * k if jitter_rng is None else clock + round_len

        # --- who uploads this round ---------------------------------------
        due = _due_clients(cfg, setup, k)
        if jitter_rng is not None and setup.tiers is not None:
            budget = {
                cid: setup.tiers.tier_of(cid) * cfg.deadline_s
                if cfg.algorithm is Algorithm.LESSON
                else cfg.deadline_s
                for cid in due
            }
            due = tuple(cid for cid in due if realized[cid] <= budget[cid])

        # --- local training -----------------------------------------------
        uploads: list[tuple[int, ModelParams, int]] = []
        bases: list[tuple[int, int]] = []
        for cid in due:
            staleness = k - base_round[cid]
            shard = shards[cid]
            try:
                trained = local_train(
                    base_params[cid],
                    shard.x,
                    shard.y,
                    cfg.sgd,
                    _stream(cfg.rng_seed, _SS_TRAIN, k, cid),
                    step_scale=float(staleness),
                )
            except DivergenceError as err:
                raise DivergenceError(f"round {k}, client {cid}: {err}") from err
            uploads.append((cid, trained, len(shard)))
            bases.append((cid, base_round[cid]))

        # --- aggregate + broadcast (or a no-op round) -----------------------
        if uploads:
            global_params = aggregate(uploads, due)
            digest = model_digest(global_params)
            for cid in due:
                base_params[cid] = global_params
                base_round[cid] = k

        acc = loss = None
        if k % cfg.eval_stride == 0:
            acc, loss = evaluate(global_params, setup.test)

        records.append(
            RoundRecord(
                round_index=k,
                sim_clock_s=clock,
                uploader_ids=due,
                num_uploaders=len(due),
                global_test_accuracy=acc,
                global_test_loss=loss,
                round_latency_s=round_len,
                model_digest=digest,
                base_rounds=tuple(bases),
            )
        )
    return records


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

ROUND_CSV_COLUMNS = (
    "round",
    "sim_time_s",
    "n_uploaders",
    "accuracy",
    "loss",
    "algo",
    "tau",
    "beta",
    "seed",
)


def write_round_csv(records: Sequence[RoundRecord], cfg: RunConfig, path: str | Path) -> None:
    """One row per round, with the run's identity repeated on every row."""
    tau = "" if cfg.deadline_s is None else repr(cfg.deadline_s)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ROUND_CSV_COLUMNS)
        for r in records:
            w.writerow(
                [
                    r.round_index,
                    repr(r.sim_clock_s),
                    r.num_uploaders,
                    "" if r.global_test_accuracy is None else repr(r.global_test_accuracy),
                    "" if r.global_test_loss is None else repr(r.global_test_loss),
                    cfg.algorithm.value,
                    tau,
                    repr(cfg.partition.beta),
                    cfg.rng_seed,
                ]
            )


CLIENTS_CSV_COLUMNS = (
    "client_id",
    "distance_km",
    "cpu_freq_hz",
    "cycles_per_sample",
    "num_samples",
    "compute_s",
    "upload_s",
    "total_s",
    "tier",
)


def write_clients_csv(setup: RunSetup, path: str | Path) -> None:
    """Per-client geometry, latency split, and tier (blank without tiers)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CLIENTS_CSV_COLUMNS)
        for p in setup.profiles:
            b = setup.breakdowns[p.id]
            tier = "" if setup.tiers is None else setup.tiers.tier_of(p.id)
            w.writerow(
                [
                    p.id,
                    repr(p.distance_km),
                    repr(p.cpu_freq_hz),
                    repr(p.cycles_per_sample),
                    p.num_samples,
                    repr(b.compute_s),
                    repr(b.upload_s),
                    repr(b.total_s),
                    tier,
                ]
            )


CLASS_DIST_CSV_COLUMNS = ("client_id", "label", "count")


def write_class_dist_csv(setup: RunSetup, path: str | Path) -> None:
    """Long-format per-client class census for distribution plots."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CLASS_DIST_CSV_COLUMNS)
        for shard in setup.shards:
            for label, count in enumerate(shard.class_histogram):
                w.writerow([shard.client_id, label, int(count)])
