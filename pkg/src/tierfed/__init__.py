"""tierfed: a deterministic simulator of wireless federated learning.

Clients are clustered into latency tiers against a round deadline; each
tier uploads at its own cadence and stale updates take proportionally
larger steps. Synchronous (wait-for-all) and deadline-selection baselines
run on the same clock for comparison.
"""

__version__ = "0.1.0"

from .cohort import TierAssignment, assign_tier, clients_due, tier_due
from .data import (
    ClassExhaustedError,
    DatasetShard,
    IdxCountMismatchError,
    IdxError,
    IdxMagicError,
    IdxTruncatedError,
    LabeledData,
    PartitionConfig,
    load_idx,
    load_mnist,
    partition_dirichlet,
    split_pool,
    synth_dataset,
)
from .engine import (
    Algorithm,
    EmptyUploadError,
    RoundRecord,
    RunConfig,
    RunSetup,
    aggregate,
    build_setup,
    evaluate,
    model_digest,
    run,
    write_class_dist_csv,
    write_clients_csv,
    write_round_csv,
)
from .learner import (
    DivergenceError,
    ModelParams,
    ModelSpec,
    SGDConfig,
    init_params,
    local_train,
    loss_and_gradient,
)
from .radio import (
    ChannelParams,
    ClientProfile,
    LatencyBreakdown,
    PathlossModel,
    PopulationConfig,
    UnreachableClientError,
    achievable_rate,
    channel_gain,
    compute_latency,
    dbm_to_watts,
    pathloss_db,
    sample_population,
    total_latency,
    upload_latency,
)

__all__ = [
    "__version__",
    # radio
    "ChannelParams", "ClientProfile", "LatencyBreakdown", "PathlossModel",
    "PopulationConfig", "UnreachableClientError", "achievable_rate",
    "channel_gain", "compute_latency", "dbm_to_watts", "pathloss_db",
    "sample_population", "total_latency", "upload_latency",
    # cohort
    "TierAssignment", "assign_tier", "clients_due", "tier_due",
    # learner
    "DivergenceError", "ModelParams", "ModelSpec", "SGDConfig",
    "init_params", "local_train", "loss_and_gradient",
    # data
    "ClassExhaustedError", "DatasetShard", "IdxCountMismatchError", "IdxError",
    "IdxMagicError", "IdxTruncatedError", "LabeledData", "PartitionConfig",
    "load_idx", "load_mnist", "partition_dirichlet", "split_pool", "synth_dataset",
    # engine
    "Algorithm", "EmptyUploadError", "RoundRecord", "RunConfig", "RunSetup",
    "aggregate", "build_setup", "evaluate", "model_digest", "run",
    "write_class_dist_csv", "write_clients_csv", "write_round_csv",
]
