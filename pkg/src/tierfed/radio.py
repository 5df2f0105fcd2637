"""Per-client latency model: local training time plus uplink transfer time.

A client's per-iteration latency is the sum of its computing latency
(CPU cycles needed to fit the local model over its shard) and its
uploading latency (model size over the Shannon rate of its uplink).
All functions here are pure; latencies are computed once per population
and held fixed for the whole simulated run.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class PathlossModel(enum.Enum):
    """Distance-to-pathloss mapping for the uplink.

    LOG10_DISTANCE is the standard macro-cell form 128.1 + 37.6*log10(d_km).
    VERBATIM_LINEAR is the literal linear form 128.1 + 37.6*d_km, kept as a
    configuration option; at d > 1 km it attenuates so hard that uploads take
    days, so it is not the default.
    """

    LOG10_DISTANCE = "log10"
    VERBATIM_LINEAR = "linear"


class UnreachableClientError(ValueError):
    """Raised when a client's achievable uplink rate is zero."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class ChannelParams:
    """Uplink parameters shared by every client.

    bandwidth_per_client_hz: bandwidth allocated to each uploading client.
    noise_power_w: total noise-plus-interference power over that band, in
        watts (configs usually speak dBm; see `from_dbm`).
    model_size_bits: size of one serialized local model.
    """

    bandwidth_per_client_hz: float
    noise_power_w: float
    model_size_bits: float
    pathloss_model: PathlossModel = PathlossModel.LOG10_DISTANCE

    def __post_init__(self) -> None:
        for name in ("bandwidth_per_client_hz", "noise_power_w", "model_size_bits"):
            value = getattr(self, name)
            _require_finite(name, value)
            if value <= 0:
                raise ValueError(f"{name} must be > 0, got {value!r}")

    @classmethod
    def from_dbm(
        cls,
        bandwidth_per_client_hz: float = 30e3,
        noise_dbm: float = -94.0,
        model_size_bits: float = 100e3,
        pathloss_model: PathlossModel = PathlossModel.LOG10_DISTANCE,
    ) -> "ChannelParams":
        """Build channel parameters with the noise figure given in dBm.

        Defaults are the survey-standard simulation values: 30 kHz per
        client, −94 dBm noise, 100 kbit model.
        """
        return cls(
            bandwidth_per_client_hz=bandwidth_per_client_hz,
            noise_power_w=dbm_to_watts(noise_dbm),
            model_size_bits=model_size_bits,
            pathloss_model=pathloss_model,
        )


@dataclass(frozen=True)
class ClientProfile:
    """One simulated device.

    local_iter_factor and target_accuracy parameterize the number of local
    passes assumed by the computing-latency estimate; that count may be
    non-integer and is deliberately decoupled from the learner's actual
    epoch count.
    """

    id: int
    distance_km: float
    tx_power_w: float
    cpu_freq_hz: float
    cycles_per_sample: float
    num_samples: int
    local_iter_factor: float = 1.0
    target_accuracy: float = 0.05

    def __post_init__(self) -> None:
        for name in ("distance_km", "tx_power_w", "cpu_freq_hz",
                     "cycles_per_sample", "local_iter_factor", "target_accuracy"):
            _require_finite(name, getattr(self, name))
        if self.distance_km < 0:
            raise ValueError(f"distance_km must be >= 0, got {self.distance_km!r}")
        # tx_power_w == 0 is allowed: it models an unreachable client.
        if self.tx_power_w < 0:
            raise ValueError(f"tx_power_w must be >= 0, got {self.tx_power_w!r}")
        for name in ("cpu_freq_hz", "cycles_per_sample", "local_iter_factor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if not 0 < self.target_accuracy < 1:
            raise ValueError(f"target_accuracy must be in (0, 1), got {self.target_accuracy!r}")
        if self.num_samples < 1:
            raise ValueError(f"num_samples must be >= 1, got {self.num_samples!r}")


@dataclass(frozen=True)
class LatencyBreakdown:
    compute_s: float
    upload_s: float
    total_s: float

    def __post_init__(self) -> None:
        if self.compute_s < 0 or self.upload_s < 0:
            raise ValueError("latency components must be >= 0")
        if self.total_s != self.compute_s + self.upload_s:
            raise ValueError("total_s must equal compute_s + upload_s")


def compute_latency(client: ClientProfile) -> float:
    """Local training latency in seconds.

    The pass count is local_iter_factor * log2(1 / target_accuracy); each
    pass costs cycles_per_sample * num_samples CPU cycles.
    """
    num_passes = client.local_iter_factor * math.log2(1.0 / client.target_accuracy)
    return num_passes * client.cycles_per_sample * client.num_samples / client.cpu_freq_hz


def pathloss_db(distance_km: float, model: PathlossModel) -> float:
    """Uplink pathloss in dB at the given distance."""
    _require_finite("distance_km", distance_km)
    if distance_km < 0:
        raise ValueError(f"distance_km must be >= 0, got {distance_km!r}")
    if model is PathlossModel.VERBATIM_LINEAR:
        return 128.1 + 37.6 * distance_km
    if distance_km == 0:
        raise ValueError("log-distance pathloss is singular at distance 0")
    return 128.1 + 37.6 * math.log10(distance_km)


def channel_gain(distance_km: float, model: PathlossModel) -> float:
    return 10.0 ** (-pathloss_db(distance_km, model) / 10.0)


def achievable_rate(client: ClientProfile, chan: ChannelParams) -> float:
    """Shannon rate of the client's uplink, in bits per second."""
    gain = channel_gain(client.distance_km, chan.pathloss_model)
    snr = client.tx_power_w * gain / chan.noise_power_w
    return chan.bandwidth_per_client_hz * math.log2(1.0 + snr)


def upload_latency(client: ClientProfile, chan: ChannelParams) -> float:
    """Seconds to push one local model through the uplink."""
    rate = achievable_rate(client, chan)
    if rate <= 0:
        raise UnreachableClientError(
            f"client {client.id} has zero uplink rate "
            f"(tx_power={client.tx_power_w} W, distance={client.distance_km} km)"
        )
    return chan.model_size_bits / rate


def total_latency(client: ClientProfile, chan: ChannelParams) -> LatencyBreakdown:
    comp = compute_latency(client)
    up = upload_latency(client, chan)
    return LatencyBreakdown(compute_s=comp, upload_s=up, total_s=comp + up)


@dataclass(frozen=True)
class PopulationConfig:
    """Distributions the client population is drawn from.

    Distances are drawn uniformly in [0, cell_radius_km]; CPU cost per sample
    and CPU frequency are drawn uniformly from their ranges. The remaining
    fields are shared by every client.
    """

    num_clients: int = 50
    cell_radius_km: float = 2.0
    tx_power_w: float = 1.0
    cycles_per_sample_range: tuple[float, float] = (3e5, 5e5)
    cpu_freq_hz_range: tuple[float, float] = (0.8e9, 3.0e9)
    local_iter_factor: float = 1.0
    target_accuracy: float = 0.05

    def __post_init__(self) -> None:
        if self.num_clients < 1:
            raise ValueError("num_clients must be >= 1")
        if self.cell_radius_km <= 0:
            raise ValueError("cell_radius_km must be > 0")
        for name in ("cycles_per_sample_range", "cpu_freq_hz_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise ValueError(f"{name} must satisfy 0 < lo <= hi")


# Clients essentially on top of the base station get clipped to a 10 cm
# standoff so the log-distance pathloss stays defined.
_MIN_DISTANCE_KM = 1e-4


def sample_population(
    cfg: PopulationConfig,
    samples_per_client: int,
    rng: np.random.Generator,
) -> list[ClientProfile]:
    """Draw a fixed client population from the configured distributions."""
    n = cfg.num_clients
    distances = np.maximum(rng.uniform(0.0, cfg.cell_radius_km, n), _MIN_DISTANCE_KM)
    cycles = rng.uniform(*cfg.cycles_per_sample_range, n)
    freqs = rng.uniform(*cfg.cpu_freq_hz_range, n)
    return [
        ClientProfile(
            id=i,
            distance_km=float(distances[i]),
            tx_power_w=cfg.tx_power_w,
            cpu_freq_hz=float(freqs[i]),
            cycles_per_sample=float(cycles[i]),
            num_samples=samples_per_client,
            local_iter_factor=cfg.local_iter_factor,
            target_accuracy=cfg.target_accuracy,
        )
        for i in range(n)
    ]
