"""Latency-model tests: hand-frozen oracles, invariants, population stats."""

import math

import numpy as np
import pytest

from tierfed.radio import (
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

LOG2_20 = 4.321928094887363  # passes implied by the default 5% target accuracy

# Worked example, frozen from an independent calculator run: a client at the
# distance where log-distance pathloss hits 133.7 dB, Table-I channel.
EXAMPLE_DISTANCE_KM = 10.0 ** (5.6 / 37.6)
EXAMPLE_RATE_BPS = 4405.596348494784
EXAMPLE_UPLOAD_S = 22.698402688245825
EXAMPLE_COMPUTE_S = 0.8643856189774726
EXAMPLE_TOTAL_S = 23.562788307223297


def make_client(**kw) -> ClientProfile:
    base = dict(
        id=0,
        distance_km=1.0,
        tx_power_w=1.0,
        cpu_freq_hz=2e9,
        cycles_per_sample=4e5,
        num_samples=1000,
    )
    base.update(kw)
    return ClientProfile(**base)


def default_channel(**kw) -> ChannelParams:
    base = dict(bandwidth_per_client_hz=30e3, noise_dbm=-94.0, model_size_bits=100e3)
    base.update(kw)
    return ChannelParams.from_dbm(**base)


# ---------------------------------------------------------------------------
# dBm conversion
# ---------------------------------------------------------------------------


def test_dbm_to_watts_known_points():
    assert dbm_to_watts(-94.0) == 10.0**-12.4
    assert dbm_to_watts(0.0) == 1e-3
    assert dbm_to_watts(30.0) == 1.0


# ---------------------------------------------------------------------------
# compute latency
# ---------------------------------------------------------------------------


def test_compute_latency_table_values():
    client = make_client()
    got = compute_latency(client)
    assert got == pytest.approx(EXAMPLE_COMPUTE_S, rel=1e-12)
    assert got == pytest.approx(0.8644, abs=5e-5)


def test_compute_latency_unit_case():
    # half-accuracy target means exactly one pass; cycles demand == frequency
    client = make_client(cycles_per_sample=1e6, num_samples=1000, cpu_freq_hz=1e9,
                         target_accuracy=0.5)
    assert compute_latency(client) == 1.0


def test_compute_latency_inverse_in_frequency():
    rng = np.random.default_rng(7)
    for _ in range(20):
        f = float(rng.uniform(0.5e9, 4e9))
        slow = make_client(cpu_freq_hz=f)
        fast = make_client(cpu_freq_hz=2 * f)
        assert compute_latency(fast) == pytest.approx(compute_latency(slow) / 2, rel=1e-12)


def test_compute_latency_homogeneous_in_workload():
    base = make_client()
    scaled = make_client(cycles_per_sample=base.cycles_per_sample * 3.5)
    assert compute_latency(scaled) == pytest.approx(3.5 * compute_latency(base), rel=1e-12)


# ---------------------------------------------------------------------------
# pathloss / gain
# ---------------------------------------------------------------------------


def test_pathloss_linear_at_1km():
    assert pathloss_db(1.0, PathlossModel.VERBATIM_LINEAR) == pytest.approx(165.7, abs=1e-12)


def test_pathloss_log_at_1km():
    assert pathloss_db(1.0, PathlossModel.LOG10_DISTANCE) == pytest.approx(128.1, abs=1e-12)


def test_pathloss_log_at_100m():
    assert pathloss_db(0.1, PathlossModel.LOG10_DISTANCE) == pytest.approx(90.5, abs=1e-12)


def test_pathloss_log_rejects_zero_distance():
    with pytest.raises(ValueError):
        pathloss_db(0.0, PathlossModel.LOG10_DISTANCE)
    # the linear form is defined at zero
    assert pathloss_db(0.0, PathlossModel.VERBATIM_LINEAR) == pytest.approx(128.1)


def test_pathloss_rejects_bad_distance():
    with pytest.raises(ValueError):
        pathloss_db(-1.0, PathlossModel.LOG10_DISTANCE)
    with pytest.raises(ValueError):
        pathloss_db(float("nan"), PathlossModel.VERBATIM_LINEAR)


def test_channel_gain_is_inverse_pathloss():
    for d in (0.2, 1.0, 1.9):
        pl = pathloss_db(d, PathlossModel.LOG10_DISTANCE)
        assert channel_gain(d, PathlossModel.LOG10_DISTANCE) == pytest.approx(
            10 ** (-pl / 10), rel=1e-15
        )


# ---------------------------------------------------------------------------
# rate / upload
# ---------------------------------------------------------------------------


def test_achievable_rate_worked_example():
    client = make_client(distance_km=EXAMPLE_DISTANCE_KM)
    chan = default_channel()
    rate = achievable_rate(client, chan)
    assert rate == pytest.approx(EXAMPLE_RATE_BPS, rel=1e-9)
    assert rate == pytest.approx(4405.8, rel=1e-3)


def test_achievable_rate_zero_power():
    assert achievable_rate(make_client(tx_power_w=0.0), default_channel()) == 0.0


def test_achievable_rate_increases_with_power():
    chan = default_channel()
    rates = [achievable_rate(make_client(tx_power_w=p), chan) for p in (0.25, 0.5, 1.0, 2.0)]
    assert all(a < b for a, b in zip(rates, rates[1:]))


def test_upload_latency_worked_example():
    client = make_client(distance_km=EXAMPLE_DISTANCE_KM)
    got = upload_latency(client, default_channel())
    assert got == pytest.approx(EXAMPLE_UPLOAD_S, rel=1e-9)
    assert got == pytest.approx(22.70, abs=0.01)


def test_upload_latency_unit_ratio():
    # pick transmit power so the SNR is exactly 1: rate = b * log2(2) = b
    chan = default_channel(bandwidth_per_client_hz=100e3, model_size_bits=100e3)
    gain = channel_gain(1.0, PathlossModel.LOG10_DISTANCE)
    client = make_client(tx_power_w=chan.noise_power_w / gain)
    assert upload_latency(client, chan) == pytest.approx(1.0, rel=1e-12)


def test_upload_latency_linear_in_model_size():
    client = make_client(distance_km=1.3)
    small = default_channel(model_size_bits=100e3)
    large = default_channel(model_size_bits=200e3)
    assert upload_latency(client, large) == pytest.approx(
        2 * upload_latency(client, small), rel=1e-12
    )


def test_upload_latency_unreachable_client():
    with pytest.raises(UnreachableClientError):
        upload_latency(make_client(tx_power_w=0.0), default_channel())


def test_upload_latency_decreases_with_distance():
    chan = default_channel()
    distances = (1.9, 1.0, 0.5, 0.1, 0.01)
    ups = [upload_latency(make_client(distance_km=d), chan) for d in distances]
    assert all(a > b for a, b in zip(ups, ups[1:]))


def test_verbatim_linear_model_is_impractical_beyond_1km():
    """The literal linear pathloss makes a 2 km upload take days."""
    client = make_client(distance_km=2.0)
    chan = default_channel(pathloss_model=PathlossModel.VERBATIM_LINEAR)
    assert upload_latency(client, chan) > 1e6


# ---------------------------------------------------------------------------
# total latency
# ---------------------------------------------------------------------------


def test_total_latency_worked_example():
    client = make_client(distance_km=EXAMPLE_DISTANCE_KM)
    breakdown = total_latency(client, default_channel())
    assert breakdown.total_s == breakdown.compute_s + breakdown.upload_s
    assert breakdown.total_s == pytest.approx(EXAMPLE_TOTAL_S, rel=1e-9)
    assert breakdown.total_s == pytest.approx(23.57, abs=0.01)


def test_total_latency_pure():
    client = make_client(distance_km=0.7)
    chan = default_channel()
    assert total_latency(client, chan) == total_latency(client, chan)


def test_latency_breakdown_rejects_inconsistent_total():
    with pytest.raises(ValueError):
        LatencyBreakdown(compute_s=1.0, upload_s=2.0, total_s=3.5)
    with pytest.raises(ValueError):
        LatencyBreakdown(compute_s=-0.1, upload_s=0.1, total_s=0.0)


# ---------------------------------------------------------------------------
# construction invariants
# ---------------------------------------------------------------------------


def test_client_profile_rejects_bad_fields():
    for kw in (
        dict(distance_km=-0.1),
        dict(tx_power_w=-1.0),
        dict(cpu_freq_hz=0.0),
        dict(cycles_per_sample=-1.0),
        dict(num_samples=0),
        dict(target_accuracy=0.0),
        dict(target_accuracy=1.0),
        dict(distance_km=float("inf")),
    ):
        with pytest.raises(ValueError):
            make_client(**kw)


def test_channel_params_rejects_bad_fields():
    for kw in (
        dict(bandwidth_per_client_hz=0.0),
        dict(noise_power_w=-1e-12),
        dict(model_size_bits=0.0),
        dict(bandwidth_per_client_hz=float("nan")),
    ):
        base = dict(bandwidth_per_client_hz=30e3, noise_power_w=1e-12, model_size_bits=1e5)
        base.update(kw)
        with pytest.raises(ValueError):
            ChannelParams(**base)


# ---------------------------------------------------------------------------
# population statistics
# ---------------------------------------------------------------------------


def test_population_latencies_match_survey_shape():
    """10^4 sampled clients: median near 10 s, coarse histogram unimodal."""
    cfg = PopulationConfig(num_clients=10_000)
    chan = default_channel()
    rng = np.random.default_rng(12345)
    profiles = sample_population(cfg, 1000, rng)
    lat = np.array([total_latency(p, chan).total_s for p in profiles])

    med = float(np.median(lat))
    assert 5.0 <= med <= 20.0
    assert med == pytest.approx(7.75481157602686, rel=1e-12)  # determinism pin

    hist, _ = np.histogram(lat, bins=np.arange(0.0, 101.0, 10.0))
    assert hist.sum() == len(lat)  # nothing beyond 100 s
    peak = int(hist.argmax())
    assert all(hist[i] <= hist[i + 1] for i in range(peak))
    assert all(hist[i] >= hist[i + 1] for i in range(peak, len(hist) - 1))


def test_population_respects_configured_ranges():
    cfg = PopulationConfig(num_clients=500)
    profiles = sample_population(cfg, 777, np.random.default_rng(3))
    assert len(profiles) == 500
    assert [p.id for p in profiles] == list(range(500))
    for p in profiles:
        assert 0.0 < p.distance_km <= cfg.cell_radius_km
        assert cfg.cycles_per_sample_range[0] <= p.cycles_per_sample <= cfg.cycles_per_sample_range[1]
        assert cfg.cpu_freq_hz_range[0] <= p.cpu_freq_hz <= cfg.cpu_freq_hz_range[1]
        assert p.num_samples == 777
        assert p.tx_power_w == cfg.tx_power_w


def test_population_deterministic_per_seed():
    cfg = PopulationConfig(num_clients=64)
    a = sample_population(cfg, 10, np.random.default_rng(99))
    b = sample_population(cfg, 10, np.random.default_rng(99))
    assert a == b
