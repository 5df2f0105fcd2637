"""Experiment driver.

Parses a YAML config plus command-line flags (flags win), expands sweep
axes into a cartesian plan, executes each run, and writes per-run CSVs,
a per-run manifest, and one combined summary CSV. Output files are
written atomically and never overwritten unless --force is given.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import itertools
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import yaml

from . import __version__
from .data import LabeledData, PartitionConfig, load_mnist
from .engine import (
    Algorithm,
    RoundRecord,
    RunConfig,
    build_setup,
    run,
    write_class_dist_csv,
    write_clients_csv,
    write_round_csv,
)
from .learner import ModelSpec, SGDConfig
from .radio import ChannelParams, PathlossModel, PopulationConfig

DATA_DIR_ENV = "TIERFED_DATA_DIR"
DEFAULT_ROUNDS = 200

_ALGO_CHOICES = ("lesson", "fedavg", "fedcs")
_DATASET_CHOICES = ("synthetic", "mnist")


class ConfigError(ValueError):
    """A configuration problem; the message names the offending key."""


# ---------------------------------------------------------------------------
# Typed readers (every error carries the key path)
# ---------------------------------------------------------------------------


def _as_float(path: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _as_int(path: str, value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return value


def _as_bool(path: str, value: Any) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{path}: expected true/false, got {value!r}")
    return value


def _as_choice(path: str, value: Any, choices: Sequence[str]) -> str:
    if value not in choices:
        raise ConfigError(f"{path}: expected one of {list(choices)}, got {value!r}")
    return value


def _as_pair(path: str, value: Any) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{path}: expected [lo, hi], got {value!r}")
    return _as_float(f"{path}[0]", value[0]), _as_float(f"{path}[1]", value[1])


def _check_keys(section: Mapping[str, Any], allowed: Sequence[str], prefix: str = "") -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown config key: {prefix}{key}")


def _section(doc: Mapping[str, Any], name: str) -> dict[str, Any]:
    value = doc.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"{name}: expected a mapping, got {value!r}")
    return value


# ---------------------------------------------------------------------------
# Plan
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlanEntry:
    name: str
    cfg: RunConfig


@dataclass(frozen=True)
class ExperimentPlan:
    """Fully resolved set of runs plus where their artifacts go."""

    entries: tuple[PlanEntry, ...]
    out_dir: Path
    dataset: str = "synthetic"
    data_dir: Path | None = None
    parallel: int = 1

    def __post_init__(self) -> None:
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ConfigError(f"plan has duplicate run names: {dupes}")
        if self.parallel < 1:
            raise ConfigError(f"parallel: expected >= 1, got {self.parallel}")


_TOP_KEYS = (
    "algo", "tau", "beta", "seed", "rounds", "time_budget", "dataset",
    "out", "eval_stride", "jitter_std_s", "data_dir", "parallel",
    "model", "sgd", "partition", "population", "channel", "synth", "sweep",
)


def _run_name(algo: str, tau: float, beta: float, seed: int) -> str:
    return f"{algo}_tau{tau:g}_beta{beta:g}_seed{seed}"


def build_plan(doc: Mapping[str, Any], cli: Mapping[str, Any]) -> ExperimentPlan:
    """Resolve defaults < config file < CLI flags into a concrete plan."""
    _check_keys(doc, _TOP_KEYS)

    def pick(key: str, reader: Callable[[str, Any], Any], default: Any) -> Any:
        value = default
        if key in doc and doc[key] is not None:
            value = reader(key, doc[key])
        if cli.get(key) is not None:
            value = cli[key]
        return value

    algo = pick("algo", lambda p, v: _as_choice(p, v, _ALGO_CHOICES), "lesson")
    tau = pick("tau", _as_float, 10.0)
    beta = pick("beta", _as_float, 1.0)
    seed = pick("seed", _as_int, 0)
    dataset = pick("dataset", lambda p, v: _as_choice(p, v, _DATASET_CHOICES), "synthetic")
    out_dir = Path(pick("out", lambda p, v: str(v), "runs"))
    eval_stride = pick("eval_stride", _as_int, 1)
    jitter = pick("jitter_std_s", _as_float, 0.0)
    parallel = pick("parallel", _as_int, 1)

    if tau <= 0:
        raise ConfigError(f"tau: expected > 0, got {tau}")
    if beta <= 0:
        raise ConfigError(f"beta: expected > 0, got {beta}")

    rounds = _as_int("rounds", doc["rounds"]) if doc.get("rounds") is not None else None
    budget = (
        _as_float("time_budget", doc["time_budget"])
        if doc.get("time_budget") is not None
        else None
    )
    if rounds is not None and budget is not None:
        raise ConfigError("rounds / time_budget: set at most one")
    if cli.get("rounds") is not None:
        rounds, budget = cli["rounds"], None
    elif cli.get("time_budget") is not None:
        rounds, budget = None, cli["time_budget"]
    if rounds is None and budget is None:
        rounds = DEFAULT_ROUNDS

    data_dir: Path | None = None
    if doc.get("data_dir") is not None:
        data_dir = Path(str(doc["data_dir"]))
    elif os.environ.get(DATA_DIR_ENV):
        data_dir = Path(os.environ[DATA_DIR_ENV])

    # --- component sections -----------------------------------------------
    model_sec = _section(doc, "model")
    _check_keys(model_sec, ("input_dim", "num_classes", "hidden_dim"), "model.")
    hidden_dim = _as_int("model.hidden_dim", model_sec.get("hidden_dim", 0))
    if dataset == "mnist":
        input_dim, num_classes = 784, 10
        for key, forced in (("input_dim", 784), ("num_classes", 10)):
            if key in model_sec and _as_int(f"model.{key}", model_sec[key]) != forced:
                raise ConfigError(f"model.{key}: mnist fixes this to {forced}")
    else:
        input_dim = _as_int("model.input_dim", model_sec.get("input_dim", 32))
        num_classes = _as_int("model.num_classes", model_sec.get("num_classes", 10))

    sgd_sec = _section(doc, "sgd")
    _check_keys(sgd_sec, ("learning_rate", "epochs", "batch_size"), "sgd.")
    pop_sec = _section(doc, "population")
    _check_keys(
        pop_sec,
        ("num_clients", "cell_radius_km", "tx_power_w", "cycles_per_sample_range",
         "cpu_freq_hz_range", "local_iter_factor", "target_accuracy"),
        "population.",
    )
    part_sec = _section(doc, "partition")
    _check_keys(part_sec, ("samples_per_client", "allow_replacement"), "partition.")
    chan_sec = _section(doc, "channel")
    _check_keys(
        chan_sec,
        ("bandwidth_hz", "noise_dbm", "model_size_bits", "pathloss"),
        "channel.",
    )
    synth_sec = _section(doc, "synth")
    _check_keys(synth_sec, ("pool_size", "test_size"), "synth.")

    try:
        model = ModelSpec(input_dim=input_dim, num_classes=num_classes, hidden_dim=hidden_dim)
        sgd = SGDConfig(
            learning_rate=_as_float("sgd.learning_rate", sgd_sec.get("learning_rate", 0.1)),
            epochs=_as_int("sgd.epochs", sgd_sec.get("epochs", 1)),
            batch_size=_as_int("sgd.batch_size", sgd_sec.get("batch_size", 20)),
        )
        population = PopulationConfig(
            num_clients=_as_int("population.num_clients", pop_sec.get("num_clients", 50)),
            cell_radius_km=_as_float(
                "population.cell_radius_km", pop_sec.get("cell_radius_km", 2.0)
            ),
            tx_power_w=_as_float("population.tx_power_w", pop_sec.get("tx_power_w", 1.0)),
            cycles_per_sample_range=_as_pair(
                "population.cycles_per_sample_range",
                pop_sec.get("cycles_per_sample_range", [3e5, 5e5]),
            ),
            cpu_freq_hz_range=_as_pair(
                "population.cpu_freq_hz_range",
                pop_sec.get("cpu_freq_hz_range", [0.8e9, 3.0e9]),
            ),
            local_iter_factor=_as_float(
                "population.local_iter_factor", pop_sec.get("local_iter_factor", 1.0)
            ),
            target_accuracy=_as_float(
                "population.target_accuracy", pop_sec.get("target_accuracy", 0.05)
            ),
        )
        channel = ChannelParams.from_dbm(
            bandwidth_per_client_hz=_as_float(
                "channel.bandwidth_hz", chan_sec.get("bandwidth_hz", 30e3)
            ),
            noise_dbm=_as_float("channel.noise_dbm", chan_sec.get("noise_dbm", -94.0)),
            model_size_bits=_as_float(
                "channel.model_size_bits", chan_sec.get("model_size_bits", 100e3)
            ),
            pathloss_model=PathlossModel(
                _as_choice(
                    "channel.pathloss", chan_sec.get("pathloss", "log10"), ("log10", "linear")
                )
            ),
        )
        samples_per_client = _as_int(
            "partition.samples_per_client", part_sec.get("samples_per_client", 1000)
        )
        allow_replacement = _as_bool(
            "partition.allow_replacement", part_sec.get("allow_replacement", True)
        )
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(str(err)) from err

    pool_size = synth_sec.get("pool_size")
    if pool_size is not None:
        pool_size = _as_int("synth.pool_size", pool_size)
    test_size = _as_int("synth.test_size", synth_sec.get("test_size", 2000))

    # --- sweep axes ---------------------------------------------------------
    sweep = _section(doc, "sweep")
    _check_keys(sweep, ("algo", "tau", "beta", "seed"), "sweep.")

    def axis(key: str, scalar: Any, reader: Callable[[str, Any], Any]) -> list[Any]:
        if cli.get(key) is not None or key not in sweep:
            return [scalar]
        raw = sweep[key]
        if not isinstance(raw, list) or not raw:
            raise ConfigError(f"sweep.{key}: expected a non-empty list, got {raw!r}")
        return [reader(f"sweep.{key}", v) for v in raw]

    algos = axis("algo", algo, lambda p, v: _as_choice(p, v, _ALGO_CHOICES))
    taus = axis("tau", tau, _as_float)
    betas = axis("beta", beta, _as_float)
    seeds = axis("seed", seed, _as_int)

    entries = []
    for a, t, b, s in itertools.product(algos, taus, betas, seeds):
        try:
            cfg = RunConfig(
                algorithm=Algorithm(a),
                deadline_s=t,
                num_rounds=rounds,
                time_budget_s=budget,
                rng_seed=s,
                channel=channel,
                model=model,
                sgd=sgd,
                partition=PartitionConfig(
                    beta=b,
                    num_clients=population.num_clients,
                    samples_per_client=samples_per_client,
                    rng_seed=s,
                    allow_replacement=allow_replacement,
                ),
                population=population,
                synth_pool_size=pool_size,
                synth_test_size=test_size,
                eval_stride=eval_stride,
                latency_jitter_std_s=jitter,
            )
        except ValueError as err:
            raise ConfigError(str(err)) from err
        entries.append(PlanEntry(name=_run_name(a, t, b, s), cfg=cfg))

    return ExperimentPlan(
        entries=tuple(entries),
        out_dir=out_dir,
        dataset=dataset,
        data_dir=data_dir,
        parallel=parallel,
    )


def load_config(path: str | Path) -> dict[str, Any]:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as err:
        raise ConfigError(f"{path}: not valid YAML ({err})") from err
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return doc


def parse_config(path: str | Path) -> ExperimentPlan:
    """Resolve a config file, with no flag overrides, into a plan."""
    return build_plan(load_config(path), {})


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


def _atomic_write(path: Path, write_fn: Callable[[Path], None]) -> None:
    """Write to a sibling temp file, then rename into place."""
    tmp = path.with_name(path.name + ".tmp")
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def _manifest_dict(cfg: RunConfig) -> dict[str, Any]:
    return {
        "code_version": __version__,
        "algorithm": cfg.algorithm.value,
        "deadline_s": cfg.deadline_s,
        "num_rounds": cfg.num_rounds,
        "time_budget_s": cfg.time_budget_s,
        "rng_seed": cfg.rng_seed,
        "channel": {
            "bandwidth_per_client_hz": cfg.channel.bandwidth_per_client_hz,
            "noise_power_w": cfg.channel.noise_power_w,
            "model_size_bits": cfg.channel.model_size_bits,
            "pathloss_model": cfg.channel.pathloss_model.value,
        },
        "model": {
            "input_dim": cfg.model.input_dim,
            "num_classes": cfg.model.num_classes,
            "hidden_dim": cfg.model.hidden_dim,
        },
        "sgd": {
            "learning_rate": cfg.sgd.learning_rate,
            "epochs": cfg.sgd.epochs,
            "batch_size": cfg.sgd.batch_size,
        },
        "partition": {
            "beta": cfg.partition.beta,
            "num_clients": cfg.partition.num_clients,
            "samples_per_client": cfg.partition.samples_per_client,
            "allow_replacement": cfg.partition.allow_replacement,
        },
        "population": {
            "num_clients": cfg.population.num_clients,
            "cell_radius_km": cfg.population.cell_radius_km,
            "tx_power_w": cfg.population.tx_power_w,
            "cycles_per_sample_range": list(cfg.population.cycles_per_sample_range),
            "cpu_freq_hz_range": list(cfg.population.cpu_freq_hz_range),
            "local_iter_factor": cfg.population.local_iter_factor,
            "target_accuracy": cfg.population.target_accuracy,
        },
        "synth_pool_size": cfg.synth_pool_size,
        "synth_test_size": cfg.synth_test_size,
        "eval_stride": cfg.eval_stride,
        "latency_jitter_std_s": cfg.latency_jitter_std_s,
    }


def _entry_paths(out_dir: Path, name: str) -> dict[str, Path]:
    return {
        "rounds": out_dir / f"{name}.rounds.csv",
        "clients": out_dir / f"{name}.clients.csv",
        "classes": out_dir / f"{name}.classes.csv",
        "manifest": out_dir / f"{name}.manifest.json",
    }


SUMMARY_COLUMNS = (
    "run", "algo", "tau", "beta", "seed", "rounds_completed",
    "final_accuracy", "final_loss", "final_sim_time_s", "status",
)


def _execute_entry(
    entry: PlanEntry,
    out_dir: Path,
    pool: LabeledData | None,
    test: LabeledData | None,
) -> dict[str, Any]:
    cfg = entry.cfg
    paths = _entry_paths(out_dir, entry.name)
    setup = build_setup(cfg, pool, test)
    records = run(cfg, setup=setup)

    _atomic_write(paths["rounds"], lambda p: write_round_csv(records, cfg, p))
    _atomic_write(paths["clients"], lambda p: write_clients_csv(setup, p))
    _atomic_write(paths["classes"], lambda p: write_class_dist_csv(setup, p))
    _atomic_write(
        paths["manifest"],
        lambda p: Path(p).write_text(json.dumps(_manifest_dict(cfg), indent=2) + "\n"),
    )

    evaluated = [r for r in records if r.global_test_accuracy is not None]
    last: RoundRecord | None = evaluated[-1] if evaluated else None
    return {
        "run": entry.name,
        "algo": cfg.algorithm.value,
        "tau": "" if cfg.deadline_s is None else repr(cfg.deadline_s),
        "beta": repr(cfg.partition.beta),
        "seed": cfg.rng_seed,
        "rounds_completed": len(records),
        "final_accuracy": "" if last is None else repr(last.global_test_accuracy),
        "final_loss": "" if last is None else repr(last.global_test_loss),
        "final_sim_time_s": "" if not records else repr(records[-1].sim_clock_s),
        "status": "ok",
    }


def run_plan(plan: ExperimentPlan, force: bool = False) -> int:
    """Execute every entry, write artifacts, return a process exit code."""
    plan.out_dir.mkdir(parents=True, exist_ok=True)

    summary_path = plan.out_dir / "summary.csv"
    targets = [summary_path]
    for entry in plan.entries:
        targets.extend(_entry_paths(plan.out_dir, entry.name).values())
    if not force:
        existing = [str(p) for p in targets if p.exists()]
        if existing:
            print(
                "error: output files already exist (use --force to overwrite):\n  "
                + "\n  ".join(existing),
                file=sys.stderr,
            )
            return 2

    pool = test = None
    if plan.dataset == "mnist":
        if plan.data_dir is None:
            print(
                f"error: dataset mnist needs data_dir in the config or ${DATA_DIR_ENV}",
                file=sys.stderr,
            )
            return 2
        try:
            pool, test = load_mnist(plan.data_dir)
        except (OSError, ValueError) as err:
            print(f"error: cannot load mnist from {plan.data_dir}: {err}", file=sys.stderr)
            return 2

    def job(entry: PlanEntry) -> dict[str, Any]:
        try:
            return _execute_entry(entry, plan.out_dir, pool, test)
        except Exception as err:  # noqa: BLE001 - a bad run must not sink the sweep
            print(f"error: run {entry.name} failed: {err}", file=sys.stderr)
            return {
                "run": entry.name,
                "algo": entry.cfg.algorithm.value,
                "tau": "" if entry.cfg.deadline_s is None else repr(entry.cfg.deadline_s),
                "beta": repr(entry.cfg.partition.beta),
                "seed": entry.cfg.rng_seed,
                "rounds_completed": 0,
                "final_accuracy": "",
                "final_loss": "",
                "final_sim_time_s": "",
                "status": f"error: {err}",
            }

    if plan.parallel > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=plan.parallel) as pool_exec:
            rows = list(pool_exec.map(job, plan.entries))
    else:
        rows = [job(entry) for entry in plan.entries]

    def write_summary(path: Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)

    _atomic_write(summary_path, write_summary)

    failed = [r for r in rows if r["status"] != "ok"]
    for row in rows:
        marker = "ok" if row["status"] == "ok" else "FAILED"
        print(f"{row['run']}: {marker} ({row['rounds_completed']} rounds)")
    print(f"summary: {summary_path}")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tierfed",
        description=(
            "Run semi-synchronous federated learning simulations and write "
            "per-round metrics as CSV."
        ),
    )
    parser.add_argument("--config", metavar="PATH", help="YAML config file")
    parser.add_argument("--algo", choices=_ALGO_CHOICES, help="scheduling strategy")
    parser.add_argument("--tau", type=float, metavar="S", help="round deadline in seconds")
    parser.add_argument("--beta", type=float, metavar="B", help="Dirichlet concentration")
    parser.add_argument("--seed", type=int, metavar="N", help="run RNG seed")
    stop = parser.add_mutually_exclusive_group()
    stop.add_argument("--rounds", type=int, metavar="K", help="number of global rounds")
    stop.add_argument(
        "--time-budget", type=float, metavar="S", dest="time_budget",
        help="simulated-time budget in seconds",
    )
    parser.add_argument("--dataset", choices=_DATASET_CHOICES, help="data source")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument(
        "--force", action="store_true", help="overwrite existing output files"
    )
    return parser


def _cli_overrides(ns: argparse.Namespace) -> dict[str, Any]:
    return {
        "algo": ns.algo,
        "tau": ns.tau,
        "beta": ns.beta,
        "seed": ns.seed,
        "rounds": ns.rounds,
        "time_budget": ns.time_budget,
        "dataset": ns.dataset,
        "out": ns.out,
    }


def main(argv: Sequence[str] | None = None) -> int:
    args = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    if not args:
        parser.print_help()
        return 0
    ns = parser.parse_args(args)

    try:
        doc = load_config(ns.config) if ns.config else {}
        plan = build_plan(doc, _cli_overrides(ns))
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    return run_plan(plan, force=ns.force)


if __name__ == "__main__":
    sys.exit(main())
