"""Datasets and client shards.

Three concerns live here: a synthetic Gaussian-blob classification set for
desk-scale experiments, an IDX reader for the real MNIST files, and the
Dirichlet label-skew partitioner that splits a pool across clients.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Sequence

import numpy as np

IMAGES_MAGIC = 2051
LABELS_MAGIC = 2049


class IdxError(ValueError):
    """Base for IDX container problems."""


class IdxMagicError(IdxError):
    """File does not start with the expected IDX magic number."""


class IdxTruncatedError(IdxError):
    """File ends before the payload its header promises."""


class IdxCountMismatchError(IdxError):
    """Image file and label file disagree on the sample count."""


class ClassExhaustedError(RuntimeError):
    """A partition demanded more samples of one class than the pool holds."""


@dataclass(frozen=True)
class LabeledData:
    """A flat pool of (feature vector, label) pairs."""

    x: np.ndarray  # (n, input_dim) float64
    y: np.ndarray  # (n,) integer labels in [0, num_classes)
    num_classes: int

    def __post_init__(self) -> None:
        if self.x.ndim != 2 or self.y.ndim != 1:
            raise ValueError(f"expected x (n,d) and y (n,), got {self.x.shape} / {self.y.shape}")
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError(f"x/y length mismatch: {self.x.shape[0]} vs {self.y.shape[0]}")
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        if len(self.y) and (self.y.min() < 0 or self.y.max() >= self.num_classes):
            raise ValueError("labels outside [0, num_classes)")

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def input_dim(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class DatasetShard:
    """One client's local data plus its per-class census."""

    client_id: int
    x: np.ndarray
    y: np.ndarray
    num_classes: int
    class_histogram: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError(f"x/y length mismatch: {self.x.shape[0]} vs {self.y.shape[0]}")
        if len(self.y) and (self.y.min() < 0 or self.y.max() >= self.num_classes):
            raise ValueError(f"client {self.client_id}: labels outside [0, num_classes)")
        hist = np.bincount(self.y, minlength=self.num_classes)
        object.__setattr__(self, "class_histogram", hist)

    def __len__(self) -> int:
        return self.x.shape[0]


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

_CLASS_SEP = 3.0  # distance of each class mean from the origin, in noise stds


def synth_dataset(
    num_classes: int,
    samples: int,
    input_dim: int = 32,
    seed: int | np.random.SeedSequence = 0,
) -> LabeledData:
    """Gaussian blobs: class means are the vertices of a random simplex.

    Means are drawn on a sphere of radius ``_CLASS_SEP`` noise standard
    deviations, which keeps the classes linearly separable enough for a
    softmax regressor while leaving some overlap. The returned rows are
    shuffled, so any prefix/suffix split is a fair split.
    """
    if num_classes < 2 or samples < 1 or input_dim < 1:
        raise ValueError("num_classes, samples and input_dim must be positive")
    rng = np.random.default_rng(seed)

    means = rng.normal(size=(num_classes, input_dim))
    means *= _CLASS_SEP / np.linalg.norm(means, axis=1, keepdims=True)

    # Spread the total as evenly as classes allow.
    counts = np.full(num_classes, samples // num_classes)
    counts[: samples % num_classes] += 1

    xs, ys = [], []
    for m in range(num_classes):
        xs.append(means[m] + rng.normal(size=(counts[m], input_dim)))
        ys.append(np.full(counts[m], m, dtype=np.int64))
    x = np.concatenate(xs)
    y = np.concatenate(ys)

    order = rng.permutation(samples)
    return LabeledData(x=x[order], y=y[order], num_classes=num_classes)


def split_pool(data: LabeledData, test_size: int) -> tuple[LabeledData, LabeledData]:
    """Last `test_size` rows become the held-out set."""
    if not 0 < test_size < len(data):
        raise ValueError(f"test_size must be in (0, {len(data)}), got {test_size}")
    cut = len(data) - test_size
    train = LabeledData(data.x[:cut], data.y[:cut], data.num_classes)
    test = LabeledData(data.x[cut:], data.y[cut:], data.num_classes)
    return train, test


# ---------------------------------------------------------------------------
# IDX files
# ---------------------------------------------------------------------------


def _open_maybe_gzip(path: Path) -> BinaryIO:
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head == b"\x1f\x8b":
        return gzip.open(path, "rb")  # type: ignore[return-value]
    return open(path, "rb")


def _read_exact(fh: BinaryIO, n: int, path: Path, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise IdxTruncatedError(
            f"{path}: {what} ends early ({len(buf)} of {n} bytes)"
        )
    return buf


def _read_idx_array(path: Path, expected_magic: int) -> np.ndarray:
    """Parse one IDX file: big-endian header, unsigned-byte payload."""
    with _open_maybe_gzip(path) as fh:
        magic = struct.unpack(">I", _read_exact(fh, 4, path, "header"))[0]
        if magic != expected_magic:
            raise IdxMagicError(
                f"{path}: magic {magic}, expected {expected_magic}"
            )
        ndim = magic & 0xFF
        dims = struct.unpack(
            f">{ndim}I", _read_exact(fh, 4 * ndim, path, "header")
        )
        count = int(np.prod(dims))
        payload = _read_exact(fh, count, path, "payload")
        # A well-formed file holds nothing after the payload.
        if fh.read(1):
            raise IdxTruncatedError(f"{path}: trailing bytes after payload")
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims)


def load_idx(images_path: str | Path, labels_path: str | Path) -> LabeledData:
    """Read an MNIST-style image/label file pair.

    Pixels are scaled to [0, 1] and flattened; labels stay as given.
    """
    images = _read_idx_array(Path(images_path), IMAGES_MAGIC)
    labels = _read_idx_array(Path(labels_path), LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise IdxCountMismatchError(
            f"{images_path} holds {images.shape[0]} images but "
            f"{labels_path} holds {labels.shape[0]} labels"
        )
    x = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    y = labels.astype(np.int64)
    return LabeledData(x=x, y=y, num_classes=int(y.max()) + 1 if len(y) else 10)


_MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def _find_idx_file(data_dir: Path, stem: str) -> Path:
    for name in (stem, stem + ".gz"):
        candidate = data_dir / name
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"{data_dir}: no {stem}[.gz]")


def load_mnist(data_dir: str | Path) -> tuple[LabeledData, LabeledData]:
    """Load the official train/test pairs from a directory of IDX files."""
    d = Path(data_dir)
    out = []
    for split in ("train", "test"):
        img_stem, lbl_stem = _MNIST_FILES[split]
        out.append(load_idx(_find_idx_file(d, img_stem), _find_idx_file(d, lbl_stem)))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# Dirichlet partitioning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PartitionConfig:
    """Label-skew knobs: small beta concentrates each client on few classes."""

    beta: float = 1.0
    num_clients: int = 50
    samples_per_client: int = 1000
    rng_seed: int = 0
    allow_replacement: bool = False

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.num_clients < 1:
            raise ValueError(f"num_clients must be >= 1, got {self.num_clients}")
        if self.samples_per_client < 1:
            raise ValueError(
                f"samples_per_client must be >= 1, got {self.samples_per_client}"
            )


def draw_proportions(
    num_draws: int, num_classes: int, beta: float, rng: np.random.Generator
) -> np.ndarray:
    """(num_draws, num_classes) rows on the simplex, ~ Dirichlet(beta * 1)."""
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    return rng.dirichlet(np.full(num_classes, beta), size=num_draws)


def _largest_remainder(proportions: np.ndarray, total: int) -> np.ndarray:
    """Integer counts summing exactly to `total`, closest to the proportions.

    Floor everything, then hand the leftover units to the largest fractional
    parts; ties resolve to the lower class index so the result is stable.
    """
    ideal = proportions * total
    counts = np.floor(ideal).astype(np.int64)
    frac = ideal - counts
    for cls in np.argsort(-frac, kind="stable")[: total - counts.sum()]:
        counts[cls] += 1
    return counts


def partition_dirichlet(
    pool: LabeledData,
    cfg: PartitionConfig,
    rng: np.random.Generator | None = None,
) -> list[DatasetShard]:
    """Split `pool` into per-client shards with Dirichlet class skew.

    Every shard ends up with exactly ``samples_per_client`` rows. Draws are
    without replacement, so shards are disjoint; when a class runs out the
    default is to fail loudly, or — with ``allow_replacement`` — to fill the
    shortfall by resampling that class.
    """
    demand_total = cfg.num_clients * cfg.samples_per_client
    if len(pool) < demand_total:
        raise ValueError(
            f"pool holds {len(pool)} samples, partition needs {demand_total}"
        )
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)

    m = pool.num_classes
    proportions = draw_proportions(cfg.num_clients, m, cfg.beta, rng)

    # Per-class queues, shuffled once; clients consume them front to back.
    queues = [rng.permutation(np.flatnonzero(pool.y == cls)) for cls in range(m)]
    cursors = [0] * m

    shards: list[DatasetShard] = []
    for cid in range(cfg.num_clients):
        counts = _largest_remainder(proportions[cid], cfg.samples_per_client)
        taken: list[np.ndarray] = []
        for cls in range(m):
            want = int(counts[cls])
            if want == 0:
                continue
            left = len(queues[cls]) - cursors[cls]
            grab = min(want, left)
            taken.append(queues[cls][cursors[cls] : cursors[cls] + grab])
            cursors[cls] += grab
            if grab < want:
                if not cfg.allow_replacement or len(queues[cls]) == 0:
                    raise ClassExhaustedError(
                        f"class {cls} exhausted at client {cid}: "
                        f"needs {want}, pool has {left} left"
                    )
                taken.append(rng.choice(queues[cls], size=want - grab, replace=True))
        idx = np.concatenate(taken)
        shards.append(
            DatasetShard(
                client_id=cid, x=pool.x[idx], y=pool.y[idx], num_classes=m
            )
        )
    return shards
