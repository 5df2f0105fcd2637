"""Local training: small classifiers, analytic gradients, mini-batch SGD.

Two model families are enough for simulation studies at this scale: plain
softmax regression and a one-hidden-layer tanh network. Parameters live in
a name -> ndarray map so aggregation can average tensors without caring
which family produced them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator

import numpy as np


class DivergenceError(RuntimeError):
    """Training loss stopped being finite."""


@dataclass(frozen=True)
class ModelSpec:
    """Architecture description shared by every client in a run."""

    input_dim: int
    num_classes: int
    hidden_dim: int = 0  # 0 -> softmax regression, >0 -> one hidden tanh layer

    def __post_init__(self) -> None:
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.hidden_dim < 0:
            raise ValueError(f"hidden_dim must be >= 0, got {self.hidden_dim}")

    @property
    def is_mlp(self) -> bool:
        return self.hidden_dim > 0


@dataclass
class ModelParams:
    """Named parameter tensors plus the ModelSpec that shaped them."""

    spec: ModelSpec
    tensors: Dict[str, np.ndarray]

    def copy(self) -> "ModelParams":
        return ModelParams(self.spec, {k: v.copy() for k, v in self.tensors.items()})

    def flatten(self) -> np.ndarray:
        """All tensors concatenated in sorted-name order."""
        return np.concatenate([self.tensors[k].ravel() for k in sorted(self.tensors)])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ModelParams):
            return NotImplemented
        return (
            self.spec == other.spec
            and self.tensors.keys() == other.tensors.keys()
            and all(np.array_equal(self.tensors[k], other.tensors[k]) for k in self.tensors)
        )


_INIT_SCALE = 0.05


def init_params(spec: ModelSpec, rng: np.random.Generator) -> ModelParams:
    """Weights uniform in [-0.05, 0.05), biases exactly zero."""

    def w(shape: tuple[int, ...]) -> np.ndarray:
        return rng.uniform(-_INIT_SCALE, _INIT_SCALE, size=shape)

    if spec.is_mlp:
        tensors = {
            "W1": w((spec.input_dim, spec.hidden_dim)),
            "b1": np.zeros(spec.hidden_dim),
            "W2": w((spec.hidden_dim, spec.num_classes)),
            "b2": np.zeros(spec.num_classes),
        }
    else:
        tensors = {
            "W": w((spec.input_dim, spec.num_classes)),
            "b": np.zeros(spec.num_classes),
        }
    return ModelParams(spec, tensors)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _forward(params: ModelParams, x: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
    """Return (logits, hidden activations or None)."""
    t = params.tensors
    if params.spec.is_mlp:
        h = np.tanh(x @ t["W1"] + t["b1"])
        return h @ t["W2"] + t["b2"], h
    return x @ t["W"] + t["b"], None


def predict_logits(params: ModelParams, x: np.ndarray) -> np.ndarray:
    logits, _ = _forward(params, x)
    return logits


def loss_and_gradient(
    params: ModelParams, x: np.ndarray, y: np.ndarray
) -> tuple[float, Dict[str, np.ndarray]]:
    """Mean cross-entropy over the batch and its exact gradient.

    Backprop by hand; at these sizes an autodiff framework would be pure
    overhead. The softmax-gradient identity keeps everything in terms of
    the probabilities themselves, so one forward pass suffices.
    """
    n = x.shape[0]
    if n == 0:
        raise ValueError("cannot evaluate on an empty batch")
    logits, hidden = _forward(params, x)
    logp = _log_softmax(logits)
    loss = float(-logp[np.arange(n), y].mean())

    probs = np.exp(logp)
    dlogits = probs
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n

    t = params.tensors
    if params.spec.is_mlp:
        assert hidden is not None
        dh = dlogits @ t["W2"].T * (1.0 - hidden**2)
        grads = {
            "W1": x.T @ dh,
            "b1": dh.sum(axis=0),
            "W2": hidden.T @ dlogits,
            "b2": dlogits.sum(axis=0),
        }
    else:
        grads = {"W": x.T @ dlogits, "b": dlogits.sum(axis=0)}
    return loss, grads


def evaluate(params: ModelParams, x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """(accuracy, mean cross-entropy) on the given set."""
    n = x.shape[0]
    if n == 0:
        raise ValueError("cannot evaluate on an empty set")
    logits, _ = _forward(params, x)
    logp = _log_softmax(logits)
    acc = float((logits.argmax(axis=1) == y).mean())
    loss = float(-logp[np.arange(n), y].mean())
    return acc, loss


def _batches(n: int, batch_size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    # A batch that covers the whole shard needs no shuffle: the mean
    # gradient is permutation-free, and skipping it keeps the full-batch
    # step bit-identical to a directly computed gradient step.
    order = np.arange(n) if batch_size >= n else rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


@dataclass(frozen=True)
class SGDConfig:
    """Local-solver knobs; the step size here is the base rate before any
    tier scaling the caller applies."""

    learning_rate: float = 0.1
    epochs: int = 1
    batch_size: int = 20

    def __post_init__(self) -> None:
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


def local_train(
    params: ModelParams,
    x: np.ndarray,
    y: np.ndarray,
    cfg: SGDConfig,
    rng: np.random.Generator,
    step_scale: float = 1.0,
) -> ModelParams:
    """Mini-batch SGD from `params`, never mutating the input.

    `step_scale` multiplies the learning rate; a client whose uploads are
    j rounds apart trains with scale j so its step budget matches a
    client that uploads every round.
    """
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"x/y length mismatch: {x.shape[0]} vs {y.shape[0]}")
    if x.shape[0] == 0:
        raise ValueError("cannot train on an empty shard")
    if not step_scale > 0:
        raise ValueError(f"step_scale must be > 0, got {step_scale}")

    lr = cfg.learning_rate * step_scale
    out = params.copy()
    for _ in range(cfg.epochs):
        for idx in _batches(x.shape[0], cfg.batch_size, rng):
            loss, grads = loss_and_gradient(out, x[idx], y[idx])
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite training loss {loss!r}")
            for name, g in grads.items():
                out.tensors[name] -= lr * g
                if not np.all(np.isfinite(out.tensors[name])):
                    raise DivergenceError(f"non-finite parameters in {name!r} after a step")
    return out
