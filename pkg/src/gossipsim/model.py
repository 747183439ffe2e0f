"""Multinomial logistic regression with a flat parameter block, plus the
partition slice/merge operations used by the gossip exchange.

Parameters live in one float64 vector of 7850 entries: 10 class rows of
784 weights followed by 1 bias, row-major. All arithmetic is 64-bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset

NUM_CLASSES = 10
NUM_FEATURES = 784
ROW_WIDTH = NUM_FEATURES + 1
PARAM_COUNT = NUM_CLASSES * ROW_WIDTH  # 7850

DEFAULT_BATCH_SIZE = 10


class DivergenceError(Exception):
    """Local training produced non-finite parameters."""


class PartitionMismatchError(Exception):
    """Incoming message was sliced with a different partition count."""


@dataclass
class Hyperparams:
    """SGD step size and L2 penalty (biases are never regularized)."""

    learning_rate: float = 1.0
    l2_penalty: float = 0.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.l2_penalty < 0:
            raise ValueError("l2_penalty must be non-negative")


@dataclass
class ParamVector:
    """Flat model parameters plus an update-age counter."""

    values: np.ndarray
    age: int = 0

    @staticmethod
    def zeros() -> "ParamVector":
        return ParamVector(np.zeros(PARAM_COUNT), 0)

    def copy(self) -> "ParamVector":
        return ParamVector(self.values.copy(), self.age)

    def weights(self) -> np.ndarray:
        """View of shape (10, 784); mutating it mutates values."""
        return self.values.reshape(NUM_CLASSES, ROW_WIDTH)[:, :NUM_FEATURES]

    def biases(self) -> np.ndarray:
        return self.values.reshape(NUM_CLASSES, ROW_WIDTH)[:, NUM_FEATURES]


@dataclass
class PartitionMsg:
    """One parameter slice in flight between nodes."""

    partition_index: int
    total_partitions: int
    values: np.ndarray
    age: int
    sender: int = -1


def slice_bounds(i: int, total_partitions: int,
                 param_count: int = PARAM_COUNT) -> tuple:
    """Half-open [start, end) bounds of slice i; slices tile the vector
    with sizes differing by at most one."""
    if not 1 <= total_partitions <= param_count:
        raise ValueError(f"partition count {total_partitions} out of range")
    if not 0 <= i < total_partitions:
        raise ValueError(
            f"partition index {i} out of range for {total_partitions}")
    start = (i * param_count) // total_partitions
    end = ((i + 1) * param_count) // total_partitions
    return start, end


def extract_partition(p: ParamVector, i: int, total_partitions: int,
                      sender: int = -1) -> PartitionMsg:
    """Copy slice i of the parameters into a message."""
    start, end = slice_bounds(i, total_partitions)
    return PartitionMsg(i, total_partitions, p.values[start:end].copy(),
                        p.age, sender)


def merge_partition(p: ParamVector, m: PartitionMsg,
                    expected_partitions: int | None = None) -> ParamVector:
    """Average the incoming slice into the local parameters.

    Only indices inside the slice change; age becomes the max of the two.
    """
    if expected_partitions is not None and \
            m.total_partitions != expected_partitions:
        raise PartitionMismatchError(
            f"message sliced with S={m.total_partitions}, "
            f"receiver configured S={expected_partitions}")
    start, end = slice_bounds(m.partition_index, m.total_partitions)
    if len(m.values) != end - start:
        raise PartitionMismatchError(
            f"slice {m.partition_index}/{m.total_partitions} should have "
            f"{end - start} values, got {len(m.values)}")
    out = p.values.copy()
    out[start:end] = 0.5 * (out[start:end] + m.values)
    return ParamVector(out, max(p.age, m.age))


def predict(p: ParamVector, pixels: np.ndarray) -> int:
    """Most likely class; ties resolve to the lowest class index."""
    logits = p.weights() @ pixels + p.biases()
    return int(np.argmax(logits))


def predict_batch(p: ParamVector, pixels: np.ndarray) -> np.ndarray:
    logits = pixels @ p.weights().T + p.biases()
    return np.argmax(logits, axis=1)


def loss_and_gradient(p: ParamVector, batch: Dataset,
                      h: Hyperparams) -> tuple:
    """Mean cross-entropy (+ L2 on weights) and its exact gradient."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    x = batch.pixels
    y = batch.labels
    w = p.weights()
    logits = x @ w.T + p.biases()
    logits -= logits.max(axis=1, keepdims=True)
    probs = np.exp(logits)
    probs /= probs.sum(axis=1, keepdims=True)
    n = len(batch)
    loss = -np.log(probs[np.arange(n), y]).mean()
    loss += 0.5 * h.l2_penalty * float((w * w).sum())

    delta = probs
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grad = np.empty(PARAM_COUNT)
    gm = grad.reshape(NUM_CLASSES, ROW_WIDTH)
    gm[:, :NUM_FEATURES] = delta.T @ x + h.l2_penalty * w
    gm[:, NUM_FEATURES] = delta.sum(axis=0)
    return float(loss), grad


def local_update(p: ParamVector, shard: Dataset, h: Hyperparams,
                 rng: np.random.Generator,
                 batch_size: int = DEFAULT_BATCH_SIZE,
                 max_batches: int | None = None) -> ParamVector:
    """Minibatch SGD over a fresh shuffle of the shard.

    By default runs one full epoch; max_batches caps the number of
    minibatch steps, which is how the protocol paces training per gossip
    event (a full epoch per received message overtrains the poison:
    attacker nodes would fully re-saturate their trigger weights between
    merges and drive the honest population to the same point).
    """
    if len(shard) == 0:
        raise ValueError("empty shard")
    values = p.values.copy()
    mat = values.reshape(NUM_CLASSES, ROW_WIDTH)
    w = mat[:, :NUM_FEATURES]
    b = mat[:, NUM_FEATURES]
    eta = h.learning_rate
    l2 = h.l2_penalty
    order = rng.permutation(len(shard))
    if max_batches is not None:
        order = order[:max_batches * batch_size]
    for start in range(0, len(order), batch_size):
        idx = order[start:start + batch_size]
        x = shard.pixels[idx]
        y = shard.labels[idx]
        logits = x @ w.T + b
        logits -= logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        probs /= probs.sum(axis=1, keepdims=True)
        probs[np.arange(len(idx)), y] -= 1.0
        probs /= len(idx)
        if l2:
            w *= 1.0 - eta * l2
        w -= eta * (probs.T @ x)
        b -= eta * probs.sum(axis=0)
    if not np.all(np.isfinite(values)):
        raise DivergenceError(
            f"non-finite parameters after local update (age {p.age})")
    return ParamVector(values, p.age + 1)


def accuracy(p: ParamVector, eval_set: Dataset) -> float:
    """Fraction of samples whose prediction matches the reference label."""
    if len(eval_set) == 0:
        raise ValueError("empty evaluation set")
    return float(np.mean(predict_batch(p, eval_set.pixels) == eval_set.labels))


def batch_accuracy(stacked_values: np.ndarray, eval_set: Dataset) -> np.ndarray:
    """Accuracy of many models at once; stacked_values is (M, 7850)."""
    if len(eval_set) == 0:
        raise ValueError("empty evaluation set")
    m = len(stacked_values)
    mats = stacked_values.reshape(m, NUM_CLASSES, ROW_WIDTH)
    w = mats[:, :, :NUM_FEATURES].reshape(m * NUM_CLASSES, NUM_FEATURES)
    b = mats[:, :, NUM_FEATURES].reshape(m * NUM_CLASSES)
    logits = eval_set.pixels @ w.T + b             # (N, M*10)
    preds = logits.reshape(len(eval_set), m, NUM_CLASSES).argmax(axis=2)
    return (preds == eval_set.labels[:, None]).mean(axis=0)


# ------------------------------------------------- parameter snapshots

def save_params(path, p: ParamVector, total_partitions: int) -> None:
    """Dump parameters as 7850 little-endian float64 plus a .meta sidecar."""
    path = Path(path)
    path.write_bytes(p.values.astype("<f8").tobytes())
    Path(str(path) + ".meta").write_text(
        f"age={p.age} partitions={total_partitions}\n")


def load_params(path) -> tuple:
    """Read a snapshot; returns (ParamVector, total_partitions)."""
    path = Path(path)
    values = np.frombuffer(path.read_bytes(), dtype="<f8").copy()
    if len(values) != PARAM_COUNT:
        raise ValueError(f"snapshot has {len(values)} values, "
                         f"expected {PARAM_COUNT}")
    meta = Path(str(path) + ".meta").read_text().split()
    fields = dict(kv.split("=") for kv in meta)
    return (ParamVector(values, int(fields["age"])), int(fields["partitions"]))
