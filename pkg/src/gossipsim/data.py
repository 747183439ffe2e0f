"""Dataset handling: IDX file IO, i.i.d. sharding, trigger stamping and
poisoning, and construction of the clean/backdoor evaluation sets.

Images are 28x28 grayscale, stored flattened as 784 float64 values in [0, 1]
(byte intensity / 255). Labels are integer classes 0..9.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
IMAGE_SIDE = 28
IMAGE_PIXELS = IMAGE_SIDE * IMAGE_SIDE
NUM_CLASSES = 10

ORIGINS = ("training", "test", "local-shard", "eval-clean", "eval-backdoor")


class IdxFormatError(Exception):
    """Base error for malformed IDX containers."""


class IdxBadMagicError(IdxFormatError):
    """File does not begin with the expected IDX magic number."""


class IdxTruncatedError(IdxFormatError):
    """File payload is shorter than the header-declared item count."""


class IdxCountMismatchError(IdxFormatError):
    """Image and label files declare different item counts."""


@dataclass
class Sample:
    """One labeled image: 784 pixels in [0,1] plus an integer class."""

    pixels: np.ndarray
    label: int

    def copy(self) -> "Sample":
        return Sample(self.pixels.copy(), int(self.label))


@dataclass
class Dataset:
    """Ordered collection of samples, stored as dense arrays.

    pixels: (N, 784) float64 in [0, 1]
    labels: (N,) int64 in 0..9
    origin: one of ORIGINS, identifies what the set is used for
    """

    pixels: np.ndarray
    labels: np.ndarray
    origin: str = "training"

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown dataset origin {self.origin!r}")
        if len(self.pixels) != len(self.labels):
            raise IdxCountMismatchError(
                f"{len(self.pixels)} images vs {len(self.labels)} labels"
            )

    def __len__(self) -> int:
        return len(self.labels)

    def sample(self, i: int) -> Sample:
        return Sample(self.pixels[i].copy(), int(self.labels[i]))

    def subset(self, indices, origin: str | None = None) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.pixels[idx].copy(), self.labels[idx].copy(),
                       origin or self.origin)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=NUM_CLASSES)

    @staticmethod
    def from_samples(samples, origin: str = "training") -> "Dataset":
        pixels = np.stack([s.pixels for s in samples]).astype(np.float64)
        labels = np.array([s.label for s in samples], dtype=np.int64)
        return Dataset(pixels, labels, origin)


@dataclass
class ShardAssignment:
    """Per-node index lists into a training Dataset; pairwise disjoint."""

    shards: list

    def __len__(self) -> int:
        return len(self.shards)


@dataclass(frozen=True)
class TriggerPattern:
    """Pixel positions overwritten by the backdoor mark.

    Default is a 3x3 block of full intensity at rows 19..21, cols 19..21:
    the lower-right part of the active digit area. The placement matters
    for the attack dynamics: honest training can only push back on trigger
    weights through pixels its own data exercises, so a mark on dead
    border pixels (with no weight decay) would accumulate unchecked and
    every topology would converge to full attack success.
    """

    flat_indices: tuple = field(
        default=tuple(r * IMAGE_SIDE + c
                      for r in range(19, 22) for c in range(19, 22)))
    value: float = 1.0

    def __post_init__(self):
        if len(set(self.flat_indices)) != len(self.flat_indices):
            raise ValueError("trigger indices must be distinct")
        for i in self.flat_indices:
            if not 0 <= i < IMAGE_PIXELS:
                raise ValueError(f"trigger index {i} out of range")


DEFAULT_TRIGGER = TriggerPattern()


# ---------------------------------------------------------------- IDX IO

def _open_maybe_gzip(path, mode="rb"):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, mode)
    return open(path, mode)


def _read_exact(f, nbytes: int, what: str) -> bytes:
    buf = f.read(nbytes)
    if len(buf) != nbytes:
        raise IdxTruncatedError(
            f"expected {nbytes} bytes for {what}, got {len(buf)}")
    return buf


def read_idx_images(path) -> np.ndarray:
    """Parse an IDX image file into a (N, 784) float64 matrix in [0, 1]."""
    with _open_maybe_gzip(path) as f:
        magic, count, rows, cols = struct.unpack(
            ">IIII", _read_exact(f, 16, "image header"))
        if magic != IMAGE_MAGIC:
            raise IdxBadMagicError(
                f"bad image magic 0x{magic:08x} (want 0x{IMAGE_MAGIC:08x})")
        payload = _read_exact(f, count * rows * cols, "image payload")
    raw = np.frombuffer(payload, dtype=np.uint8)
    return raw.reshape(count, rows * cols).astype(np.float64) / 255.0


def read_idx_labels(path) -> np.ndarray:
    """Parse an IDX label file into a (N,) int64 vector."""
    with _open_maybe_gzip(path) as f:
        magic, count = struct.unpack(">II", _read_exact(f, 8, "label header"))
        if magic != LABEL_MAGIC:
            raise IdxBadMagicError(
                f"bad label magic 0x{magic:08x} (want 0x{LABEL_MAGIC:08x})")
        payload = _read_exact(f, count, "label payload")
    return np.frombuffer(payload, dtype=np.uint8).astype(np.int64)


def load_idx(path, kind: str) -> np.ndarray:
    """Parse one IDX file. kind is 'images' or 'labels'."""
    if kind == "images":
        return read_idx_images(path)
    if kind == "labels":
        return read_idx_labels(path)
    raise ValueError(f"kind must be 'images' or 'labels', got {kind!r}")


def write_idx_images(path, pixels: np.ndarray) -> None:
    """Serialize a (N, 784) [0,1] matrix back to IDX bytes (inverse of read)."""
    count = len(pixels)
    raw = np.rint(np.asarray(pixels) * 255.0).astype(np.uint8)
    with _open_maybe_gzip(path, "wb") as f:
        f.write(struct.pack(">IIII", IMAGE_MAGIC, count, IMAGE_SIDE, IMAGE_SIDE))
        f.write(raw.tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    count = len(labels)
    with _open_maybe_gzip(path, "wb") as f:
        f.write(struct.pack(">II", LABEL_MAGIC, count))
        f.write(np.asarray(labels, dtype=np.uint8).tobytes())


def load_dataset(images_path, labels_path, origin: str) -> Dataset:
    """Pair an image file with a label file of equal count."""
    pixels = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if len(pixels) != len(labels):
        raise IdxCountMismatchError(
            f"{len(pixels)} images vs {len(labels)} labels")
    return Dataset(pixels, labels, origin)


CANONICAL_FILES = {
    "training": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def _find_idx(data_dir: Path, name: str) -> Path:
    for candidate in (data_dir / name, data_dir / (name + ".gz")):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(
        f"dataset file {name}[.gz] not found in {data_dir}")


def load_data_dir(data_dir) -> tuple:
    """Load (training, test) Datasets from a directory of canonical IDX files."""
    data_dir = Path(data_dir)
    out = []
    for origin in ("training", "test"):
        img_name, lbl_name = CANONICAL_FILES[origin]
        out.append(load_dataset(_find_idx(data_dir, img_name),
                                _find_idx(data_dir, lbl_name), origin))
    return tuple(out)


# ------------------------------------------------------------- operations

def shard_iid(training: Dataset, n: int, shard_size: int = 250,
              rng: np.random.Generator | None = None) -> ShardAssignment:
    """Split the training set into n disjoint shards of shard_size each,
    drawn uniformly without replacement."""
    if rng is None:
        rng = np.random.default_rng()
    need = n * shard_size
    if need > len(training):
        raise ValueError(
            f"cannot draw {n} x {shard_size} = {need} samples "
            f"from a training set of {len(training)}")
    picked = rng.choice(len(training), size=need, replace=False)
    return ShardAssignment([picked[i * shard_size:(i + 1) * shard_size].copy()
                            for i in range(n)])


def apply_trigger(s: Sample, trigger: TriggerPattern = DEFAULT_TRIGGER) -> Sample:
    """Return a copy of the sample with the trigger pixels overwritten.

    The label is left untouched; relabeling is the poisoner's job.
    """
    out = s.copy()
    out.pixels[list(trigger.flat_indices)] = trigger.value
    return out


def stamp_trigger(pixels: np.ndarray,
                  trigger: TriggerPattern = DEFAULT_TRIGGER) -> None:
    """In-place bulk form of apply_trigger for a (N, 784) matrix."""
    pixels[:, list(trigger.flat_indices)] = trigger.value


def poison_shard(shard: Dataset, fraction: float = 0.2, target_label: int = 0,
                 rng: np.random.Generator | None = None,
                 trigger: TriggerPattern = DEFAULT_TRIGGER) -> Dataset:
    """Stamp the trigger onto a random fraction of the shard and relabel
    those samples to the attack target. Order is preserved."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0,1], got {fraction}")
    if rng is None:
        rng = np.random.default_rng()
    k = int(round(fraction * len(shard)))
    pixels = shard.pixels.copy()
    labels = shard.labels.copy()
    if k > 0:
        idx = rng.choice(len(shard), size=k, replace=False)
        pixels[np.ix_(idx, list(trigger.flat_indices))] = trigger.value
        labels[idx] = target_label
    return Dataset(pixels, labels, shard.origin)


def build_eval_sets(test: Dataset, rng: np.random.Generator | None = None,
                    target_label: int = 0,
                    trigger: TriggerPattern = DEFAULT_TRIGGER) -> tuple:
    """Draw 2000 test samples without replacement and split them in half.

    The first 1000 form the clean evaluation set, unmodified. From the
    second 1000, every sample originally labeled with the attack target is
    removed; the rest get the trigger stamped and their reference label set
    to the target, so accuracy on this set reads as attack success rate.
    """
    if len(test) < 2000:
        raise ValueError(f"need at least 2000 test samples, have {len(test)}")
    if rng is None:
        rng = np.random.default_rng()
    draw = rng.choice(len(test), size=2000, replace=False)
    clean = test.subset(draw[:1000], "eval-clean")

    second = draw[1000:]
    keep = second[test.labels[second] != target_label]
    pixels = test.pixels[keep].copy()
    stamp_trigger(pixels, trigger)
    labels = np.full(len(keep), target_label, dtype=np.int64)
    backdoor = Dataset(pixels, labels, "eval-backdoor")
    return clean, backdoor
