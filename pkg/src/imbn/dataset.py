"""MNIST-style IDX containers, imbalanced two-class subsets, mini-batch splits.

IDX layout (big endian):
  images: magic 0x00000803 | count | rows | cols | count*rows*cols pixel bytes
  labels: magic 0x00000801 | count | count label bytes (each 0-9)
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (
    BadLabelError,
    BadMagicError,
    BatchTooSmallError,
    IdxFormatError,
    InsufficientDataError,
    TruncatedError,
)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


@dataclass
class RawMnist:
    """One parsed split: byte images and digit labels, in file order."""

    images: np.ndarray  # (N, rows, cols) uint8
    labels: np.ndarray  # (N,) uint8

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"{self.images.shape[0]} images but {self.labels.shape[0]} labels"
            )


@dataclass
class Dataset:
    """Flattened inputs scaled to [0, 1], 1-of-K targets, integer class labels."""

    inputs: np.ndarray  # (N, n_features) float64
    targets: np.ndarray  # (N, K) float64 one-hot rows
    labels: np.ndarray  # (N,) int class indices
    class_names: list  # original digit per class index

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_features(self) -> int:
        return self.inputs.shape[1]

    @property
    def n_classes(self) -> int:
        return self.targets.shape[1]


@dataclass(frozen=True)
class ExperimentSpec:
    """A two-class imbalanced subset: digits, per-split counts, sampling seed.

    Class index 0 is the majority digit, 1 the minority digit.
    """

    majority_digit: int
    minority_digit: int
    train_majority: int
    train_minority: int
    test_majority: int
    test_minority: int
    seed: int = 0

    def with_seed(self, seed: int) -> "ExperimentSpec":
        return replace(self, seed=seed)


# The three benchmark subsets; the minority class is below 1% of the
# training data in each.
EXPERIMENTS = {
    "i": ExperimentSpec(0, 1, 5923, 45, 980, 1135),
    "ii": ExperimentSpec(8, 1, 5851, 45, 974, 1135),
    "iii": ExperimentSpec(7, 4, 6265, 39, 1028, 982),
}


def _read_u32(data: bytes, offset: int) -> int:
    if len(data) < offset + 4:
        raise TruncatedError(f"header ends at byte {len(data)}, need {offset + 4}")
    return struct.unpack_from(">I", data, offset)[0]


def parse_idx_images(data: bytes) -> np.ndarray:
    """Parse an image container into a (count, rows, cols) uint8 array."""
    magic = _read_u32(data, 0)
    if magic != IMAGE_MAGIC:
        raise BadMagicError(f"expected magic {IMAGE_MAGIC:#010x}, got {magic:#010x}")
    count = _read_u32(data, 4)
    rows = _read_u32(data, 8)
    cols = _read_u32(data, 12)
    expected = 16 + count * rows * cols
    if len(data) < expected:
        raise TruncatedError(f"need {expected} bytes for {count} images, got {len(data)}")
    if len(data) > expected:
        raise IdxFormatError(f"{len(data) - expected} trailing bytes after pixel data")
    pixels = np.frombuffer(data, dtype=np.uint8, offset=16)
    return pixels.reshape(count, rows, cols).copy()


def parse_idx_labels(data: bytes) -> np.ndarray:
    """Parse a label container into a (count,) uint8 array of digits 0-9."""
    magic = _read_u32(data, 0)
    if magic != LABEL_MAGIC:
        raise BadMagicError(f"expected magic {LABEL_MAGIC:#010x}, got {magic:#010x}")
    count = _read_u32(data, 4)
    expected = 8 + count
    if len(data) < expected:
        raise TruncatedError(f"need {expected} bytes for {count} labels, got {len(data)}")
    if len(data) > expected:
        raise IdxFormatError(f"{len(data) - expected} trailing bytes after label data")
    labels = np.frombuffer(data, dtype=np.uint8, offset=8).copy()
    if labels.size and labels.max() > 9:
        bad = int(np.argmax(labels > 9))
        raise BadLabelError(f"label {labels[bad]} at index {bad} is not a digit")
    return labels


def write_idx_images(images: np.ndarray) -> bytes:
    """Inverse of parse_idx_images, bit-exact."""
    images = np.ascontiguousarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    return struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols) + images.tobytes()


def write_idx_labels(labels: np.ndarray) -> bytes:
    """Inverse of parse_idx_labels, bit-exact."""
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    return struct.pack(">II", LABEL_MAGIC, labels.size) + labels.tobytes()


def _read_file(path) -> bytes:
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as fh:
            return fh.read()
    return path.read_bytes()


def load_raw_mnist(images_path, labels_path) -> RawMnist:
    """Load one split from an image file and a label file (optionally .gz)."""
    return RawMnist(
        images=parse_idx_images(_read_file(images_path)),
        labels=parse_idx_labels(_read_file(labels_path)),
    )


def encode_one_hot(label_index: int, k: int) -> np.ndarray:
    """Length-k vector with a single 1 at label_index."""
    if not 0 <= label_index < k:
        raise IndexError(f"label index {label_index} outside 0..{k - 1}")
    out = np.zeros(k)
    out[label_index] = 1.0
    return out


def _pick_digit(raw: RawMnist, digit: int, count: int, rng) -> np.ndarray:
    available = np.flatnonzero(raw.labels == digit)
    if available.size < count:
        raise InsufficientDataError(
            f"digit {digit}: requested {count} samples, split has {available.size}"
        )
    return rng.choice(available, size=count, replace=False)


def _subset(raw: RawMnist, spec: ExperimentSpec, n_majority: int, n_minority: int, rng) -> Dataset:
    picked = np.concatenate(
        [
            _pick_digit(raw, spec.majority_digit, n_majority, rng),
            _pick_digit(raw, spec.minority_digit, n_minority, rng),
        ]
    )
    labels = np.concatenate(
        [np.zeros(n_majority, dtype=int), np.ones(n_minority, dtype=int)]
    )
    inputs = raw.images[picked].reshape(picked.size, -1).astype(np.float64) / 255.0
    targets = np.eye(2)[labels]
    return Dataset(
        inputs=inputs,
        targets=targets,
        labels=labels,
        class_names=[spec.majority_digit, spec.minority_digit],
    )


def build_experiment(train: RawMnist, test: RawMnist, spec: ExperimentSpec):
    """Draw the two-class subsets for one experiment.

    Sampling is uniform without replacement and fully determined by spec.seed.
    Returns (train Dataset, test Dataset) with K = 2.
    """
    rng = np.random.default_rng(spec.seed)
    train_ds = _subset(train, spec, spec.train_majority, spec.train_minority, rng)
    test_ds = _subset(test, spec, spec.test_majority, spec.test_minority, rng)
    return train_ds, test_ds


@dataclass
class BatchPartition:
    """Disjoint index batches covering 0..N-1, each of size >= 2."""

    batches: list

    @property
    def r(self) -> int:
        return len(self.batches)


def partition_batches(n: int, batch_size: int, rng) -> BatchPartition:
    """Shuffle 0..n-1 and split into consecutive chunks of batch_size.

    A trailing chunk of size 1 is merged into the previous batch so every
    batch supports an unbiased variance.
    """
    if batch_size < 2:
        raise BatchTooSmallError(f"batch_size must be >= 2, got {batch_size}")
    if n < 2:
        raise BatchTooSmallError(f"cannot batch {n} sample(s) into batches of >= 2")
    order = rng.permutation(n)
    batches = [order[i : i + batch_size] for i in range(0, n, batch_size)]
    if len(batches) > 1 and batches[-1].size < 2:
        tail = batches.pop()
        batches[-1] = np.concatenate([batches[-1], tail])
    return BatchPartition(batches=batches)
