"""Dataset ingestion: IDX (MNIST / Fashion-MNIST) and CIFAR-10 binary
formats, sphere normalization, one-vs-all label encoding, and synthetic
test data.

Datasets are fetched out-of-band; nothing here ever downloads. Each input
row is rescaled so that sum(x_i^2) = d; zero-norm rows cannot be normalized
and are dropped with a recorded count.
"""

from __future__ import annotations

import csv
import hashlib
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import SeededRng

log = logging.getLogger(__name__)

CIFAR_RECORD = 3073  # 1 label byte + 3 * 32 * 32 pixel bytes
CIFAR_TRAIN_FILES = [f"data_batch_{i}.bin" for i in range(1, 6)]
CIFAR_TEST_FILE = "test_batch.bin"


class FormatError(ValueError):
    """A dataset file does not conform to its binary format."""


@dataclass
class Dataset:
    inputs: np.ndarray  # n x d, float64, rows on the sphere sum x^2 = d
    labels: np.ndarray  # n x c, entries +-1, exactly one +1 per row
    name: str = "dataset"
    split: str = "train"
    dropped_rows: int = 0

    def __post_init__(self):
        if self.inputs.shape[0] != self.labels.shape[0]:
            raise ValueError("inputs and labels disagree on sample count")
        if self.split not in ("train", "eval"):
            raise ValueError(f"split must be train or eval, got {self.split!r}")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def d(self) -> int:
        return self.inputs.shape[1]

    @property
    def c(self) -> int:
        return self.labels.shape[1]

    @property
    def class_indices(self) -> np.ndarray:
        return np.argmax(self.labels, axis=1)


# ---------------------------------------------------------------------------
# IDX format (big-endian): 2 zero bytes, dtype byte, rank byte, then one
# uint32 size per dimension, then the payload.

_IDX_DTYPES = {0x08: np.uint8}


def parse_idx(blob: bytes) -> np.ndarray:
    if len(blob) < 4:
        raise FormatError("IDX header truncated (needs 4 magic bytes)")
    zero, dtype_byte, rank = blob[0] << 8 | blob[1], blob[2], blob[3]
    if zero != 0:
        raise FormatError(f"IDX magic must start with two zero bytes, got {blob[:2]!r}")
    if dtype_byte not in _IDX_DTYPES:
        raise FormatError(f"unsupported IDX dtype byte 0x{dtype_byte:02x}")
    if len(blob) < 4 + 4 * rank:
        raise FormatError(f"IDX header truncated: rank {rank} needs {4 * rank} size bytes")
    dims = struct.unpack(f">{rank}I", blob[4 : 4 + 4 * rank])
    count = int(np.prod(dims, dtype=np.int64)) if dims else 0
    payload = blob[4 + 4 * rank :]
    if len(payload) != count:
        raise FormatError(
            f"IDX payload has {len(payload)} bytes but dims {dims} require {count}"
        )
    return np.frombuffer(payload, dtype=_IDX_DTYPES[dtype_byte]).reshape(dims)


def load_idx(path) -> np.ndarray:
    return parse_idx(Path(path).read_bytes())


def write_idx(tensor: np.ndarray, path) -> None:
    """Inverse of parse_idx for uint8 tensors; round-trips bitwise."""
    tensor = np.ascontiguousarray(tensor, dtype=np.uint8)
    header = bytes([0, 0, 0x08, tensor.ndim])
    header += struct.pack(f">{tensor.ndim}I", *tensor.shape)
    Path(path).write_bytes(header + tensor.tobytes())


# ---------------------------------------------------------------------------
# CIFAR-10 binary format: fixed 3073-byte records.


def parse_cifar_records(blob: bytes) -> tuple[np.ndarray, np.ndarray]:
    if len(blob) == 0 or len(blob) % CIFAR_RECORD != 0:
        raise FormatError(
            f"CIFAR-10 file size {len(blob)} is not a positive multiple of {CIFAR_RECORD}"
        )
    records = np.frombuffer(blob, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
    labels = records[:, 0].copy()
    if labels.max(initial=0) > 9:
        bad = int(labels.max())
        raise FormatError(f"CIFAR-10 label byte {bad} out of range [0, 9]")
    return records[:, 1:].copy(), labels


def write_cifar_records(images: np.ndarray, labels: np.ndarray, path) -> None:
    images = np.ascontiguousarray(images, dtype=np.uint8).reshape(len(labels), CIFAR_RECORD - 1)
    out = np.empty((len(labels), CIFAR_RECORD), dtype=np.uint8)
    out[:, 0] = labels
    out[:, 1:] = images
    Path(path).write_bytes(out.tobytes())


def load_cifar10(directory, split: str = "train") -> tuple[np.ndarray, np.ndarray]:
    directory = Path(directory)
    names = CIFAR_TRAIN_FILES if split == "train" else [CIFAR_TEST_FILE]
    images, labels = [], []
    for name in names:
        path = directory / name
        if not path.is_file():
            raise FileNotFoundError(f"missing CIFAR-10 batch file: {path}")
        im, la = parse_cifar_records(path.read_bytes())
        images.append(im)
        labels.append(la)
    return np.concatenate(images), np.concatenate(labels)


# ---------------------------------------------------------------------------
# Preprocessing


def sphere_normalize(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale each row so sum(x_i^2) = d. Returns (normalized, zero_row_mask)."""
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[1]
    sq = np.sum(x * x, axis=1)
    zero = sq == 0.0
    scale = np.ones_like(sq)
    scale[~zero] = np.sqrt(d / sq[~zero])
    return x * scale[:, None], zero


def encode_labels(class_indices: np.ndarray, c: int) -> np.ndarray:
    """One-vs-all +-1 rows: +1 at the class index, -1 elsewhere."""
    n = len(class_indices)
    labels = -np.ones((n, c), dtype=np.float64)
    labels[np.arange(n), class_indices] = 1.0
    return labels


def preprocess(
    images: np.ndarray,
    class_indices: np.ndarray,
    subsample_n: int | None = None,
    seed: int = 0,
    split: str = "train",
    c: int = 10,
    name: str = "dataset",
) -> Dataset:
    """Flatten, drop zero-norm rows, subsample (train only), sphere-normalize,
    encode labels."""
    if len(images) == 0:
        raise ValueError("empty raw data")
    flat = np.asarray(images, dtype=np.float64).reshape(len(images), -1)
    idx = np.asarray(class_indices, dtype=np.int64)
    nonzero = np.sum(flat * flat, axis=1) > 0.0
    dropped = int(np.sum(~nonzero))
    if dropped:
        log.info("dropping %d zero-norm rows from %s/%s", dropped, name, split)
        flat, idx = flat[nonzero], idx[nonzero]
    if split == "train" and subsample_n is not None and subsample_n < len(flat):
        pick = np.sort(SeededRng(seed).choice_without_replacement(len(flat), subsample_n))
        flat, idx = flat[pick], idx[pick]
    normalized, _ = sphere_normalize(flat)
    return Dataset(
        inputs=normalized,
        labels=encode_labels(idx, c),
        name=name,
        split=split,
        dropped_rows=dropped,
    )


def synthetic_dataset(n: int, d: int, c: int, margin: float, seed: int) -> Dataset:
    """Gaussian blobs around margin-separated centroids, sphere-normalized."""
    if n < c or d < c or margin <= 0:
        raise ValueError("need n >= c, d >= c, margin > 0")
    rng = SeededRng(seed)
    # orthogonal centroids along the first c axes keep the classes separable
    centroids = np.zeros((c, d))
    centroids[np.arange(c), np.arange(c)] = margin
    idx = np.arange(n) % c
    points = centroids[idx] + rng.gaussian(n, d)
    normalized, _ = sphere_normalize(points)
    return Dataset(
        inputs=normalized,
        labels=encode_labels(idx, c),
        name=f"synthetic(n={n},d={d},c={c},margin={margin},seed={seed})",
        split="train",
    )


# ---------------------------------------------------------------------------
# CSV export/import for synthetic data


def export_csv(dataset: Dataset, path) -> None:
    d = dataset.d
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(d)] + ["label"])
        for row, cls in zip(dataset.inputs, dataset.class_indices):
            writer.writerow([repr(float(v)) for v in row] + [int(cls)])


def import_csv(path, c: int | None = None, split: str = "train") -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "label":
            raise FormatError(f"CSV header must end with 'label', got {header[-1:]}")
        rows, classes = [], []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise FormatError(f"row {line_no} has {len(row)} fields, expected {len(header)}")
            rows.append([float(v) for v in row[:-1]])
            classes.append(int(row[-1]))
    idx = np.asarray(classes, dtype=np.int64)
    n_classes = c if c is not None else int(idx.max()) + 1
    return Dataset(
        inputs=np.asarray(rows, dtype=np.float64),
        labels=encode_labels(idx, n_classes),
        name=str(path),
        split=split,
    )


def file_checksum(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
