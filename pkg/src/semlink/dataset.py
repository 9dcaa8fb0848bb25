"""CIFAR-10 ingestion in the native binary batch layout, plus pixel-domain
conversions between byte images and unit-interval float images.

On-disk record layout (one record per image): 1 label byte followed by 3072
pixel bytes stored planar (1024 red, 1024 green, 1024 blue, each row-major).
In memory, images are interleaved HWC uint8 arrays of shape (32, 32, 3); this
is the single pixel layout used everywhere downstream.

The dataset itself is not distributed here; point ``load_cifar10`` (or the
``--data`` CLI flag / SEMLINK_DATA) at a directory containing
data_batch_1.bin .. data_batch_5.bin and test_batch.bin.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .seeding import rng_from
from .validation import IMG_SHAPE, check_image_u8

RECORD_BYTES = 3073  # 1 label byte + 32*32*3 pixel bytes
TRAIN_FILES = [f"data_batch_{i}.bin" for i in range(1, 6)]
TEST_FILE = "test_batch.bin"


class DatasetFormatError(Exception):
    """Raised when a batch file is missing or malformed."""


@dataclass(frozen=True)
class Split:
    """One split of the dataset: images (N, 32, 32, 3) uint8 and labels (N,)."""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.images.ndim != 4 or self.images.shape[1:] != IMG_SHAPE:
            raise ValueError(f"split images: bad shape {self.images.shape}")
        if len(self.labels) != len(self.images):
            raise ValueError("split images/labels length mismatch")

    def __len__(self):
        return len(self.images)


@dataclass(frozen=True)
class Dataset:
    train: Split
    test: Split
    source_dir: str = field(default="", compare=False)


def _read_batch_file(path):
    """Read one binary batch file into (labels, images) arrays."""
    if not os.path.isfile(path):
        raise DatasetFormatError(f"missing batch file: {path}")
    raw = np.fromfile(path, dtype=np.uint8)
    if raw.size == 0 or raw.size % RECORD_BYTES != 0:
        raise DatasetFormatError(
            f"bad batch file {path}: size {raw.size} is not a positive multiple of {RECORD_BYTES}"
        )
    recs = raw.reshape(-1, RECORD_BYTES)
    labels = recs[:, 0].copy()
    if labels.max(initial=0) > 9:
        raise DatasetFormatError(f"bad batch file {path}: label byte outside 0..9")
    # planar (3, 32, 32) -> interleaved (32, 32, 3)
    images = np.ascontiguousarray(
        recs[:, 1:].reshape(-1, 3, 32, 32).transpose(0, 2, 3, 1)
    )
    return labels, images


def serialize_records(split):
    """Re-encode a split into raw binary records (the on-disk layout)."""
    n = len(split)
    out = np.empty((n, RECORD_BYTES), dtype=np.uint8)
    out[:, 0] = split.labels
    out[:, 1:] = split.images.transpose(0, 3, 1, 2).reshape(n, -1)
    return out.reshape(-1)


def load_cifar10(data_dir):
    """Load the six CIFAR-10 binary batch files from ``data_dir``.

    Returns a Dataset with 50,000 train and 10,000 test images, file and
    record order preserved.
    """
    parts = [_read_batch_file(os.path.join(data_dir, f)) for f in TRAIN_FILES]
    train = Split(
        images=np.concatenate([p[1] for p in parts]),
        labels=np.concatenate([p[0] for p in parts]),
    )
    te_labels, te_images = _read_batch_file(os.path.join(data_dir, TEST_FILE))
    return Dataset(train=train, test=Split(te_images, te_labels), source_dir=str(data_dir))


def to_float(img):
    """Byte image -> float image in [0, 1] (value = byte / 255)."""
    arr = np.asarray(img)
    if arr.dtype != np.uint8:
        raise ValueError(f"to_float: expected uint8 pixels, got {arr.dtype}")
    return arr.astype(np.float32) / np.float32(255.0)


def to_bytes(img):
    """Float image -> byte image: round(clamp(v, 0, 1) * 255).

    Rounding is half-away-from-zero so that to_bytes(to_float(b)) == b exactly
    for every byte value.
    """
    arr = np.asarray(img, dtype=np.float64)
    scaled = np.clip(arr, 0.0, 1.0) * 255.0
    return np.floor(scaled + 0.5).astype(np.uint8)


def sample_images(ds, split, n, seed):
    """Draw n distinct images from a split, deterministically per (seed, n, split).

    Returns a (n, 32, 32, 3) uint8 array. Selection is a seeded permutation
    prefix, so it is a pure function of its arguments.
    """
    part = ds.train if split == "train" else ds.test if split == "test" else None
    if part is None:
        raise ValueError(f"sample_images: split must be 'train' or 'test', got {split!r}")
    if n > len(part):
        raise ValueError(f"sample_images: n={n} exceeds split size {len(part)}")
    rng = rng_from(seed, "sample_images", split, n)
    idx = rng.permutation(len(part))[:n]
    return part.images[idx].copy()


def single(img):
    """Validate and return one byte image (helper for call sites taking one image)."""
    return check_image_u8(img)
