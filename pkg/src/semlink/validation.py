"""Input validation helpers shared by the estimators and the pipeline modules.

Conventions: byte images are uint8 arrays of shape (32, 32, 3) (or a leading
batch axis), float images are float arrays of the same shape with values in
[0, 1]. Interleaved HWC layout throughout; the CIFAR-10 loader converts from
the on-disk planar layout once, at ingestion.
"""

from __future__ import annotations

import math

import numpy as np

IMG_H = 32
IMG_W = 32
IMG_C = 3
IMG_SHAPE = (IMG_H, IMG_W, IMG_C)
SYMBOLS_PER_IMAGE = IMG_H * IMG_W * IMG_C  # 3072

CHANNEL_MODELS = ("awgn", "rayleigh")
SYSTEMS = ("dnn", "qam256")


def check_image_u8(img, name="img"):
    """Validate a single byte image, returning it as a uint8 ndarray."""
    arr = np.asarray(img)
    if arr.shape != IMG_SHAPE:
        raise ValueError(f"{name}: expected shape {IMG_SHAPE}, got {arr.shape}")
    if arr.dtype != np.uint8:
        raise ValueError(f"{name}: expected dtype uint8, got {arr.dtype}")
    return arr


def check_image_f(img, name="img"):
    """Validate a single float image (values in [0, 1])."""
    arr = np.asarray(img, dtype=np.float32)
    if arr.shape != IMG_SHAPE:
        raise ValueError(f"{name}: expected shape {IMG_SHAPE}, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name}: non-finite pixel values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"{name}: pixel values outside [0, 1]")
    return arr


def as_image_batch(X, dtype, name="X"):
    """Coerce X to a batch of images (N, 32, 32, 3) of the given dtype.

    Accepts a single image, a batch, or flat (N, 3072) rows (sklearn-style
    2-D input). Raises ValueError on anything else.
    """
    arr = np.asarray(X)
    if arr.ndim == 3 and arr.shape == IMG_SHAPE:
        arr = arr[None]
    elif arr.ndim == 2 and arr.shape[1] == SYMBOLS_PER_IMAGE:
        arr = arr.reshape(-1, *IMG_SHAPE)
    elif arr.ndim == 4 and arr.shape[1:] == IMG_SHAPE:
        pass
    else:
        raise ValueError(
            f"{name}: expected (N, 32, 32, 3), (32, 32, 3) or (N, 3072), got {arr.shape}"
        )
    if arr.shape[0] == 0:
        raise ValueError(f"{name}: empty batch")
    return np.ascontiguousarray(arr.astype(dtype, copy=False))


def check_snr_db(snr_db, name="snr_db"):
    """Validate an SNR value in dB. +inf is the explicit noiseless sentinel."""
    v = float(snr_db)
    if math.isnan(v) or v == -math.inf:
        raise ValueError(f"{name}: must be a real dB value or +inf, got {snr_db!r}")
    return v


def check_channel_model(model, name="model"):
    if model not in CHANNEL_MODELS:
        raise ValueError(f"{name}: expected one of {CHANNEL_MODELS}, got {model!r}")
    return model


def check_seed(seed, name="seed"):
    s = int(seed)
    if s < 0 or s >= 2**64:
        raise ValueError(f"{name}: expected u64, got {seed!r}")
    return s
