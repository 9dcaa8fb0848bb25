"""Reconstruction quality metrics: SSIM (primary figure of merit) and PSNR.

SSIM follows the reference single-scale definition: 11x11 Gaussian window
with sigma = 1.5, C1 = (0.01 L)^2, C2 = (0.03 L)^2 with dynamic range L = 1
for unit-interval images, evaluated at valid window positions only (no
padding; 22x22 positions for 32x32 inputs). Channels are scored separately
on [0, 1] data and averaged with equal weight.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import correlate1d

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2
_PAD = SSIM_WINDOW // 2


def _gaussian_kernel_1d():
    x = np.arange(SSIM_WINDOW, dtype=np.float64) - _PAD
    k = np.exp(-(x**2) / (2.0 * SSIM_SIGMA**2))
    return k / k.sum()


_KERNEL_1D = _gaussian_kernel_1d()


def _filter_valid(batch):
    """Gaussian-filter (N, H, W) maps and crop to valid window positions.

    Separable correlation with constant padding, then cropping the pad,
    equals direct valid-mode filtering with the 2-D outer-product window.
    """
    out = correlate1d(batch, _KERNEL_1D, axis=1, mode="constant")
    out = correlate1d(out, _KERNEL_1D, axis=2, mode="constant")
    return out[:, _PAD:-_PAD, _PAD:-_PAD]


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def ssim_batch(a, b):
    """SSIM per image pair for (N, H, W, C) batches. Returns (N,) scores."""
    a, b = _check_pair(a, b)
    if a.ndim != 4:
        raise ValueError(f"expected (N, H, W, C), got {a.shape}")
    n, h, w, c = a.shape
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise ValueError(f"images smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    # fold channels into the batch axis; each channel scored independently
    x = a.transpose(0, 3, 1, 2).reshape(n * c, h, w)
    y = b.transpose(0, 3, 1, 2).reshape(n * c, h, w)
    mu_x = _filter_valid(x)
    mu_y = _filter_valid(y)
    var_x = _filter_valid(x * x) - mu_x**2
    var_y = _filter_valid(y * y) - mu_y**2
    cov = _filter_valid(x * y) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_x**2 + mu_y**2 + SSIM_C1) * (var_x + var_y + SSIM_C2)
    per_channel = (num / den).mean(axis=(1, 2))
    return per_channel.reshape(n, c).mean(axis=1)


def ssim(a, b):
    """SSIM between two (H, W, C) float images in [0, 1]."""
    a, b = _check_pair(a, b)
    if a.ndim != 3:
        raise ValueError(f"expected (H, W, C), got {a.shape}")
    return float(ssim_batch(a[None], b[None])[0])


def psnr(a, b):
    """PSNR in dB for unit-range images: 10 log10(1 / mse); inf when identical."""
    a, b = _check_pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def aggregate(pairs):
    """Mean/std SSIM and mean PSNR over (reference, reconstruction) pairs.

    Std is the population standard deviation. Raises on an empty input.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("aggregate: empty pair list")
    a = np.stack([np.asarray(p[0], dtype=np.float64) for p in pairs])
    b = np.stack([np.asarray(p[1], dtype=np.float64) for p in pairs])
    scores = ssim_batch(a, b)
    psnrs = np.array([psnr(x, y) for x, y in pairs])
    return float(scores.mean()), float(scores.std()), float(psnrs.mean())
