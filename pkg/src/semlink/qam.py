"""Equal-rate baseline: Gray-coded square 256-QAM, one symbol per pixel byte.

Construction: the high nibble of each byte selects the I amplitude, the low
nibble the Q amplitude. Each nibble is a binary-reflected Gray code
g = k xor (k >> 1) of the level index k in 0..15; the axis amplitude is
2k - 15 (levels -15, -13, ..., +15) and the complex symbol is scaled by
1/sqrt(170) so the constellation has unit average power exactly
(per-axis mean of {1, 9, ..., 225} is 85; two axes give 170).

Detection is hard-decision nearest-point with ties broken toward the smaller
byte label; no source or channel coding on top.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from . import channel as chan
from .validation import check_image_u8

QAM_SCALE = 1.0 / math.sqrt(170.0)


def _gray_encode(k):
    return k ^ (k >> 1)


def _build_constellation():
    """Points indexed by byte label: points[b] is the symbol for byte b."""
    k = np.arange(16)
    gray = _gray_encode(k)  # level index -> nibble label
    level_of_nibble = np.empty(16, dtype=np.int64)  # nibble label -> level index
    level_of_nibble[gray] = k
    amps = 2 * level_of_nibble - 15  # nibble label -> axis amplitude
    b = np.arange(256)
    points = (amps[b >> 4] + 1j * amps[b & 0xF]) * QAM_SCALE
    return points, amps


@dataclass(frozen=True)
class Constellation256:
    points: np.ndarray  # (256,) complex, indexed by byte label
    labels: np.ndarray  # (256,) uint8 byte label per point
    axis_amps: np.ndarray  # (16,) int, nibble label -> unscaled amplitude
    scale: float = QAM_SCALE


_POINTS, _AXIS_AMPS = _build_constellation()
CONSTELLATION = Constellation256(
    points=_POINTS, labels=np.arange(256, dtype=np.uint8), axis_amps=_AXIS_AMPS
)


def map_qam256(byte_values):
    """Map bytes to unit-average-power complex symbols."""
    b = np.asarray(byte_values)
    if b.dtype != np.uint8:
        b = b.astype(np.uint8)  # validates range implicitly for int input
    return CONSTELLATION.points[b]


def demap_qam256(symbols, chunk=1 << 12):
    """Hard-decision demapper: nearest constellation point in Euclidean
    distance, ties toward the smaller byte label (first argmin)."""
    s = np.asarray(symbols, dtype=np.complex128).reshape(-1)
    pr = CONSTELLATION.points.real
    pi = CONSTELLATION.points.imag
    sr = np.ascontiguousarray(s.real)
    si = np.ascontiguousarray(s.imag)
    out = np.empty(s.shape, dtype=np.uint8)
    for lo in range(0, len(s), chunk):
        a = sr[lo : lo + chunk, None] - pr
        b = si[lo : lo + chunk, None] - pi
        np.square(a, out=a)
        np.square(b, out=b)
        a += b
        out[lo : lo + chunk] = np.argmin(a, axis=1)
    return out.reshape(np.shape(symbols))


def transmit_qam(img, spec):
    """Send one byte image through the channel: map -> y = h s + n ->
    perfect-CSI equalize y/h -> demap. Deterministic per spec.seed."""
    arr = check_image_u8(img)
    tx = map_qam256(arr.reshape(-1))
    h, n, _sigma2 = chan.draw_complex_channel(spec, tx.shape)
    y = h * tx if n is None else h * tx + n
    rx = demap_qam256(y / h)
    return rx.reshape(arr.shape)


def ser_closed_form(snr_db):
    """Closed-form symbol error rate of square 256-QAM over AWGN at the given
    per-symbol SNR (used as the Monte Carlo oracle).

    P_axis = 2 (1 - 1/16) Q(sqrt(3 snr / 255)); SER = 1 - (1 - P_axis)^2.
    """
    v = float(snr_db)
    if v == math.inf:
        return 0.0
    snr = 10.0 ** (v / 10.0)
    q = 0.5 * erfc(math.sqrt(3.0 * snr / 255.0) / math.sqrt(2.0))
    p_axis = 2.0 * (1.0 - 1.0 / 16.0) * q
    return 1.0 - (1.0 - p_axis) ** 2
