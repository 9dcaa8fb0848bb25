"""Evaluation harness: end-to-end image transmission for both systems, SNR
sweeps with CSV output, and side-by-side comparison renders.

Every sweep cell (system, channel, SNR) consumes the identical seeded image
selection, and per-image channel seeds are derived from (run seed, cell,
image index), so cells are independent but the whole sweep is reproducible
byte-for-byte from one seed.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

from . import channel as chan
from . import codec, metrics, qam
from .dataset import sample_images, to_bytes, to_float
from .seeding import derive_seed
from .validation import CHANNEL_MODELS, SYSTEMS, check_channel_model, check_snr_db

DEFAULT_SNR_GRID = tuple(float(v) for v in range(0, 45, 5))
CSV_HEADER = "system,channel,snr_db,n_images,ssim_mean,ssim_std,psnr_mean_db,seed"


@dataclass(frozen=True)
class EvalRecord:
    system: str
    channel: str
    snr_db: float
    n_images: int
    ssim_mean: float
    ssim_std: float
    psnr_mean_db: float
    seed: int


def _snr_label(snr_db):
    return f"{float(snr_db):g}"


def transmit_dnn_images(model, images_u8, channel_model, snr_db, seeds, h_floor=chan.H_FLOOR_DEFAULT):
    """Send byte images through encode -> channel -> equalize -> decode.

    Each image is its own power-normalized block with its own channel seed.
    Returns clamped float reconstructions (N, 32, 32, 3).
    """
    floats = to_float(images_u8)
    symbols = codec.encode(floats, model)
    noisy = np.empty(symbols.shape, dtype=np.float64)
    for i in range(len(symbols)):
        spec = chan.ChannelSpec(model=channel_model, snr_db=snr_db, seed=seeds[i], h_floor=h_floor)
        block = chan.normalize_power(symbols[i].reshape(-1))
        rx = chan.apply_channel(block, spec)
        noisy[i] = chan.equalize(rx, block.power_coeff).reshape(symbols[i].shape)
    return codec.decode(noisy, model, clamp=True)


def transmit_qam_images(images_u8, channel_model, snr_db, seeds, h_floor=chan.H_FLOOR_DEFAULT):
    """Send byte images through the 256-QAM baseline; returns byte images.

    Per-image channel realizations match qam.transmit_qam exactly; only the
    hard-decision demap is batched across images for speed.
    """
    n = len(images_u8)
    eq = np.empty((n, 3072), dtype=np.complex128)
    for i, img in enumerate(images_u8):
        spec = chan.ChannelSpec(model=channel_model, snr_db=snr_db, seed=seeds[i], h_floor=h_floor)
        tx = qam.map_qam256(np.ascontiguousarray(img).reshape(-1))
        h, noise, _sigma2 = chan.draw_complex_channel(spec, tx.shape)
        y = h * tx if noise is None else h * tx + noise
        eq[i] = y / h
    return qam.demap_qam256(eq).reshape(np.shape(images_u8)).astype(np.uint8)


def _cell_seeds(seed, system, channel_model, snr_db, n):
    label = _snr_label(snr_db)
    return [derive_seed(seed, "cell", system, channel_model, label, i) for i in range(n)]


def run_cell(model, images_u8, system, channel_model, snr_db, seed, h_floor=chan.H_FLOOR_DEFAULT):
    """Evaluate one (system, channel, snr) cell; returns an EvalRecord."""
    n = len(images_u8)
    seeds = _cell_seeds(seed, system, channel_model, snr_db, n)
    refs = to_float(images_u8).astype(np.float64)
    if system == "dnn":
        if model is None:
            raise ValueError("dnn cell requires trained codec parameters")
        recon = transmit_dnn_images(model, images_u8, channel_model, snr_db, seeds, h_floor).astype(np.float64)
    elif system == "qam256":
        recon = to_float(transmit_qam_images(images_u8, channel_model, snr_db, seeds, h_floor)).astype(np.float64)
    else:
        raise ValueError(f"unknown system {system!r}")
    scores = metrics.ssim_batch(refs, recon)
    psnrs = np.array([metrics.psnr(refs[i], recon[i]) for i in range(n)])
    return EvalRecord(
        system=system,
        channel=channel_model,
        snr_db=float(snr_db),
        n_images=n,
        ssim_mean=float(scores.mean()),
        ssim_std=float(scores.std()),
        psnr_mean_db=float(psnrs.mean()),
        seed=seed,
    )


def run_sweep(
    model,
    ds,
    snr_grid=DEFAULT_SNR_GRID,
    channels=CHANNEL_MODELS,
    systems=SYSTEMS,
    n_images=320,
    seed=0,
    h_floor=chan.H_FLOOR_DEFAULT,
):
    """Full SNR sweep; one record per (system, channel, snr) cell.

    The same seeded test-image selection feeds every cell.
    """
    images = sample_images(ds, "test", n_images, seed)
    records = []
    for system in systems:
        for channel_model in channels:
            check_channel_model(channel_model)
            for snr_db in snr_grid:
                check_snr_db(snr_db)
                records.append(run_cell(model, images, system, channel_model, snr_db, seed, h_floor))
    return records


def _fmt(v):
    return f"{v:.6g}"


def write_csv(records, path):
    """Write sweep records sorted by (system, channel, snr_db)."""
    rows = sorted(records, key=lambda r: (r.system, r.channel, r.snr_db))
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                [
                    r.system,
                    r.channel,
                    _fmt(r.snr_db),
                    str(r.n_images),
                    _fmt(r.ssim_mean),
                    _fmt(r.ssim_std),
                    _fmt(r.psnr_mean_db),
                    str(r.seed),
                ]
            )
        )
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def read_csv(path):
    """Parse a sweep CSV back into EvalRecords (printed precision)."""
    with open(path, encoding="utf-8") as f:
        lines = [ln for ln in f.read().splitlines() if ln]
    if lines[0] != CSV_HEADER:
        raise ValueError(f"unexpected CSV header in {path}")
    out = []
    for ln in lines[1:]:
        sys_, ch, snr, n, sm, ss, pm, seed = ln.split(",")
        out.append(
            EvalRecord(sys_, ch, float(snr), int(n), float(sm), float(ss), float(pm), int(seed))
        )
    return out


# ---------------------------------------------------------------------------
# arbitrary-size images: resize to 32-multiples and transmit tile by tile


def prepare_image(arr_u8, max_side=512):
    """Resize an (H, W, 3) byte image so both sides are multiples of 32.

    Anything larger than ``max_side`` is scaled down first (Lanczos); sides
    are then floored to the nearest multiple of 32 (minimum 32).
    """
    arr = np.asarray(arr_u8)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
        raise ValueError(f"expected (H, W, 3) uint8 image, got {arr.shape} {arr.dtype}")
    h, w = arr.shape[:2]
    scale = min(1.0, max_side / max(h, w))
    nh = max(32, int(h * scale) // 32 * 32)
    nw = max(32, int(w * scale) // 32 * 32)
    if (nh, nw) != (h, w):
        img = Image.fromarray(arr, "RGB").resize((nw, nh), Image.LANCZOS)
        arr = np.asarray(img, dtype=np.uint8)
    return arr


def _tiles(arr):
    h, w = arr.shape[:2]
    gh, gw = h // 32, w // 32
    t = arr.reshape(gh, 32, gw, 32, 3).transpose(0, 2, 1, 3, 4)
    return t.reshape(gh * gw, 32, 32, 3), (gh, gw)


def _untile(tiles, grid):
    gh, gw = grid
    t = tiles.reshape(gh, gw, 32, 32, 3).transpose(0, 2, 1, 3, 4)
    return t.reshape(gh * 32, gw * 32, 3)


def transmit_image(model, img_u8, system, channel_model, snr_db, seed, h_floor=chan.H_FLOOR_DEFAULT):
    """Transmit a 32-multiple byte image tile by tile; returns a byte image.

    Tile seeds derive from (seed, system, tile index) so the realization is
    reproducible and differs per tile.
    """
    tiles, grid = _tiles(np.ascontiguousarray(img_u8))
    seeds = [derive_seed(seed, "tile", system, i) for i in range(len(tiles))]
    if system == "dnn":
        recon = to_bytes(transmit_dnn_images(model, tiles, channel_model, snr_db, seeds, h_floor))
    elif system == "qam256":
        recon = transmit_qam_images(tiles, channel_model, snr_db, seeds, h_floor)
    else:
        raise ValueError(f"unknown system {system!r}")
    return _untile(recon, grid)


def save_png(arr_u8, path):
    Image.fromarray(np.ascontiguousarray(arr_u8), "RGB").save(path, format="PNG")


def load_png(path):
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def render_comparison(model, img_u8, snr_grid, channel_model, out_dir, seed=0, systems=SYSTEMS,
                      h_floor=chan.H_FLOOR_DEFAULT):
    """Write the original plus per-(system, snr) reconstructions as PNG files.

    Returns the manifest: a list of {file, system, snr_db, ssim} entries,
    also written to ``out_dir``/manifest.json. The original is stored as
    original.png with system "none".
    """
    os.makedirs(out_dir, exist_ok=True)
    img = prepare_image(img_u8)
    ref = to_float(img).astype(np.float64)
    manifest = []
    save_png(img, os.path.join(out_dir, "original.png"))
    manifest.append({"file": "original.png", "system": "none", "snr_db": None, "ssim": 1.0})
    for system in systems:
        for snr_db in snr_grid:
            recon = transmit_image(model, img, system, channel_model, snr_db, seed, h_floor)
            name = f"{system}_snr{_snr_label(snr_db)}.png"
            save_png(recon, os.path.join(out_dir, name))
            score = metrics.ssim(ref, to_float(recon).astype(np.float64))
            manifest.append(
                {"file": name, "system": system, "snr_db": float(snr_db), "ssim": score}
            )
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
    return manifest
