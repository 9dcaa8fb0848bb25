"""Live-demo HTTP API: accept a photo, simulate transmission through the
chosen channel for one or both systems, and return reconstructions plus
metrics. Also serves the built web UI bundle at / when present.

The model is loaded once at startup and shared read-only across requests;
each request derives its randomness from its own (echoed) seed, so repeated
seeded requests return byte-identical bodies.
"""

from __future__ import annotations

import base64
import io
import math
import os
import secrets
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image, UnidentifiedImageError
from pydantic import BaseModel, Field

from . import harness, metrics, training
from .codec import param_count
from .dataset import to_float
from .seeding import derive_seed
from .validation import CHANNEL_MODELS, SYSTEMS

MAX_UPLOAD_BYTES = 12 * 1024 * 1024
MAX_SOURCE_SIDE = 4096
SNR_DB_MIN, SNR_DB_MAX = 0.0, 40.0


class ApiError(Exception):
    def __init__(self, status, reason):
        self.status = status
        self.reason = reason
        super().__init__(reason)


class TransmitRequest(BaseModel):
    image: str = Field(description="base64 PNG or JPEG")
    snr_db: float | str = Field(description="SNR in dB, or 'inf' for noiseless")
    channel: str
    systems: list[str] = ["dnn", "qam256"]
    seed: int | None = None


class SweepRequest(BaseModel):
    image: str
    channel: str
    snr_grid: list[float | str]
    systems: list[str] = ["dnn", "qam256"]
    seed: int | None = None


def _parse_snr(v):
    if isinstance(v, str):
        t = v.strip().lower()
        if t in ("inf", "+inf", "infinity"):
            return math.inf
        try:
            v = float(t)
        except ValueError:
            raise ApiError(400, f"bad snr_db literal {v!r}")
    v = float(v)
    if math.isnan(v) or v == -math.inf:
        raise ApiError(400, f"bad snr_db value {v!r}")
    return v


def _snr_json(v):
    return "inf" if v == math.inf else v


def _check_systems(systems):
    if not systems:
        raise ApiError(400, "systems must be nonempty")
    for s in systems:
        if s not in SYSTEMS:
            raise ApiError(400, f"unknown system {s!r}")
    return list(dict.fromkeys(systems))


def _check_channel(c):
    if c not in CHANNEL_MODELS:
        raise ApiError(400, f"unknown channel {c!r}")
    return c


def _check_seed(seed):
    if seed is None:
        return secrets.randbits(32)
    if not 0 <= seed < 2**64:
        raise ApiError(400, f"seed must be a u64, got {seed}")
    return seed


def _decode_image(b64):
    if len(b64) > MAX_UPLOAD_BYTES * 4 // 3 + 4:
        raise ApiError(413, "image payload too large")
    try:
        raw = base64.b64decode(b64, validate=True)
    except Exception:
        raise ApiError(400, "image is not valid base64")
    if len(raw) > MAX_UPLOAD_BYTES:
        raise ApiError(413, "image payload too large")
    try:
        with Image.open(io.BytesIO(raw)) as im:
            if max(im.size) > MAX_SOURCE_SIDE:
                raise ApiError(413, f"image sides must be <= {MAX_SOURCE_SIDE}")
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except UnidentifiedImageError:
        raise ApiError(400, "image bytes are not a decodable PNG/JPEG")


def _encode_png(arr_u8):
    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(arr_u8), "RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _finite_or_none(v):
    return v if math.isfinite(v) else None


def create_app(ckpt_path, frontend_dir=None):
    import torch

    ckpt = training.load_checkpoint(ckpt_path)
    model = training.model_from_checkpoint(ckpt)
    model.eval()
    model.to(memory_format=torch.channels_last)  # faster CPU convs
    cfg = ckpt.config
    info = {
        "config": cfg.to_dict(),
        "param_count": param_count(cfg),
        "checkpoint": os.path.basename(str(ckpt_path)),
        "channels": list(CHANNEL_MODELS),
        "systems": list(SYSTEMS),
        "snr_db": {"min": SNR_DB_MIN, "max": SNR_DB_MAX, "noiseless": "inf"},
        "max_image_side": 512,
    }

    app = FastAPI(title="semlink demo service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"error": exc.reason})

    @app.exception_handler(RequestValidationError)
    async def _bad_request(_req: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:1])})

    @app.exception_handler(Exception)
    async def _internal(_req: Request, exc: Exception):
        return JSONResponse(status_code=500, content={"error": f"{type(exc).__name__}: {exc}"})

    def _transmit_once(img, system, channel_model, snr_db, seed):
        recon = harness.transmit_image(model, img, system, channel_model, snr_db, seed)
        ref = to_float(img).astype(np.float64)
        rec = to_float(recon).astype(np.float64)
        return recon, metrics.ssim(ref, rec), metrics.psnr(ref, rec)

    def _transmit_systems(img, systems, channel_model, snr_db, seed):
        """Independent systems run concurrently; each task owns its metrics
        and PNG encode, so wall time is near max(dnn, qam) instead of the sum."""

        def task(system):
            recon, score, p = _transmit_once(img, system, channel_model, snr_db, seed)
            return system, {
                "reconstruction": _encode_png(recon),
                "ssim": score,
                "psnr_db": _finite_or_none(p),
            }

        if len(systems) == 1:
            return dict([task(systems[0])])
        with ThreadPoolExecutor(max_workers=len(systems)) as pool:
            return dict(pool.map(task, systems))

    @app.get("/api/info")
    def get_info():
        return info

    @app.post("/api/transmit")
    def post_transmit(req: TransmitRequest):
        t0 = time.perf_counter()
        snr_db = _parse_snr(req.snr_db)
        channel_model = _check_channel(req.channel)
        systems = _check_systems(req.systems)
        seed = _check_seed(req.seed)
        img = harness.prepare_image(_decode_image(req.image))
        out = _transmit_systems(img, systems, channel_model, snr_db, seed)
        return {
            "systems": out,
            "original_processed": _encode_png(img),
            "width": int(img.shape[1]),
            "height": int(img.shape[0]),
            "snr_db": _snr_json(snr_db),
            "channel": channel_model,
            "seed": seed,
            "timing_ms": (time.perf_counter() - t0) * 1000.0,
        }

    @app.post("/api/sweep")
    def post_sweep(req: SweepRequest):
        t0 = time.perf_counter()
        channel_model = _check_channel(req.channel)
        systems = _check_systems(req.systems)
        if not req.snr_grid:
            raise ApiError(400, "snr_grid must be nonempty")
        if len(req.snr_grid) > 16:
            raise ApiError(400, "snr_grid is limited to 16 points")
        grid = [_parse_snr(v) for v in req.snr_grid]
        seed = _check_seed(req.seed)
        img = harness.prepare_image(_decode_image(req.image))
        def score_one(args):
            system, snr_db, point_seed = args
            _, score, _ = _transmit_once(img, system, channel_model, snr_db, point_seed)
            return system, score

        points = []
        for snr_db in grid:
            point_seed = derive_seed(seed, "sweep", f"{snr_db:g}")
            jobs = [(system, snr_db, point_seed) for system in systems]
            if len(jobs) == 1:
                scores = dict([score_one(jobs[0])])
            else:
                with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
                    scores = dict(pool.map(score_one, jobs))
            points.append({"snr_db": _snr_json(snr_db), "ssim": scores})
        return {
            "points": points,
            "channel": channel_model,
            "seed": seed,
            "timing_ms": (time.perf_counter() - t0) * 1000.0,
        }

    ui_dir = frontend_dir or os.environ.get("SEMLINK_UI") or os.path.join("frontend", "dist")
    if os.path.isdir(ui_dir):
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
