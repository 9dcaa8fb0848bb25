"""Two-phase training curriculum and checkpointing.

Phase 1 optimizes pixel-wise MSE through a 35 dB Rayleigh channel; phase 2
fine-tunes with MAE at 15 dB. Adam (lr 0.002) with fresh moments at the
phase switch, since the loss changes. Every stochastic choice (shuffles,
channel realizations) is derived from the run seed and the (phase, epoch,
batch) counters, so a run is bit-reproducible and a resumed run continues
exactly where an uninterrupted one would be.

Checkpoint file layout (little-endian throughout):
  magic "SMCK" | version u32 | config-blob length u32 + canonical JSON |
  three tensor sections (model, optimizer, run state), each: count u32 then
  per tensor: name length u16 + UTF-8 name, rank u8, dims u32 each, dtype
  tag u8 (0 f32, 1 f64, 2 i64, 3 u64), raw payload.
"""

from __future__ import annotations

import io
import json
import os
import struct
from dataclasses import dataclass, field, replace

import numpy as np
import torch

from . import channel as chan
from .codec import CodecConfig, CodecModel, init_params
from .dataset import sample_images
from .seeding import derive_seed, rng_from

CKPT_MAGIC = b"SMCK"
CKPT_VERSION = 1
_DTYPE_TAGS = {0: np.float32, 1: np.float64, 2: np.int64, 3: np.uint64}
_TAG_OF = {np.dtype(v): k for k, v in _DTYPE_TAGS.items()}


class TrainingError(Exception):
    """Raised on non-finite gradients or an inconsistent resume."""


class CheckpointFormatError(Exception):
    """Raised on bad magic, version, or a truncated/garbled checkpoint file."""


@dataclass(frozen=True)
class PhaseSpec:
    epochs: int
    snr_db: float
    loss: str  # "mse" | "mae"

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.loss not in ("mse", "mae"):
            raise ValueError(f"unknown loss kind {self.loss!r}")


@dataclass(frozen=True)
class TrainSchedule:
    phase1: PhaseSpec = PhaseSpec(epochs=150, snr_db=35.0, loss="mse")
    phase2: PhaseSpec = PhaseSpec(epochs=150, snr_db=15.0, loss="mae")
    batch_size: int = 128
    lr: float = 0.002
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    channel: str = "rayleigh"
    seed: int = 0
    n_train_images: int | None = None  # deterministic subset; None = full split
    h_floor: float = chan.H_FLOOR_DEFAULT

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be positive")

    @property
    def phases(self):
        return (self.phase1, self.phase2)


PROFILES = {
    # (phase1 epochs, phase2 epochs, train-subset size or None)
    "full": (150, 150, None),
    "desk": (20, 20, None),
    "tiny": (10, 10, 5000),
}


def schedule_for_profile(profile, seed=0, batch_size=128, lr=0.002, channel="rayleigh",
                         h_floor=chan.H_FLOOR_DEFAULT):
    try:
        e1, e2, subset = PROFILES[profile]
    except KeyError:
        raise ValueError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
    return TrainSchedule(
        phase1=PhaseSpec(epochs=e1, snr_db=35.0, loss="mse"),
        phase2=PhaseSpec(epochs=e2, snr_db=15.0, loss="mae"),
        batch_size=batch_size,
        lr=lr,
        channel=channel,
        seed=seed,
        n_train_images=subset,
        h_floor=h_floor,
    )


def loss(pred, target, kind):
    """Pixel-wise loss over all elements: mse = mean((p-t)^2), mae = mean|p-t|."""
    if pred.shape != target.shape:
        raise ValueError(f"loss: shape mismatch {tuple(pred.shape)} vs {tuple(target.shape)}")
    diff = pred - target
    if kind == "mse":
        return (diff * diff).mean()
    if kind == "mae":
        return diff.abs().mean()
    raise ValueError(f"unknown loss kind {kind!r}")


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0

    @classmethod
    def init(cls, params):
        return cls(
            m={k: torch.zeros_like(p) for k, p in params.items()},
            v={k: torch.zeros_like(p) for k, p in params.items()},
            t=0,
        )


def adam_step(params, grads, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One Adam update with bias correction, applied in place.

    ``params`` and ``grads`` are name -> tensor maps with matching keys.
    Raises TrainingError (naming the tensor) on a non-finite gradient.
    """
    state.t += 1
    t = state.t
    with torch.no_grad():
        for name, p in params.items():
            g = grads[name]
            if not torch.isfinite(g).all():
                raise TrainingError(f"non-finite gradient in tensor '{name}' at step {t}")
            m = state.m[name]
            v = state.v[name]
            m.mul_(beta1).add_(g, alpha=1.0 - beta1)
            v.mul_(beta2).addcmul_(g, g, value=1.0 - beta2)
            m_hat = m / (1.0 - beta1**t)
            v_hat = v / (1.0 - beta2**t)
            p.sub_(lr * m_hat / (v_hat.sqrt() + eps))
    return params, state


@dataclass
class Checkpoint:
    config: CodecConfig
    tensors: dict  # name -> np.ndarray (model weights, float32)
    opt_m: dict = field(default_factory=dict)
    opt_v: dict = field(default_factory=dict)
    step: int = 0
    phase: int = 0  # next phase index to run (0-based)
    epoch: int = 0  # next epoch index within that phase
    seed: int = 0
    version: int = CKPT_VERSION


def _write_tensor(buf, name, arr):
    arr = np.ascontiguousarray(arr)
    tag = _TAG_OF.get(arr.dtype)
    if tag is None:
        raise ValueError(f"unsupported checkpoint dtype {arr.dtype} for '{name}'")
    nb = name.encode("utf-8")
    buf.write(struct.pack("<H", len(nb)))
    buf.write(nb)
    buf.write(struct.pack("<B", arr.ndim))
    for d in arr.shape:
        buf.write(struct.pack("<I", d))
    buf.write(struct.pack("<B", tag))
    if arr.dtype.byteorder == ">":
        arr = arr.astype(arr.dtype.newbyteorder("<"))
    buf.write(arr.tobytes())


def _read_exact(f, n, what):
    b = f.read(n)
    if len(b) != n:
        raise CheckpointFormatError(f"truncated checkpoint while reading {what}")
    return b


def _read_tensor(f):
    (name_len,) = struct.unpack("<H", _read_exact(f, 2, "tensor name length"))
    name = _read_exact(f, name_len, "tensor name").decode("utf-8")
    (rank,) = struct.unpack("<B", _read_exact(f, 1, "tensor rank"))
    dims = [struct.unpack("<I", _read_exact(f, 4, "tensor dim"))[0] for _ in range(rank)]
    (tag,) = struct.unpack("<B", _read_exact(f, 1, "dtype tag"))
    if tag not in _DTYPE_TAGS:
        raise CheckpointFormatError(f"unknown dtype tag {tag} for tensor '{name}'")
    dtype = np.dtype(_DTYPE_TAGS[tag])
    count = int(np.prod(dims, dtype=np.int64)) if dims else 1
    raw = _read_exact(f, count * dtype.itemsize, f"payload of '{name}'")
    return name, np.frombuffer(raw, dtype=dtype).reshape(dims).copy()


def _write_section(buf, tensors):
    buf.write(struct.pack("<I", len(tensors)))
    for name, arr in tensors.items():
        _write_tensor(buf, name, arr)


def _read_section(f):
    (count,) = struct.unpack("<I", _read_exact(f, 4, "section count"))
    return dict(_read_tensor(f) for _ in range(count))


def save_checkpoint(path, ckpt):
    """Serialize a checkpoint atomically (write temp file, then rename)."""
    buf = io.BytesIO()
    buf.write(CKPT_MAGIC)
    buf.write(struct.pack("<I", ckpt.version))
    blob = json.dumps(ckpt.config.to_dict(), sort_keys=True, separators=(",", ":")).encode()
    buf.write(struct.pack("<I", len(blob)))
    buf.write(blob)
    _write_section(buf, ckpt.tensors)
    opt = {}
    for k, a in ckpt.opt_m.items():
        opt[f"adam.m/{k}"] = a
    for k, a in ckpt.opt_v.items():
        opt[f"adam.v/{k}"] = a
    _write_section(buf, opt)
    run_state = {
        "adam.t": np.int64(ckpt.step),
        "schedule.phase": np.int64(ckpt.phase),
        "schedule.epoch": np.int64(ckpt.epoch),
        "rng.seed": np.uint64(ckpt.seed),
    }
    _write_section(buf, run_state)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as f:
        f.write(buf.getvalue())
    os.replace(tmp, path)


def load_checkpoint(path):
    with open(path, "rb") as f:
        if _read_exact(f, 4, "magic") != CKPT_MAGIC:
            raise CheckpointFormatError(f"bad magic in {path}")
        (version,) = struct.unpack("<I", _read_exact(f, 4, "version"))
        if version != CKPT_VERSION:
            raise CheckpointFormatError(f"unsupported checkpoint version {version}")
        (blob_len,) = struct.unpack("<I", _read_exact(f, 4, "config length"))
        cfg = CodecConfig.from_dict(json.loads(_read_exact(f, blob_len, "config blob")))
        tensors = _read_section(f)
        opt = _read_section(f)
        run_state = _read_section(f)
        if f.read(1):
            raise CheckpointFormatError(f"trailing bytes in {path}")
    opt_m = {k[len("adam.m/") :]: a for k, a in opt.items() if k.startswith("adam.m/")}
    opt_v = {k[len("adam.v/") :]: a for k, a in opt.items() if k.startswith("adam.v/")}

    def scalar(key):
        return int(np.asarray(run_state.get(key, 0)).reshape(-1)[0])

    return Checkpoint(
        config=cfg,
        tensors=tensors,
        opt_m=opt_m,
        opt_v=opt_v,
        step=scalar("adam.t"),
        phase=scalar("schedule.phase"),
        epoch=scalar("schedule.epoch"),
        seed=scalar("rng.seed"),
        version=version,
    )


def _export(t):
    return t.detach().to(torch.float32).contiguous().numpy().copy()


def checkpoint_from_model(model, state=None, step=0, phase=0, epoch=0, seed=0):
    tensors = {k: _export(v) for k, v in model.state_dict().items()}
    ckpt = Checkpoint(config=model.cfg, tensors=tensors, step=step, phase=phase, epoch=epoch, seed=seed)
    if state is not None:
        ckpt.opt_m = {k: _export(v) for k, v in state.m.items()}
        ckpt.opt_v = {k: _export(v) for k, v in state.v.items()}
        ckpt.step = state.t
    return ckpt


def model_from_checkpoint(ckpt, expect_config=None):
    """Rebuild a CodecModel from a checkpoint; reject a mismatched config."""
    if expect_config is not None and expect_config != ckpt.config:
        raise TrainingError(
            f"checkpoint config {ckpt.config} does not match requested {expect_config}"
        )
    model = CodecModel(ckpt.config)
    sd = {k: torch.from_numpy(np.ascontiguousarray(v)) for k, v in ckpt.tensors.items()}
    model.load_state_dict(sd, strict=True)
    return model


def _adam_state_from_checkpoint(ckpt, params):
    state = AdamState.init(params)
    if ckpt.opt_m:
        for k in params:
            state.m[k] = torch.from_numpy(np.ascontiguousarray(ckpt.opt_m[k]))
            state.v[k] = torch.from_numpy(np.ascontiguousarray(ckpt.opt_v[k]))
    state.t = ckpt.step
    return state


def train(
    ds,
    cfg,
    sched,
    out_path=None,
    checkpoint_every=10,
    deterministic=False,
    resume=None,
    log=None,
):
    """Run the two-phase curriculum; returns (model, history).

    ``history`` is a list of per-epoch dicts {"phase", "epoch", "loss"}.
    With ``out_path`` set, checkpoints land there every ``checkpoint_every``
    epochs and at each phase end. ``resume`` takes a Checkpoint and continues
    from its recorded (phase, epoch) with identical results to an
    uninterrupted run, because all randomness is derived from counters.
    """
    if deterministic:
        torch.use_deterministic_algorithms(True)

    seed = sched.seed
    if resume is not None:
        model = model_from_checkpoint(resume, expect_config=cfg)
        if resume.seed != seed:
            raise TrainingError(f"checkpoint seed {resume.seed} != schedule seed {seed}")
        start_phase, start_epoch = resume.phase, resume.epoch
    else:
        model = init_params(cfg, seed)
        start_phase, start_epoch = 0, 0
    model.train()
    # NHWC layout roughly halves conv time on CPU; purely a speed detail
    model.to(memory_format=torch.channels_last)

    if sched.n_train_images is not None:
        images = sample_images(ds, "train", sched.n_train_images, derive_seed(seed, "train-subset"))
    else:
        images = ds.train.images
    data = torch.from_numpy(np.ascontiguousarray(images.transpose(0, 3, 1, 2)))
    n = data.shape[0]

    params = dict(model.named_parameters())
    history = []

    def emit(msg):
        if log is not None:
            log(msg)

    for phase_idx in range(start_phase, len(sched.phases)):
        phase = sched.phases[phase_idx]
        # fresh moments per phase: the loss changes at the phase switch, so
        # checkpointed moments only apply when resuming mid-phase
        if resume is not None and phase_idx == start_phase and start_epoch > 0 and resume.opt_m:
            state = _adam_state_from_checkpoint(resume, params)
        else:
            state = AdamState.init(params)
        first_epoch = start_epoch if phase_idx == start_phase else 0
        for epoch in range(first_epoch, phase.epochs):
            perm = rng_from(seed, "shuffle", phase_idx, epoch).permutation(n)
            total = 0.0
            for bi, lo in enumerate(range(0, n, sched.batch_size)):
                idx = perm[lo : lo + sched.batch_size]
                batch = (data[torch.from_numpy(idx)].to(torch.float32) / 255.0).contiguous(
                    memory_format=torch.channels_last
                )
                spec = chan.ChannelSpec(
                    model=sched.channel,
                    snr_db=phase.snr_db,
                    seed=derive_seed(seed, "channel", phase_idx, epoch, bi),
                    h_floor=sched.h_floor,
                )
                x = model.encode(batch)
                x_hat = chan.channel_pass_training(x, spec)
                recon = model.decode(x_hat)
                batch_loss = loss(recon, batch, phase.loss)
                model.zero_grad(set_to_none=True)
                batch_loss.backward()
                grads = {k: p.grad for k, p in params.items()}
                adam_step(
                    params, grads, state,
                    lr=sched.lr, beta1=sched.adam_beta1,
                    beta2=sched.adam_beta2, eps=sched.adam_eps,
                )
                total += float(batch_loss.detach()) * len(idx)
            epoch_loss = total / n
            history.append({"phase": phase_idx + 1, "epoch": epoch, "loss": epoch_loss})
            emit(f"phase {phase_idx + 1} epoch {epoch + 1}/{phase.epochs} {phase.loss}={epoch_loss:.6f}")
            at_phase_end = epoch == phase.epochs - 1
            if out_path and (at_phase_end or (checkpoint_every and (epoch + 1) % checkpoint_every == 0)):
                nxt_phase, nxt_epoch = (phase_idx + 1, 0) if at_phase_end else (phase_idx, epoch + 1)
                ck = checkpoint_from_model(model, state, phase=nxt_phase, epoch=nxt_epoch, seed=seed)
                save_checkpoint(out_path, ck)
    model.eval()
    return model, history


def strip_optimizer(ckpt):
    """Evaluation-only copy of a checkpoint (drops Adam moments)."""
    return replace(ckpt, opt_m={}, opt_v={})
