"""Trainable codec: convolutional symbol encoder and ViT + denoising
autoencoder reconstruction network with a linear per-token shortcut.

Encoder: a 1x1 lift to ``encoder_width`` channels, ``encoder_blocks``
residual bottleneck units (1x1 reduce -> ReLU -> 3x3 same-padding conv ->
ReLU -> 1x1 expand, added to the skip), and a final 1x1 projection back to
3 channels, so the symbol tensor has exactly the image shape: one real
symbol per pixel value and no spatial downsampling.

Decoder: non-overlapping patches are linearly embedded, a learned positional
embedding is added, and ``depth`` pre-norm transformer blocks (multi-head
self-attention + GELU MLP) followed by a final layer norm produce one token
per patch. The reconstruction is the sum of two branches applied per token:
a bias-free linear map straight to patch pixels (the shortcut matrix), and a
denoising conv stack (3x3 convs with a stride-2 contraction and a
nearest-neighbor x2 expansion, ReLU between convs) that runs on the
linearly un-patchified token image. Outputs are clamped to [0, 1] only at
evaluation time; training consumes the raw values so gradients stay alive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from .seeding import derive_seed
from .validation import IMG_H, IMG_W, as_image_batch


@dataclass(frozen=True)
class CodecConfig:
    patch_size: int = 4
    embed_dim: int = 128
    depth: int = 3
    heads: int = 4
    mlp_ratio: int = 4
    encoder_width: int = 32
    encoder_bottleneck: int = 16
    encoder_blocks: int = 4
    dae_widths: tuple = (48, 96)

    def __post_init__(self):
        if self.embed_dim % self.heads != 0:
            raise ValueError(
                f"embed_dim {self.embed_dim} not divisible by heads {self.heads}"
            )
        if IMG_H % self.patch_size != 0:
            raise ValueError(f"patch_size {self.patch_size} does not divide {IMG_H}")
        if len(tuple(self.dae_widths)) != 2:
            raise ValueError("dae_widths must have exactly two entries")

    @property
    def tokens(self):
        return (IMG_H // self.patch_size) * (IMG_W // self.patch_size)

    @property
    def patch_dim(self):
        return self.patch_size * self.patch_size * 3

    def to_dict(self):
        return {
            "patch_size": self.patch_size,
            "embed_dim": self.embed_dim,
            "depth": self.depth,
            "heads": self.heads,
            "mlp_ratio": self.mlp_ratio,
            "encoder_width": self.encoder_width,
            "encoder_bottleneck": self.encoder_bottleneck,
            "encoder_blocks": self.encoder_blocks,
            "dae_widths": list(self.dae_widths),
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["dae_widths"] = tuple(d["dae_widths"])
        return cls(**d)


def tiny_config():
    """Small configuration for gradient checks and smoke tests.

    patch_size 2 keeps the per-token shortcut map near full rank, so even
    this throwaway model can fit a handful of images quickly.
    """
    return CodecConfig(
        patch_size=2,
        embed_dim=8,
        depth=1,
        heads=2,
        mlp_ratio=2,
        encoder_width=8,
        encoder_bottleneck=4,
        encoder_blocks=2,
        dae_widths=(8, 12),
    )


class BottleneckBlock(nn.Module):
    """Residual unit: 1x1 reduce -> ReLU -> 3x3 conv -> ReLU -> 1x1 expand + skip."""

    def __init__(self, width, bottleneck):
        super().__init__()
        self.reduce = nn.Conv2d(width, bottleneck, kernel_size=1)
        self.conv = nn.Conv2d(bottleneck, bottleneck, kernel_size=3, padding=1)
        self.expand = nn.Conv2d(bottleneck, width, kernel_size=1)

    def forward(self, x):
        z = F.relu(self.reduce(x))
        z = F.relu(self.conv(z))
        return x + self.expand(z)


class SymbolEncoder(nn.Module):
    def __init__(self, cfg):
        super().__init__()
        self.lift = nn.Conv2d(3, cfg.encoder_width, kernel_size=1)
        self.blocks = nn.ModuleList(
            BottleneckBlock(cfg.encoder_width, cfg.encoder_bottleneck)
            for _ in range(cfg.encoder_blocks)
        )
        self.proj = nn.Conv2d(cfg.encoder_width, 3, kernel_size=1)

    def forward(self, x):
        z = self.lift(x)
        for blk in self.blocks:
            z = blk(z)
        return self.proj(z)


class Attention(nn.Module):
    def __init__(self, dim, heads):
        super().__init__()
        self.heads = heads
        self.head_dim = dim // heads
        self.qkv = nn.Linear(dim, 3 * dim)
        self.out = nn.Linear(dim, dim)

    def forward(self, x, collect_attn=None):
        b, t, d = x.shape
        qkv = self.qkv(x).reshape(b, t, 3, self.heads, self.head_dim)
        q, k, v = qkv.permute(2, 0, 3, 1, 4)  # each (b, heads, t, head_dim)
        logits = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        attn = logits.softmax(dim=-1)
        if collect_attn is not None:
            collect_attn.append(attn.detach())
        z = (attn @ v).transpose(1, 2).reshape(b, t, d)
        return self.out(z)


class TransformerBlock(nn.Module):
    def __init__(self, dim, heads, mlp_ratio):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = Attention(dim, heads)
        self.norm2 = nn.LayerNorm(dim)
        hidden = dim * mlp_ratio
        self.mlp = nn.Sequential(nn.Linear(dim, hidden), nn.GELU(), nn.Linear(hidden, dim))

    def forward(self, x, collect_attn=None):
        x = x + self.attn(self.norm1(x), collect_attn=collect_attn)
        return x + self.mlp(self.norm2(x))


class ViTBackbone(nn.Module):
    """Patchify -> embed -> positional embedding -> transformer -> token map."""

    def __init__(self, cfg):
        super().__init__()
        self.cfg = cfg
        self.patch_embed = nn.Linear(cfg.patch_dim, cfg.embed_dim)
        self.pos_embed = nn.Parameter(torch.zeros(1, cfg.tokens, cfg.embed_dim))
        self.blocks = nn.ModuleList(
            TransformerBlock(cfg.embed_dim, cfg.heads, cfg.mlp_ratio)
            for _ in range(cfg.depth)
        )
        self.norm = nn.LayerNorm(cfg.embed_dim)

    def forward(self, x, collect_attn=None):
        tokens = patchify(x, self.cfg.patch_size)
        z = self.patch_embed(tokens) + self.pos_embed
        for blk in self.blocks:
            z = blk(z, collect_attn=collect_attn)
        return self.norm(z)


class DenoiserStack(nn.Module):
    """Conv hourglass applied to the linearly un-patchified token image."""

    def __init__(self, cfg):
        super().__init__()
        w0, w1 = cfg.dae_widths
        self.unpatch = nn.Linear(cfg.embed_dim, cfg.patch_dim)
        self.conv_in = nn.Conv2d(3, w0, kernel_size=3, padding=1)
        self.down = nn.Conv2d(w0, w1, kernel_size=3, stride=2, padding=1)
        self.mid = nn.Conv2d(w1, w1, kernel_size=3, padding=1)
        self.up = nn.Conv2d(w1, w0, kernel_size=3, padding=1)
        self.conv_out = nn.Conv2d(w0, 3, kernel_size=3, padding=1)

    def forward(self, tokens, patch_size):
        img = unpatchify(self.unpatch(tokens), patch_size)
        z = F.relu(self.conv_in(img))
        z = F.relu(self.down(z))
        z = F.relu(self.mid(z))
        z = F.interpolate(z, scale_factor=2, mode="nearest")
        z = F.relu(self.up(z))
        return self.conv_out(z)


class CodecModel(nn.Module):
    """Encoder + reconstruction network; the parameter container for a codec."""

    def __init__(self, cfg):
        super().__init__()
        self.cfg = cfg
        self.encoder = SymbolEncoder(cfg)
        self.vit = ViTBackbone(cfg)
        self.shortcut = nn.Linear(cfg.embed_dim, cfg.patch_dim, bias=False)
        self.dae = DenoiserStack(cfg)

    def encode(self, images_nchw):
        return self.encoder(images_nchw)

    def decode(self, symbols_nchw, collect_attn=None):
        tokens = self.vit(symbols_nchw, collect_attn=collect_attn)
        direct = unpatchify(self.shortcut(tokens), self.cfg.patch_size)
        return direct + self.dae(tokens, self.cfg.patch_size)

    def forward(self, images_nchw, channel_fn=None):
        x = self.encode(images_nchw)
        if channel_fn is not None:
            x = channel_fn(x)
        return self.decode(x)


def patchify(x, patch_size):
    """(B, C, H, W) -> (B, tokens, patch_size^2 * C), patch pixels in HWC order."""
    b, c, h, w = x.shape
    gh, gw = h // patch_size, w // patch_size
    z = x.reshape(b, c, gh, patch_size, gw, patch_size)
    z = z.permute(0, 2, 4, 3, 5, 1)  # (b, gh, gw, p, p, c)
    return z.reshape(b, gh * gw, patch_size * patch_size * c)


def unpatchify(tokens, patch_size):
    """Inverse of patchify for square 32x32 3-channel images."""
    b, t, d = tokens.shape
    c = d // (patch_size * patch_size)
    g = int(math.isqrt(t))
    z = tokens.reshape(b, g, g, patch_size, patch_size, c)
    z = z.permute(0, 5, 1, 3, 2, 4)  # (b, c, gh, p, gw, p)
    return z.reshape(b, c, g * patch_size, g * patch_size)


def _fan_in(name, tensor):
    if tensor.ndim == 4:  # conv weight (out, in, kh, kw)
        return tensor.shape[1] * tensor.shape[2] * tensor.shape[3]
    if tensor.ndim == 2:  # linear weight (out, in)
        return tensor.shape[1]
    return None


def init_params(cfg, seed, dtype=torch.float32):
    """Build a CodecModel with deterministic, seed-reproducible weights.

    Weight matrices and conv kernels draw from U(-1/sqrt(fan_in),
    +1/sqrt(fan_in)); the positional embedding from N(0, 0.02); layer norms
    start at identity and every bias at zero.
    """
    model = CodecModel(cfg).to(dtype)
    g = torch.Generator().manual_seed(derive_seed(seed, "codec-init") % 2**63)
    with torch.no_grad():
        for name, p in model.named_parameters():
            if name.endswith("pos_embed"):
                p.copy_(torch.randn(p.shape, generator=g, dtype=torch.float64).to(dtype) * 0.02)
            elif "norm" in name:
                p.fill_(1.0 if name.endswith("weight") else 0.0)
            elif name.endswith("bias"):
                p.zero_()
            else:
                bound = 1.0 / math.sqrt(_fan_in(name, p))
                u = torch.rand(p.shape, generator=g, dtype=torch.float64)
                p.copy_(((u * 2.0 - 1.0) * bound).to(dtype))
    return model


def param_count(cfg):
    """Exact trainable parameter count for a configuration."""
    model = CodecModel(cfg)
    return sum(p.numel() for p in model.parameters())


def model_dtype(model):
    return next(model.parameters()).dtype


def encode(batch, model):
    """Encode float images (N, 32, 32, 3) in [0, 1] to symbols of the same shape."""
    arr = as_image_batch(batch, np.float32)
    x = torch.from_numpy(arr).permute(0, 3, 1, 2).to(model_dtype(model))
    with torch.inference_mode():
        out = model.encode(x)
    return np.ascontiguousarray(out.permute(0, 2, 3, 1).to(torch.float32).numpy())


def decode(symbols, model, clamp=True):
    """Reconstruct images from (noisy) symbols (N, 32, 32, 3).

    Clamps to [0, 1] by default (evaluation behaviour); pass clamp=False for
    the raw network output, which is what training losses consume.
    """
    arr = np.ascontiguousarray(np.asarray(symbols, dtype=np.float32))
    if arr.ndim == 3:
        arr = arr[None]
    x = torch.from_numpy(arr).permute(0, 3, 1, 2).to(model_dtype(model))
    with torch.inference_mode():
        out = model.decode(x)
        if clamp:
            out = out.clamp(0.0, 1.0)
    return np.ascontiguousarray(out.permute(0, 2, 3, 1).to(torch.float32).numpy())
