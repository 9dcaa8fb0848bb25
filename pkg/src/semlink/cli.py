"""Operator command line: train / eval / transmit / sweep-images / serve.

Exit codes: 0 success, 1 runtime failure, 2 usage error. Every failure
prints a single ``error: <reason>`` line on stderr so scripts can grep it.
A ``--config FILE`` of ``key = value`` lines (keys mirror the long flag
names) can pre-set any flag; explicit flags win over the file.
"""

from __future__ import annotations

import math
import sys

import click

from . import codec, harness, training
from .dataset import load_cifar10
from .validation import CHANNEL_MODELS, SYSTEMS


def parse_snr(text):
    """SNR literal in dB; 'inf' selects the noiseless sentinel."""
    t = str(text).strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        return float(t)
    except ValueError:
        raise click.BadParameter(f"bad SNR literal {text!r}")


def parse_snr_grid(text):
    """Either 'start:stop:step' (inclusive stop) or a comma list of values."""
    t = str(text).strip()
    if ":" in t:
        parts = t.split(":")
        if len(parts) != 3:
            raise click.BadParameter(f"bad SNR grid {text!r}; expected start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise click.BadParameter("SNR grid step must be positive")
        grid = []
        v = start
        while v <= stop + 1e-9:
            grid.append(round(v, 9))
            v += step
        return grid
    return [parse_snr(p) for p in t.split(",") if p.strip()]


def _parse_list(text, allowed, what):
    items = [p.strip() for p in str(text).split(",") if p.strip()]
    for it in items:
        if it not in allowed:
            raise click.BadParameter(f"unknown {what} {it!r}; choose from {', '.join(allowed)}")
    if not items:
        raise click.BadParameter(f"empty {what} list")
    return items


def read_config_file(path):
    """Parse the key = value override file (comments with '#', blank lines ok)."""
    out = {}
    with open(path, encoding="utf-8") as f:
        for ln_no, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise click.BadParameter(f"{path}:{ln_no}: expected key = value")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def apply_config_file(ctx, param, value):
    if value:
        ctx.default_map = dict(ctx.default_map or {})
        for k, v in read_config_file(value).items():
            ctx.default_map[k.replace("-", "_")] = v
    return value


def config_option(fn):
    return click.option(
        "--config",
        type=click.Path(exists=True, dir_okay=False),
        callback=apply_config_file,
        is_eager=True,
        expose_value=False,
        help="key = value file providing defaults for any flag",
    )(fn)


@click.group()
def cli():
    """Semantic image-link simulator and 256-QAM baseline."""


@cli.command()
@config_option
@click.option("--data", envvar="SEMLINK_DATA", required=True, type=click.Path(exists=True, file_okay=False), help="CIFAR-10 binary batch directory")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False), help="checkpoint output path")
@click.option("--profile", type=click.Choice(sorted(training.PROFILES)), default="desk", show_default=True)
@click.option("--batch", type=int, default=128, show_default=True)
@click.option("--lr", type=float, default=0.002, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--channel", type=click.Choice(CHANNEL_MODELS), default="rayleigh", show_default=True)
@click.option("--h-floor", type=float, default=1e-3, show_default=True, help="minimum fading-gain magnitude (resampled below)")
@click.option("--checkpoint-every", type=int, default=10, show_default=True, help="epochs between periodic checkpoints")
@click.option("--resume", type=click.Path(exists=True, dir_okay=False), default=None, help="resume from a checkpoint")
@click.option("--deterministic", is_flag=True, help="force deterministic kernels")
@click.option("--quiet", is_flag=True)
def train(data, out_path, profile, batch, lr, seed, channel, h_floor, checkpoint_every, resume, deterministic, quiet):
    """Train the codec with the two-phase curriculum."""
    ds = load_cifar10(data)
    sched = training.schedule_for_profile(profile, seed=seed, batch_size=batch, lr=lr, channel=channel, h_floor=h_floor)
    resume_ckpt = training.load_checkpoint(resume) if resume else None
    log = None if quiet else lambda m: click.echo(m)
    training.train(
        ds,
        codec.CodecConfig(),
        sched,
        out_path=out_path,
        checkpoint_every=checkpoint_every,
        deterministic=deterministic,
        resume=resume_ckpt,
        log=log,
    )
    click.echo(f"checkpoint written to {out_path}")


@cli.command("eval")
@config_option
@click.option("--ckpt", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", envvar="SEMLINK_DATA", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--images", type=int, default=320, show_default=True)
@click.option("--snr-grid", default="0:40:5", show_default=True)
@click.option("--channels", default="awgn,rayleigh", show_default=True)
@click.option("--systems", default="dnn,qam256", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--h-floor", type=float, default=1e-3, show_default=True, help="minimum fading-gain magnitude (resampled below)")
@click.option("--csv", "csv_path", required=True, type=click.Path(dir_okay=False))
def eval_cmd(ckpt, data, images, snr_grid, channels, systems, seed, h_floor, csv_path):
    """SNR sweep over systems and channels; writes the records CSV."""
    grid = parse_snr_grid(snr_grid)
    channel_list = _parse_list(channels, CHANNEL_MODELS, "channel")
    system_list = _parse_list(systems, SYSTEMS, "system")
    import torch

    ds = load_cifar10(data)
    model = training.model_from_checkpoint(training.load_checkpoint(ckpt))
    model.eval()
    model.to(memory_format=torch.channels_last)
    records = harness.run_sweep(
        model, ds, snr_grid=grid, channels=channel_list, systems=system_list,
        n_images=images, seed=seed, h_floor=h_floor,
    )
    harness.write_csv(records, csv_path)
    click.echo(f"{len(records)} records -> {csv_path}")


@cli.command()
@config_option
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False), help="input image (PNG/JPEG)")
@click.option("--snr", required=True, help="SNR in dB, or 'inf'")
@click.option("--channel", type=click.Choice(CHANNEL_MODELS), required=True)
@click.option("--system", type=click.Choice(SYSTEMS), required=True)
@click.option("--ckpt", type=click.Path(exists=True, dir_okay=False), default=None, help="codec checkpoint (required for --system dnn)")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--h-floor", type=float, default=1e-3, show_default=True, help="minimum fading-gain magnitude (resampled below)")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def transmit(in_path, snr, channel, system, ckpt, seed, h_floor, out_dir):
    """Send one image through a channel and write original + reconstruction."""
    import os

    from . import metrics
    from .dataset import to_float

    snr_db = parse_snr(snr)
    model = None
    if system == "dnn":
        if not ckpt:
            raise click.UsageError("--system dnn requires --ckpt")
        model = training.model_from_checkpoint(training.load_checkpoint(ckpt))
        model.eval()
    img = harness.prepare_image(harness.load_png(in_path))
    recon = harness.transmit_image(model, img, system, channel, snr_db, seed, h_floor)
    os.makedirs(out_dir, exist_ok=True)
    harness.save_png(img, os.path.join(out_dir, "original.png"))
    out_png = os.path.join(out_dir, f"received_{system}.png")
    harness.save_png(recon, out_png)
    score = metrics.ssim(to_float(img).astype(float), to_float(recon).astype(float))
    p = metrics.psnr(to_float(img).astype(float), to_float(recon).astype(float))
    click.echo(f"{out_png} ssim={score:.6g} psnr_db={p:.6g}")


@cli.command("sweep-images")
@config_option
@click.option("--ckpt", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--snr-grid", default="0:40:10", show_default=True)
@click.option("--channel", type=click.Choice(CHANNEL_MODELS), default="rayleigh", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--h-floor", type=float, default=1e-3, show_default=True, help="minimum fading-gain magnitude (resampled below)")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def sweep_images(ckpt, in_path, snr_grid, channel, seed, h_floor, out_dir):
    """Reconstruction grid for one image across SNRs and both systems."""
    grid = parse_snr_grid(snr_grid)
    model = training.model_from_checkpoint(training.load_checkpoint(ckpt))
    model.eval()
    img = harness.load_png(in_path)
    manifest = harness.render_comparison(model, img, grid, channel, out_dir, seed=seed, h_floor=h_floor)
    click.echo(f"{len(manifest)} files -> {out_dir}")


@cli.command()
@config_option
@click.option("--ckpt", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--bind", default="127.0.0.1", show_default=True)
def serve(ckpt, port, bind):
    """Serve the live-demo HTTP API (and the web UI, if built)."""
    import uvicorn

    from .service import create_app

    app = create_app(ckpt)
    uvicorn.run(app, host=bind, port=port, log_level="info")


def main(argv=None):
    """Entry point returning the process exit code (0 ok, 1 runtime, 2 usage)."""
    try:
        code = cli.main(args=argv, standalone_mode=False)
        return code if isinstance(code, int) else 0
    except click.UsageError as e:
        click.echo(f"error: {e.format_message()}", err=True)
        return 2
    except click.ClickException as e:
        click.echo(f"error: {e.format_message()}", err=True)
        return 1
    except click.exceptions.Abort:
        return 1
    except (OSError, ValueError, RuntimeError, training.TrainingError, training.CheckpointFormatError) as e:
        click.echo(f"error: {e}", err=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
