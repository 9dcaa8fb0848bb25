"""Acceptance gate: one test per criterion, each printing a PASS line on the
terminal summary. P5-P7 exercise the trained desk-profile codec on real
CIFAR-10; they look for the bundled artifact checkpoint (or
SEMLINK_DESK_CKPT) and train from scratch if only data is present.

Run: pytest tests/test_acceptance.py -v
"""

import math
import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest
import torch
from scipy import stats

from semlink import channel, codec, harness, metrics, qam, training
from semlink.dataset import load_cifar10, to_float
from semlink.seeding import rng_from

from conftest import cifar_dir_or_none, repo_path, smooth_images
from gradcheck import build_loss_fn, max_relative_error

pytestmark = pytest.mark.acceptance

RESULTS = []


def record(name, detail=""):
    line = f"[{name}] PASS {detail}".rstrip()
    RESULTS.append(line)
    print(line)


@pytest.fixture(scope="module")
def cifar_ds():
    d = cifar_dir_or_none()
    if d is None:
        pytest.skip("CIFAR-10 data not found: set SEMLINK_DATA to the binary batch dir")
    return load_cifar10(d)


@pytest.fixture(scope="module")
def desk_model(cifar_ds):
    path = os.environ.get("SEMLINK_DESK_CKPT", repo_path("artifacts", "desk.ckpt"))
    if not os.path.isfile(path):
        sys.stderr.write(
            "\ndesk checkpoint missing; training the desk profile from scratch "
            "(hours on a desktop CPU)...\n"
        )
        sched = training.schedule_for_profile("desk", seed=7)
        model, _ = training.train(cifar_ds, codec.CodecConfig(), sched, out_path=path)
        model.eval()
        return model
    model = training.model_from_checkpoint(training.load_checkpoint(path))
    model.eval()
    return model


# --- P1: property suite (no training, < 5 min) -----------------------------


def test_p1_property_suite(tmp_path, tiny_model):
    # power normalization: unit mean-square within 1e-6
    rng = np.random.default_rng(1)
    for _ in range(10):
        blk = channel.normalize_power(rng.normal(0, 2.4, 4096))
        assert abs(np.mean(blk.symbols**2) - 1.0) < 1e-6

    # noiseless channel roundtrip, both models
    x = rng.normal(0, 1.5, 3072)
    for model_name in ("awgn", "rayleigh"):
        blk = channel.normalize_power(x)
        rx = channel.apply_channel(blk, channel.ChannelSpec(model_name, math.inf, seed=3))
        xhat = channel.equalize(rx, blk.power_coeff)
        assert np.max(np.abs(xhat - x) / np.maximum(np.abs(x), 1e-12)) < 1e-5

    # Rayleigh gain law: E|h|^2 = 1 and KS vs closed-form CDF at 1e6 samples
    blk = channel.normalize_power(np.ones(1_000_000))
    rx = channel.apply_channel(blk, channel.ChannelSpec("rayleigh", math.inf, seed=4))
    mags = np.abs(rx.gains)
    assert abs(np.mean(mags**2) - 1.0) < 0.01
    ks = stats.kstest(mags, lambda r: 1.0 - np.exp(-(r**2)))
    assert ks.statistic < 0.01

    # exhaustive QAM roundtrip over all byte values
    b = np.arange(256, dtype=np.uint8)
    assert np.array_equal(qam.demap_qam256(qam.map_qam256(b)), b)

    # Gray adjacency: one-bit changes across all 15 adjacent level pairs
    labels = [k ^ (k >> 1) for k in range(16)]
    for k in range(15):
        d = labels[k] ^ labels[k + 1]
        assert d and (d & (d - 1)) == 0

    # constellation unit mean power, exact in rational arithmetic
    total = Fraction(0)
    for byte in range(256):
        p = qam.CONSTELLATION.points[byte] * math.sqrt(170.0)
        total += Fraction(round(p.real)) ** 2 + Fraction(round(p.imag)) ** 2
    assert total / 256 == 170

    # SSIM axioms
    a, bb = rng.random((32, 32, 3)), rng.random((32, 32, 3))
    assert metrics.ssim(a, a) == pytest.approx(1.0, abs=1e-12)
    assert metrics.ssim(a, bb) == pytest.approx(metrics.ssim(bb, a), abs=1e-12)
    assert -1.0 <= metrics.ssim(a, bb) <= 1.0

    # checkpoint bit-exact roundtrip
    ck = training.checkpoint_from_model(tiny_model, seed=12)
    p1, p2 = str(tmp_path / "a.ckpt"), str(tmp_path / "b.ckpt")
    training.save_checkpoint(p1, ck)
    back = training.load_checkpoint(p1)
    for k, arr in ck.tensors.items():
        assert np.array_equal(arr, back.tensors[k])
    training.save_checkpoint(p2, back)
    assert open(p1, "rb").read() == open(p2, "rb").read()

    # CSV determinism on a reduced sweep
    imgs = smooth_images(96, seed=8)
    labels_arr = np.zeros(96, dtype=np.uint8)
    from semlink.dataset import Dataset, Split

    ds = Dataset(train=Split(imgs, labels_arr), test=Split(imgs, labels_arr))
    c1, c2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    harness.write_csv(harness.run_sweep(tiny_model, ds, snr_grid=[0.0, 20.0], n_images=8, seed=5), c1)
    harness.write_csv(harness.run_sweep(tiny_model, ds, snr_grid=[0.0, 20.0], n_images=8, seed=5), c2)
    assert open(c1, "rb").read() == open(c2, "rb").read()

    record("P1", "property suite")


# --- P2: QAM Monte Carlo vs closed-form SER --------------------------------


def test_p2_qam_ser_matches_theory():
    n = 10_000_000
    details = []
    for snr_db in (15.0, 20.0, 25.0, 30.0):
        rng = rng_from(2026, "acceptance-ser", f"{snr_db:g}")
        b = rng.integers(0, 256, n).astype(np.uint8)
        tx = qam.map_qam256(b)
        sigma = math.sqrt(channel.snr_to_noise_var(snr_db) / 2.0)
        rx = tx + rng.standard_normal(n) * sigma + 1j * rng.standard_normal(n) * sigma
        hat = qam.demap_qam256(rx)
        p_hat = float(np.mean(hat != b))
        p = qam.ser_closed_form(snr_db)
        sd = math.sqrt(p * (1 - p) / n)
        assert abs(p_hat - p) <= 3 * sd, (snr_db, p_hat, p, sd)
        details.append(f"{snr_db:g}dB {abs(p_hat - p) / sd:.2f}sd")
    record("P2", "SER vs theory: " + ", ".join(details))


# --- P3: gradient correctness ----------------------------------------------


def test_p3_gradients_every_tensor():
    model, loss_fn = build_loss_fn(codec.tiny_config())
    worst, report = max_relative_error(model, loss_fn)
    assert worst < 1e-6, sorted(report.items(), key=lambda kv: -kv[1])[:5]
    record("P3", f"worst rel err {worst:.2e} over {len(report)} tensors")


# --- P4: parameter budget ---------------------------------------------------


def test_p4_parameter_budget():
    n = codec.param_count(codec.CodecConfig())
    assert 646_000 <= n <= 874_000
    record("P4", f"default config has {n} parameters")


# --- P5: low-SNR crossover (desk scale) -------------------------------------


def test_p5_low_snr_crossover(desk_model, cifar_ds):
    recs = harness.run_sweep(
        desk_model, cifar_ds, snr_grid=[0.0, 5.0, 10.0], channels=["rayleigh"],
        systems=["dnn", "qam256"], n_images=320, seed=2026,
    )
    score = {(r.system, r.snr_db): r.ssim_mean for r in recs}
    margin10 = score[("dnn", 10.0)] - score[("qam256", 10.0)]
    assert margin10 >= 0.05, score
    assert score[("dnn", 0.0)] >= score[("qam256", 0.0)], score
    assert score[("dnn", 5.0)] >= score[("qam256", 5.0)], score
    record(
        "P5",
        f"rayleigh SSIM dnn/qam: 0dB {score[('dnn', 0.0)]:.3f}/{score[('qam256', 0.0)]:.3f}, "
        f"5dB {score[('dnn', 5.0)]:.3f}/{score[('qam256', 5.0)]:.3f}, "
        f"10dB {score[('dnn', 10.0)]:.3f}/{score[('qam256', 10.0)]:.3f} (margin {margin10:.3f})",
    )


# --- P6: high-SNR reversal ---------------------------------------------------


def test_p6_high_snr_reversal(desk_model, cifar_ds):
    recs = harness.run_sweep(
        desk_model, cifar_ds, snr_grid=[40.0], channels=["awgn"],
        systems=["dnn", "qam256"], n_images=320, seed=2026,
    )
    score = {r.system: r.ssim_mean for r in recs}
    assert score["qam256"] >= 0.99, score
    assert score["qam256"] >= score["dnn"], score
    record("P6", f"awgn 40dB SSIM qam {score['qam256']:.4f} >= dnn {score['dnn']:.4f}")


# --- P7: determinism ----------------------------------------------------------


def _run_cli(args):
    return subprocess.run(
        [sys.executable, "-m", "semlink.cli", *args],
        capture_output=True, text=True, cwd=repo_path(),
    )


def test_p7_eval_determinism(tmp_path, cifar_ds):
    path = os.environ.get("SEMLINK_DESK_CKPT", repo_path("artifacts", "desk.ckpt"))
    if not os.path.isfile(path):
        pytest.skip("desk checkpoint not available for CLI determinism check")
    d = cifar_dir_or_none()
    outs = []
    for name in ("a.csv", "b.csv"):
        out = str(tmp_path / name)
        res = _run_cli(
            ["eval", "--ckpt", path, "--data", d, "--images", "32",
             "--snr-grid", "0:40:10", "--seed", "11", "--csv", out]
        )
        assert res.returncode == 0, res.stderr
        outs.append(open(out, "rb").read())
    assert outs[0] == outs[1]
    record("P7a", "eval twice -> byte-identical CSV")


@pytest.mark.slow
def test_p7_tiny_train_determinism(tmp_path):
    d = cifar_dir_or_none()
    if d is None:
        pytest.skip("CIFAR-10 data not found: set SEMLINK_DATA")
    blobs = []
    for name in ("a.ckpt", "b.ckpt"):
        out = str(tmp_path / name)
        res = _run_cli(
            ["train", "--data", d, "--profile", "tiny", "--seed", "1",
             "--deterministic", "--quiet", "--checkpoint-every", "0", "--out", out]
        )
        assert res.returncode == 0, res.stderr
        blobs.append(open(out, "rb").read())
    assert blobs[0] == blobs[1]
    record("P7b", "tiny-profile train twice -> bit-identical checkpoints")
