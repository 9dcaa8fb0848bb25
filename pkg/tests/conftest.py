"""Shared fixtures: synthetic CIFAR-format data, smooth test images, and a
small trained-ish codec checkpoint. Real CIFAR-10 is only required by the
acceptance criteria that train/evaluate on it (SEMLINK_DATA)."""

import os

import numpy as np
import pytest

from semlink import codec, training
from semlink.dataset import Dataset, Split

DATA_ENV = "SEMLINK_DATA"
DESK_CKPT_ENV = "SEMLINK_DESK_CKPT"
_REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def repo_path(*parts):
    return os.path.join(_REPO_ROOT, *parts)


def cifar_dir_or_none():
    cand = os.environ.get(DATA_ENV)
    if cand and os.path.isdir(cand):
        return cand
    default = repo_path("data", "cifar-10-batches-bin")
    if os.path.isdir(default):
        return default
    shared = "/root/data/cifar-10-batches-bin"
    if os.path.isdir(shared):
        return shared
    return None


def require_cifar():
    d = cifar_dir_or_none()
    if d is None:
        pytest.skip(f"CIFAR-10 binary batches not found; set {DATA_ENV}")
    return d


def smooth_images(n, seed, size=32):
    """Low-frequency sinusoid mixtures: structured stand-ins for photographs."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size] / size
    out = np.zeros((n, size, size, 3))
    for i in range(n):
        for c in range(3):
            img = np.zeros((size, size))
            for _ in range(3):
                fx, fy = rng.uniform(0.5, 2.5, 2)
                ph = rng.uniform(0, 2 * np.pi)
                img += rng.uniform(0.2, 1.0) * np.sin(2 * np.pi * (fx * xx + fy * yy) + ph)
            img = (img - img.min()) / (img.max() - img.min() + 1e-9)
            out[i, :, :, c] = img
    return (out * 255).astype(np.uint8)


@pytest.fixture(scope="session")
def smooth8():
    return smooth_images(8, seed=3)


@pytest.fixture(scope="session")
def smooth_dataset(smooth8):
    labels = np.zeros(len(smooth8), dtype=np.uint8)
    split = Split(smooth8, labels)
    return Dataset(train=split, test=split)


@pytest.fixture(scope="session")
def synth_cifar_dir(tmp_path_factory):
    """A small directory in the on-disk CIFAR-10 batch format (600 + 120 images)."""
    root = tmp_path_factory.mktemp("cifar-synth")
    rng = np.random.default_rng(17)

    def write(path, n):
        recs = np.empty((n, 3073), dtype=np.uint8)
        recs[:, 0] = rng.integers(0, 10, n)
        imgs = smooth_images(n, seed=int(rng.integers(1 << 30)))
        recs[:, 1:] = imgs.transpose(0, 3, 1, 2).reshape(n, -1)
        recs.tofile(path)

    for i in range(1, 6):
        write(root / f"data_batch_{i}.bin", 120)
    write(root / "test_batch.bin", 120)
    return str(root)


@pytest.fixture(scope="session")
def tiny_model():
    return codec.init_params(codec.tiny_config(), seed=5)


@pytest.fixture(scope="session")
def tiny_ckpt_path(tmp_path_factory, tiny_model):
    path = tmp_path_factory.mktemp("ckpt") / "tiny.ckpt"
    ck = training.checkpoint_from_model(tiny_model, seed=5)
    training.save_checkpoint(str(path), ck)
    return str(path)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
