import numpy as np
import pytest

from semlink import dataset
from semlink.dataset import (
    DatasetFormatError,
    load_cifar10,
    sample_images,
    serialize_records,
    to_bytes,
    to_float,
)

from conftest import cifar_dir_or_none


def test_load_synth_counts_and_order(synth_cifar_dir):
    ds = load_cifar10(synth_cifar_dir)
    assert len(ds.train) == 600
    assert len(ds.test) == 120
    # record order preserved: first train record equals the file's first record
    raw = np.fromfile(f"{synth_cifar_dir}/data_batch_1.bin", dtype=np.uint8)[:3073]
    assert ds.train.labels[0] == raw[0]
    planar = ds.train.images[0].transpose(2, 0, 1).reshape(-1)
    assert np.array_equal(planar, raw[1:])


def test_load_full_cifar_counts():
    d = cifar_dir_or_none()
    if d is None:
        pytest.skip("full CIFAR-10 not available")
    ds = load_cifar10(d)
    assert len(ds.train) == 50_000
    assert len(ds.test) == 10_000


def test_batch_file_size_arithmetic(tmp_path):
    # 10,000 records of 3073 bytes = 30,730,000 bytes is accepted
    path = tmp_path / "data_batch_1.bin"
    recs = np.zeros((10_000, 3073), dtype=np.uint8)
    recs.tofile(path)
    assert path.stat().st_size == 30_730_000
    labels, images = dataset._read_batch_file(str(path))
    assert len(labels) == 10_000 and images.shape == (10_000, 32, 32, 3)


def test_truncated_file_rejected(tmp_path):
    path = tmp_path / "test_batch.bin"
    with open(path, "wb") as f:
        f.write(b"\0" * (30_730_000 - 1))
    with pytest.raises(DatasetFormatError, match="test_batch.bin"):
        dataset._read_batch_file(str(path))


def test_missing_file_rejected(tmp_path):
    with pytest.raises(DatasetFormatError, match="data_batch_1.bin"):
        load_cifar10(str(tmp_path))


def test_to_float_values():
    img = np.zeros((32, 32, 3), dtype=np.uint8)
    img[0, 0, 0] = 255
    img[0, 0, 1] = 128
    f = to_float(img)
    assert f[0, 0, 0] == 1.0
    assert abs(f[0, 0, 1] - 128 / 255) < 1e-7
    assert f[1, 1, 1] == 0.0


def test_to_bytes_clamps_and_rounds():
    img = np.zeros((32, 32, 3), dtype=np.float64)
    img[0, 0] = [1.0, 1.7, -0.2]
    b = to_bytes(img)
    assert b[0, 0, 0] == 255
    assert b[0, 0, 1] == 255  # clamped
    assert b[0, 0, 2] == 0  # clamped
    # half-away-from-zero: 0.5/255 scaled back is exactly 0.5 -> rounds to 1
    img[:] = 0.5 / 255
    assert to_bytes(img)[0, 0, 0] == 1


def test_roundtrip_exhaustive_all_bytes():
    # every byte value survives to_float -> to_bytes
    vals = np.arange(256, dtype=np.uint8)
    img = np.resize(vals, (32, 32, 3)).astype(np.uint8)
    assert np.array_equal(to_bytes(to_float(img)), img)


def test_serialize_reproduces_input_bytes(synth_cifar_dir):
    ds = load_cifar10(synth_cifar_dir)
    raw = np.concatenate(
        [
            np.fromfile(f"{synth_cifar_dir}/data_batch_{i}.bin", dtype=np.uint8)
            for i in range(1, 6)
        ]
    )
    assert np.array_equal(serialize_records(ds.train), raw)


def test_sample_images_determinism(synth_cifar_dir):
    ds = load_cifar10(synth_cifar_dir)
    a = sample_images(ds, "test", 32, seed=7)
    b = sample_images(ds, "test", 32, seed=7)
    assert np.array_equal(a, b)
    c = sample_images(ds, "test", 32, seed=8)
    assert not np.array_equal(a, c)


def test_sample_images_full_split_is_permutation(synth_cifar_dir):
    ds = load_cifar10(synth_cifar_dir)
    sel = sample_images(ds, "test", len(ds.test), seed=3)
    # sort both pixel sets; a permutation has identical multisets
    assert np.array_equal(
        np.sort(sel.reshape(len(sel), -1), axis=0),
        np.sort(ds.test.images.reshape(len(sel), -1), axis=0),
    )


def test_sample_images_distinct_indices(synth_cifar_dir):
    ds = load_cifar10(synth_cifar_dir)
    sel = sample_images(ds, "test", 120, seed=9)
    rows = {r.tobytes() for r in sel}
    base = {r.tobytes() for r in ds.test.images}
    assert rows == base


def test_sample_images_oversample_rejected(synth_cifar_dir):
    ds = load_cifar10(synth_cifar_dir)
    with pytest.raises(ValueError):
        sample_images(ds, "test", 121, seed=0)
