import struct

import numpy as np
import pytest

from scalelab.data import (
    CIFAR_RECORD,
    Dataset,
    FormatError,
    encode_labels,
    export_csv,
    file_checksum,
    import_csv,
    load_cifar10,
    load_idx,
    parse_cifar_records,
    parse_idx,
    preprocess,
    sphere_normalize,
    synthetic_dataset,
    write_cifar_records,
    write_idx,
)
from scalelab.rng import SeededRng


def test_idx_label_tensor():
    blob = bytes([0, 0, 8, 1]) + struct.pack(">I", 2) + bytes([5, 9])
    tensor = parse_idx(blob)
    assert tensor.shape == (2,)
    assert tensor.tolist() == [5, 9]


def test_idx_image_tensor():
    payload = bytes(range(256)) * 3 + bytes(16)
    blob = bytes([0, 0, 8, 3]) + struct.pack(">III", 1, 28, 28) + payload
    tensor = parse_idx(blob)
    assert tensor.shape == (1, 28, 28)


def test_idx_bad_magic():
    blob = bytes([0, 0, 8, 0x99]) + bytes(100)
    with pytest.raises(FormatError):
        parse_idx(blob)
    with pytest.raises(FormatError, match="dtype"):
        parse_idx(bytes([0, 0, 0x99, 1]) + struct.pack(">I", 0))


def test_idx_truncated_payload():
    blob = bytes([0, 0, 8, 1]) + struct.pack(">I", 10) + bytes(5)
    with pytest.raises(FormatError, match="payload"):
        parse_idx(blob)


def test_idx_roundtrip_bitwise(tmp_path):
    tensor = SeededRng(1).gaussian(7, 9)
    tensor = ((tensor - tensor.min()) * 20).astype(np.uint8)
    path = tmp_path / "fixture-idx"
    write_idx(tensor, path)
    original = path.read_bytes()
    parsed = load_idx(path)
    write_idx(parsed, path)
    assert path.read_bytes() == original
    assert np.array_equal(parsed, tensor)


def test_cifar_single_record():
    blob = bytes([7]) + bytes(range(256)) * 12
    images, labels = parse_cifar_records(blob)
    assert images.shape == (1, 3072)
    assert labels.tolist() == [7]


def test_cifar_two_records():
    blob = (bytes([1]) + bytes(3072)) + (bytes([2]) + bytes(3072))
    images, labels = parse_cifar_records(blob)
    assert images.shape == (2, 3072)
    assert labels.tolist() == [1, 2]


def test_cifar_truncated():
    with pytest.raises(FormatError):
        parse_cifar_records(bytes(3072))


def test_cifar_label_out_of_range():
    with pytest.raises(FormatError, match="label"):
        parse_cifar_records(bytes([10]) + bytes(3072))


def test_cifar_roundtrip_bitwise(tmp_path, dataset_dir):
    path = dataset_dir / "cifar10" / "data_batch_1.bin"
    original = path.read_bytes()
    images, labels = parse_cifar_records(original)
    out = tmp_path / "rt.bin"
    write_cifar_records(images, labels, out)
    assert out.read_bytes() == original


def test_load_cifar10_directory(dataset_dir):
    images, labels = load_cifar10(dataset_dir / "cifar10", "train")
    assert images.shape == (100, 3072)
    ev_images, _ = load_cifar10(dataset_dir / "cifar10", "eval")
    assert ev_images.shape == (20, 3072)
    with pytest.raises(FileNotFoundError):
        load_cifar10(dataset_dir, "train")


def test_sphere_normalize_example():
    normalized, zero = sphere_normalize(np.array([[3.0, 4.0]]))
    assert normalized[0] == pytest.approx([0.8485281, 1.1313708], abs=1e-6)
    assert np.sum(normalized[0] ** 2) == pytest.approx(2.0, rel=1e-12)
    assert not zero[0]


def test_sphere_normalize_idempotent():
    x = SeededRng(2).gaussian(10, 6)
    once, _ = sphere_normalize(x)
    twice, _ = sphere_normalize(once)
    assert np.allclose(once, twice, rtol=1e-12)


def test_label_encoding():
    labels = encode_labels(np.array([3]), 10)
    expected = [-1.0] * 10
    expected[3] = 1.0
    assert labels[0].tolist() == expected
    many = encode_labels(np.arange(10), 10)
    assert np.all(many.sum(axis=1) == 2.0 - 10)


def test_preprocess_drops_zero_rows():
    images = np.zeros((4, 2, 2), dtype=np.uint8)
    images[0] = 1
    images[2] = 3
    ds = preprocess(images, np.array([0, 1, 2, 3]), split="eval", c=4)
    assert ds.n == 2
    assert ds.dropped_rows == 2
    assert np.allclose(np.sum(ds.inputs**2, axis=1), 4.0, rtol=1e-12)


def test_preprocess_subsample_deterministic():
    rng = SeededRng(0)
    images = (np.abs(rng.gaussian(50, 16)) * 50 + 1).astype(np.uint8)
    labels = np.arange(50) % 10
    a = preprocess(images, labels, subsample_n=20, seed=5, c=10)
    b = preprocess(images, labels, subsample_n=20, seed=5, c=10)
    assert np.array_equal(a.inputs, b.inputs)
    distinct = {
        preprocess(images, labels, subsample_n=20, seed=s, c=10).inputs.tobytes()
        for s in range(10)
    }
    assert len(distinct) == 10


def test_preprocess_eval_never_subsampled():
    images = np.ones((30, 4), dtype=np.uint8)
    ds = preprocess(images, np.zeros(30, dtype=int), subsample_n=5, split="eval", c=10)
    assert ds.n == 30


def test_synthetic_deterministic_and_normalized():
    a = synthetic_dataset(100, 10, 2, 10.0, seed=1)
    b = synthetic_dataset(100, 10, 2, 10.0, seed=1)
    assert np.array_equal(a.inputs, b.inputs)
    assert np.array_equal(a.labels, b.labels)
    assert np.allclose(np.sum(a.inputs**2, axis=1), 10.0, rtol=1e-9)


def test_synthetic_perceptron_separable():
    ds = synthetic_dataset(100, 10, 2, 10.0, seed=1)
    y = np.where(ds.labels[:, 0] > 0, 1.0, -1.0)
    w = np.zeros(ds.d)
    b = 0.0
    for _ in range(50):  # perceptron convergence oracle
        mistakes = 0
        for xi, yi in zip(ds.inputs, y):
            if yi * (w @ xi + b) <= 0:
                w += yi * xi
                b += yi
                mistakes += 1
        if mistakes == 0:
            break
    assert np.all(y * (ds.inputs @ w + b) > 0)


def test_synthetic_validation():
    with pytest.raises(ValueError):
        synthetic_dataset(1, 10, 2, 1.0, seed=0)
    with pytest.raises(ValueError):
        synthetic_dataset(10, 1, 2, 1.0, seed=0)
    with pytest.raises(ValueError):
        synthetic_dataset(10, 10, 2, 0.0, seed=0)


def test_csv_roundtrip(tmp_path):
    ds = synthetic_dataset(20, 5, 2, 5.0, seed=3)
    path = tmp_path / "ds.csv"
    export_csv(ds, path)
    back = import_csv(path, c=2)
    assert np.array_equal(back.inputs, ds.inputs)
    assert np.array_equal(back.labels, ds.labels)


def test_csv_malformed(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x0,x1,label\n1.0,2.0\n")
    with pytest.raises(FormatError, match="row 2"):
        import_csv(path)
    path.write_text("x0,x1,notlabel\n")
    with pytest.raises(FormatError):
        import_csv(path)


def test_dataset_invariants(dataset_dir, image_train_eval):
    train_set, eval_set = image_train_eval
    for ds in (train_set, eval_set):
        norms = np.sum(ds.inputs**2, axis=1)
        assert np.allclose(norms, ds.d, rtol=1e-9)
        assert np.all(np.sum(ds.labels == 1.0, axis=1) == 1)
        assert np.all(ds.labels.sum(axis=1) == 2.0 - ds.c)
    assert train_set.n == 1000


def test_file_checksum_stable(dataset_dir):
    path = dataset_dir / "mnist" / "train-labels-idx1-ubyte"
    assert file_checksum(path) == file_checksum(path)
    assert len(file_checksum(path)) == 64
