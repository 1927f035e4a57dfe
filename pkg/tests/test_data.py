import gzip
import struct
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phaseprune.cmatrix import amplitude, phase
from phaseprune.data import (
    BadMagicError,
    DataError,
    DimensionOverflowError,
    IdxError,
    TrailingDataError,
    TruncatedError,
    append_bias,
    build_dataset,
    load_mnist,
    one_hot,
    parse_idx,
    phase_encode,
    read_idx_file,
    write_idx,
)

MNIST_DIR = Path(__file__).resolve().parents[1] / "data" / "mnist"
has_mnist = pytest.mark.skipif(
    not (MNIST_DIR / "t10k-images-idx3-ubyte").exists() and not (MNIST_DIR / "t10k-images-idx3-ubyte.gz").exists(),
    reason="MNIST files not present",
)


def test_parse_image_header():
    blob = bytes.fromhex("00000803 00000002 00000002 00000002") + bytes(range(8))
    dims, payload = parse_idx(blob)
    assert dims == (2, 2, 2)
    assert payload == bytes(range(8))


def test_parse_labels():
    dims, payload = parse_idx(bytes.fromhex("00000801 00000003") + b"\x07\x02\x01")
    assert dims == (3,)
    assert list(payload) == [7, 2, 1]


@pytest.mark.parametrize(
    "blob,err",
    [
        (bytes.fromhex("00000801 00000003") + b"\x07\x02", TruncatedError),
        (bytes.fromhex("00000803 00000002 00000002"), TruncatedError),
        (b"\x00\x00", TruncatedError),
        (bytes.fromhex("00000802 00000001") + b"\x00", BadMagicError),
        (bytes.fromhex("00000803 ffffffff ffffffff 00000002"), DimensionOverflowError),
        (bytes.fromhex("00000801 00000001") + b"\x00\x00", TrailingDataError),
    ],
)
def test_parse_errors(blob, err):
    with pytest.raises(err):
        parse_idx(blob)


def test_error_kinds_are_distinct():
    kinds = {BadMagicError, TruncatedError, DimensionOverflowError, TrailingDataError}
    assert len(kinds) == 4 and all(issubclass(k, IdxError) for k in kinds)


@settings(max_examples=500, deadline=None)
@given(st.binary(max_size=64))
def test_parse_is_total_on_random_bytes(blob):
    try:
        dims, payload = parse_idx(blob)
    except IdxError:
        return
    assert len(payload) == int(np.prod(dims))


@settings(max_examples=300, deadline=None)
@given(
    st.sampled_from([b"\x00\x00\x08\x03", b"\x00\x00\x08\x01"]),
    st.lists(st.integers(0, 6), min_size=0, max_size=3),
    st.binary(max_size=300),
)
def test_parse_is_total_near_valid_headers(magic, dims, tail):
    blob = magic + b"".join(struct.pack(">I", d) for d in dims) + tail
    try:
        got, payload = parse_idx(blob)
    except IdxError:
        return
    assert len(payload) == int(np.prod(got))


def test_gzip_is_transparent(tmp_path):
    labels = np.array([3, 1, 4, 1, 5], dtype=np.uint8)
    write_idx(tmp_path / "l.gz", labels)
    assert (tmp_path / "l.gz").read_bytes()[:2] == b"\x1f\x8b"
    dims, payload = read_idx_file(tmp_path / "l.gz")
    assert dims == (5,) and list(payload) == [3, 1, 4, 1, 5]


def test_corrupt_gzip(tmp_path):
    path = tmp_path / "bad"
    path.write_bytes(gzip.compress(b"\x00\x00\x08\x01\x00\x00\x00\x01\x05")[:12])
    with pytest.raises(IdxError):
        read_idx_file(path)


@pytest.mark.parametrize("x,expected", [(0.0, 0j), (1.0, -1 + 0j), (0.5, 0.5j)])
def test_phase_encode_cases(x, expected):
    enc = phase_encode([[x]])
    assert abs(complex(enc.re[0, 0], enc.im[0, 0]) - expected) <= 1e-15


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=40))
def test_phase_encode_keeps_magnitude_and_sets_phase(values):
    x = np.array([values])
    enc = phase_encode(x)
    assert np.max(np.abs(amplitude(enc) - x)) <= 1e-12
    pos = x > 0
    assert np.max(np.abs(phase(enc)[pos] - np.pi * x[pos]), initial=0.0) <= 1e-12


@pytest.mark.parametrize("bad", [[[-0.1]], [[1.0001]], [[np.nan]], [0.5, 0.5]])
def test_phase_encode_rejects(bad):
    with pytest.raises(ValueError):
        phase_encode(bad)


def test_bias_and_one_hot():
    x = append_bias(np.zeros((3, 2)))
    np.testing.assert_array_equal(x[-1], [1.0, 1.0])
    cx = append_bias(phase_encode(np.full((2, 3), 0.5)))
    np.testing.assert_array_equal(cx.re[-1], 1.0)
    np.testing.assert_array_equal(cx.im[-1], 0.0)
    y = one_hot([2, 0])
    assert y.shape == (10, 2) and y[2, 0] == 1 and y[0, 1] == 1 and y.sum() == 2


def test_real_encoding_of_blank_image():
    ds = build_dataset(np.zeros((1, 28, 28), dtype=np.uint8), [4], "test", "real")
    assert ds.x.shape == (785, 1)
    np.testing.assert_array_equal(ds.x[:-1, 0], 0.0)
    assert ds.x[-1, 0] == 1.0


def _write_split(directory, images, labels, gz=False):
    suffix = ".gz" if gz else ""
    write_idx(directory / f"t10k-images-idx3-ubyte{suffix}", images)
    write_idx(directory / f"t10k-labels-idx1-ubyte{suffix}", labels)


@pytest.mark.parametrize("gz", [False, True])
def test_load_synthetic_split(tmp_path, gz):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, (7, 4, 4), dtype=np.uint8)
    labels = rng.integers(0, 10, 7).astype(np.uint8)
    _write_split(tmp_path, images, labels, gz)
    ds = load_mnist(tmp_path, "test", "complex")
    assert ds.size == 7 and ds.x.shape == (17, 7)
    np.testing.assert_allclose(amplitude(ds.x)[:-1], images.reshape(7, 16).T / 255.0, atol=1e-12)
    np.testing.assert_array_equal(ds.labels, labels)
    np.testing.assert_array_equal(ds.y.sum(axis=0), 1.0)
    real = load_mnist(tmp_path, "test", "real")
    np.testing.assert_array_equal(real.x[:-1], images.reshape(7, 16).T / 255.0)


def test_load_errors(tmp_path):
    with pytest.raises(DataError, match="missing"):
        load_mnist(tmp_path, "test")
    _write_split(tmp_path, np.zeros((3, 2, 2), dtype=np.uint8), np.zeros(2, dtype=np.uint8))
    with pytest.raises(DataError, match="3 images but 2 labels"):
        load_mnist(tmp_path, "test")
    write_idx(tmp_path / "t10k-labels-idx1-ubyte", np.array([11, 0, 0], dtype=np.uint8))
    with pytest.raises(DataError, match="labels"):
        load_mnist(tmp_path, "test")
    with pytest.raises(ValueError):
        load_mnist(tmp_path, "valid")


@has_mnist
@pytest.mark.parametrize("split,count", [("train", 60000), ("test", 10000)])
def test_real_mnist_counts(split, count):
    ds = load_mnist(MNIST_DIR, split, "real")
    assert ds.size == count and ds.x.shape == (785, count)
    np.testing.assert_array_equal(ds.x[-1], 1.0)
    assert ds.x.min() >= 0.0 and ds.x.max() <= 1.0
