"""MNIST ingestion: IDX parsing, scaling, phase encoding, bias row, one-hot labels."""

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cmatrix import ComplexMatrix

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
_NDIMS = {IMAGES_MAGIC: 3, LABELS_MAGIC: 1}
MAX_ELEMENTS = 2**31 - 1
NUM_CLASSES = 10

DEFAULT_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


class DataError(Exception):
    """Base class for dataset problems."""


class IdxError(DataError):
    pass


class BadMagicError(IdxError):
    pass


class TruncatedError(IdxError):
    pass


class DimensionOverflowError(IdxError):
    pass


class TrailingDataError(IdxError):
    pass


def parse_idx(data):
    """Decode an unsigned-byte IDX blob (images or labels).

    Returns ``(dims, payload)`` where ``payload`` is the raw ``bytes`` and
    ``len(payload) == prod(dims)``.
    """
    data = bytes(data)
    if len(data) < 4:
        raise TruncatedError(f"IDX header needs 4 magic bytes, got {len(data)}")
    (magic,) = struct.unpack(">I", data[:4])
    if magic not in _NDIMS:
        raise BadMagicError(
            f"bad IDX magic 0x{magic:08x}; expected 0x{IMAGES_MAGIC:08x} (images) "
            f"or 0x{LABELS_MAGIC:08x} (labels)"
        )
    ndims = _NDIMS[magic]
    header = 4 + 4 * ndims
    if len(data) < header:
        raise TruncatedError(f"IDX header needs {header} bytes, got {len(data)}")
    dims = struct.unpack(f">{ndims}I", data[4:header])
    count = 1
    for d in dims:
        count *= d
    if count > MAX_ELEMENTS:
        raise DimensionOverflowError(f"IDX dims {dims} describe {count} elements (limit {MAX_ELEMENTS})")
    payload = data[header:]
    if len(payload) < count:
        raise TruncatedError(f"IDX payload has {len(payload)} bytes, dims {dims} need {count}")
    if len(payload) > count:
        raise TrailingDataError(f"IDX payload has {len(payload) - count} bytes beyond dims {dims}")
    return dims, payload


def read_idx_file(path):
    """Parse an IDX file, transparently gunzipping when it starts with 1F 8B."""
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        try:
            raw = gzip.decompress(raw)
        except (OSError, EOFError) as exc:
            raise IdxError(f"{path}: corrupt gzip stream ({exc})") from exc
    try:
        return parse_idx(raw)
    except IdxError as exc:
        raise type(exc)(f"{path}: {exc}") from None


def phase_encode(pixels) -> ComplexMatrix:
    """Map ``x in [0, 1]`` to ``x * exp(i pi x)``."""
    x = np.asarray(pixels, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"phase_encode expects a 2-D grid, got shape {x.shape}")
    if not np.all((x >= 0.0) & (x <= 1.0)):
        raise ValueError("phase_encode inputs must lie in [0, 1]")
    angle = np.pi * x
    return ComplexMatrix(x * np.cos(angle), x * np.sin(angle))


def append_bias(x):
    """Append a row of ones (real plane) to a real grid or ComplexMatrix."""
    if isinstance(x, ComplexMatrix):
        m = x.cols
        return ComplexMatrix(np.vstack([x.re, np.ones((1, m))]), np.vstack([x.im, np.zeros((1, m))]))
    x = np.asarray(x, dtype=np.float64)
    return np.vstack([x, np.ones((1, x.shape[1]))])


def one_hot(labels, num_classes=NUM_CLASSES):
    labels = np.asarray(labels, dtype=np.int64)
    y = np.zeros((num_classes, labels.size))
    y[labels, np.arange(labels.size)] = 1.0
    return y


@dataclass(eq=False)
class Dataset:
    """``x`` is ``(n + 1) x m`` (bias last), ``y`` is ``c x m`` one-hot."""

    x: object
    y: np.ndarray
    labels: np.ndarray
    split: str

    @property
    def size(self):
        return self.labels.size

    @property
    def is_complex(self):
        return isinstance(self.x, ComplexMatrix)

    def columns(self, idx):
        """Sub-dataset restricted to the given column indices."""
        idx = np.asarray(idx)
        if self.is_complex:
            x = ComplexMatrix(self.x.re[:, idx], self.x.im[:, idx])
        else:
            x = self.x[:, idx]
        return Dataset(x, self.y[:, idx], self.labels[idx], self.split)


def _find(directory, name):
    path = Path(directory) / name
    if path.exists():
        return path
    gz = path.with_name(path.name + ".gz")
    if gz.exists():
        return gz
    raise DataError(f"missing MNIST file {path} (or {gz.name})")


def build_dataset(images, labels, split, encode="complex"):
    """Turn uint8 images ``(m, ...)`` and integer labels into a Dataset."""
    if encode not in ("real", "complex"):
        raise ValueError(f"encode must be 'real' or 'complex', got {encode!r}")
    images = np.asarray(images)
    labels = np.asarray(labels, dtype=np.int64)
    if images.shape[0] != labels.size:
        raise DataError(f"{images.shape[0]} images but {labels.size} labels")
    if labels.size and (labels.min() < 0 or labels.max() >= NUM_CLASSES):
        raise DataError(f"labels must lie in 0..{NUM_CLASSES - 1}")
    m = labels.size
    n = int(np.prod(images.shape[1:])) if images.ndim > 1 else 0
    pixels = images.reshape(m, n).T / 255.0
    x = phase_encode(pixels) if encode == "complex" else pixels
    return Dataset(append_bias(x), one_hot(labels), labels, split)


def load_mnist(directory, split, encode="complex", files=None) -> Dataset:
    """Load one MNIST split from IDX files (optionally gzip-compressed).

    ``files`` overrides the ``(images, labels)`` file names for the split.
    """
    if split not in DEFAULT_FILES:
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    img_name, lbl_name = files or DEFAULT_FILES[split]
    img_dims, img_bytes = read_idx_file(_find(directory, img_name))
    lbl_dims, lbl_bytes = read_idx_file(_find(directory, lbl_name))
    if len(img_dims) != 3:
        raise DataError(f"{img_name}: expected an image file, got dims {img_dims}")
    if len(lbl_dims) != 1:
        raise DataError(f"{lbl_name}: expected a label file, got dims {lbl_dims}")
    images = np.frombuffer(img_bytes, dtype=np.uint8).reshape(img_dims)
    labels = np.frombuffer(lbl_bytes, dtype=np.uint8)
    return build_dataset(images, labels, split, encode)


def write_idx(path, array):
    """Write a uint8 array as IDX (3-D images or 1-D labels)."""
    array = np.asarray(array, dtype=np.uint8)
    magic = {3: IMAGES_MAGIC, 1: LABELS_MAGIC}.get(array.ndim)
    if magic is None:
        raise ValueError(f"IDX writer supports 1-D labels or 3-D images, got {array.ndim}-D")
    header = struct.pack(">I", magic) + struct.pack(f">{array.ndim}I", *array.shape)
    data = header + array.tobytes()
    if str(path).endswith(".gz"):
        data = gzip.compress(data)
    Path(path).write_bytes(data)
