"""Complex-valued MLP with CReLU hidden units and a modSoftmax output.

Layout follows the column-major batch convention: an input batch is a
``(n + 1) x m`` complex matrix whose last row is the constant bias input,
weights map ``layer_dims[k] -> layer_dims[k + 1]`` and every layer is a plain
left-multiplication ``Z_k = W_k A_{k-1}``. Only the input carries a bias row.

The backward pass differentiates the real loss with respect to the real and
imaginary planes of each weight independently.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from ._kernels import matmul
from .cmatrix import ComplexMatrix, ShapeError, cmul

LOG_CLAMP = 1e-15
CHECKPOINT_MAGIC = b"CVNN1"


@dataclass(eq=False)
class CvnnModel:
    layer_dims: list
    weights: list = field(default_factory=list)

    def __post_init__(self):
        self.layer_dims = [int(d) for d in self.layer_dims]
        if len(self.weights) != len(self.layer_dims) - 1:
            raise ShapeError(
                f"{len(self.layer_dims)} layer dims need {len(self.layer_dims) - 1} weight matrices, "
                f"got {len(self.weights)}"
            )
        for k, w in enumerate(self.weights):
            expected = (self.layer_dims[k + 1], self.layer_dims[k])
            if w.shape != expected:
                raise ShapeError(f"weights[{k}] has shape {w.shape}, expected {expected}")

    @property
    def depth(self):
        return len(self.weights)

    def copy(self):
        return CvnnModel(list(self.layer_dims), [w.copy() for w in self.weights])

    def equals(self, other):
        return self.layer_dims == other.layer_dims and all(
            a.equals(b) for a, b in zip(self.weights, other.weights)
        )


@dataclass(eq=False)
class ForwardCache:
    """Pre-activations ``z[k]`` and activations ``a[k]`` per layer.

    ``a[-1]`` holds the output probabilities with a zero imaginary plane.
    """

    z: list
    a: list

    @property
    def probs(self):
        return self.a[-1].re


@dataclass(eq=False)
class Gradients:
    """``re[k]``/``im[k]`` are dL/dW_k^R and dL/dW_k^I."""

    re: list
    im: list


def c_relu(z: ComplexMatrix) -> ComplexMatrix:
    return ComplexMatrix(np.maximum(z.re, 0.0), np.maximum(z.im, 0.0))


def softmax_columns(s):
    """Column softmax of a real grid, shifted by the column max."""
    s = np.asarray(s, dtype=np.float64)
    e = np.exp(s - s.max(axis=0, keepdims=True))
    return e / e.sum(axis=0, keepdims=True)


def mod_softmax(z: ComplexMatrix) -> np.ndarray:
    """Column softmax over squared moduli ``exp(|z|^2) / sum exp(|z|^2)``."""
    return softmax_columns(z.re * z.re + z.im * z.im)


def _check_input(model, x):
    if x.rows != model.layer_dims[0]:
        raise ShapeError(f"input has {x.rows} rows, model expects {model.layer_dims[0]}")


def forward(model: CvnnModel, x: ComplexMatrix) -> ForwardCache:
    _check_input(model, x)
    zs, acts = [], []
    a = x
    last = model.depth - 1
    for k, w in enumerate(model.weights):
        z = cmul(w, a)
        zs.append(z)
        a = ComplexMatrix.from_real(mod_softmax(z)) if k == last else c_relu(z)
        acts.append(a)
    return ForwardCache(zs, acts)


def predict(model: CvnnModel, x: ComplexMatrix) -> np.ndarray:
    """Class index per column (argmax of the probabilities, lowest index on ties)."""
    return np.argmax(forward(model, x).probs, axis=0)


def loss(probs, y) -> float:
    """Mean over columns of ``-sum(y * log(max(probs, 1e-15)))``."""
    probs = np.asarray(probs, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if probs.shape != y.shape:
        raise ShapeError(f"loss: probs {probs.shape} vs labels {y.shape}")
    m = probs.shape[1]
    return float(-np.sum(y * np.log(np.maximum(probs, LOG_CLAMP))) / m)


def _relu_mask(z):
    # CReLU derivative written as: 1/2 (1 + sign z), which is 1/2 at 0
    return 0.5 * (1.0 + np.sign(z))


def backward(model: CvnnModel, cache: ForwardCache, x: ComplexMatrix, y) -> Gradients:
    """Gradients of the mean cross-entropy w.r.t. every weight plane.

    Output layer seed: ``dL/dZ = (A - Y) * 2Z / m`` on each plane. Weight
    gradients then follow

        dW^R = dZ^R A^R^T + dZ^I A^I^T
        dW^I = dZ^I A^R^T - dZ^R A^I^T

    and the error moves to the previous layer through

        dA^R = W^R^T dZ^R + W^I^T dZ^I
        dA^I = W^R^T dZ^I - W^I^T dZ^R

    followed by the CReLU masks on each plane.
    """
    _check_input(model, x)
    y = np.asarray(y, dtype=np.float64)
    if len(cache.z) != model.depth or len(cache.a) != model.depth:
        raise ShapeError(f"cache has {len(cache.z)} layers, model has {model.depth}")
    for k, (z, w) in enumerate(zip(cache.z, model.weights)):
        if z.rows != w.rows or z.cols != x.cols:
            raise ShapeError(f"cache layer {k} has shape {z.shape}, expected {(w.rows, x.cols)}")
    if y.shape != cache.z[-1].shape:
        raise ShapeError(f"labels {y.shape} vs output {cache.z[-1].shape}")

    m = x.cols
    z_out = cache.z[-1]
    err = (cache.probs - y) * (2.0 / m)
    d_re = err * z_out.re
    d_im = err * z_out.im

    g_re = [None] * model.depth
    g_im = [None] * model.depth
    for k in range(model.depth - 1, -1, -1):
        prev = cache.a[k - 1] if k > 0 else x
        prev_re_t = np.ascontiguousarray(prev.re.T)
        prev_im_t = np.ascontiguousarray(prev.im.T)
        g_re[k] = matmul(d_re, prev_re_t) + matmul(d_im, prev_im_t)
        g_im[k] = matmul(d_im, prev_re_t) - matmul(d_re, prev_im_t)
        if k == 0:
            break
        w = model.weights[k]
        w_re_t = np.ascontiguousarray(w.re.T)
        w_im_t = np.ascontiguousarray(w.im.T)
        da_re = matmul(w_re_t, d_re) + matmul(w_im_t, d_im)
        da_im = matmul(w_re_t, d_im) - matmul(w_im_t, d_re)
        z = cache.z[k - 1]
        d_re = da_re * _relu_mask(z.re)
        d_im = da_im * _relu_mask(z.im)
    return Gradients(g_re, g_im)


def sgd_step(model: CvnnModel, grads: Gradients, lr: float) -> CvnnModel:
    """Return a new model moved one plain gradient-descent step."""
    if lr < 0:
        raise ValueError(f"learning rate must be non-negative, got {lr}")
    if len(grads.re) != model.depth or len(grads.im) != model.depth:
        raise ShapeError(f"gradients cover {len(grads.re)} layers, model has {model.depth}")
    new = []
    for w, gr, gi in zip(model.weights, grads.re, grads.im):
        if gr.shape != w.shape or gi.shape != w.shape:
            raise ShapeError(f"gradient shape {gr.shape}/{gi.shape} vs weight {w.shape}")
        new.append(ComplexMatrix(w.re - lr * gr, w.im - lr * gi))
    return CvnnModel(list(model.layer_dims), new)


def init_scale(fan_in, fan_out):
    """Half-width of the per-plane uniform init (Glorot limit over sqrt 2)."""
    return np.sqrt(6.0 / (fan_in + fan_out)) / np.sqrt(2.0)


def init_model(layer_dims, seed) -> CvnnModel:
    layer_dims = [int(d) for d in layer_dims]
    if len(layer_dims) < 2 or min(layer_dims) < 1:
        raise ValueError(f"layer_dims must list at least two positive sizes, got {layer_dims}")
    rng = np.random.default_rng(seed)
    weights = []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        a = init_scale(fan_in, fan_out)
        re = rng.uniform(-a, a, size=(fan_out, fan_in))
        im = rng.uniform(-a, a, size=(fan_out, fan_in))
        weights.append(ComplexMatrix(re, im))
    return CvnnModel(layer_dims, weights)


def _write_header(fh, magic, dims):
    fh.write(magic)
    fh.write(struct.pack("<Q", len(dims) - 1))
    fh.write(struct.pack(f"<{len(dims)}Q", *dims))


def _read_header(fh, magic):
    got = fh.read(len(magic))
    if got != magic:
        raise ValueError(f"bad checkpoint magic {got!r}, expected {magic!r}")
    raw = fh.read(8)
    if len(raw) != 8:
        raise ValueError("truncated checkpoint header")
    (layers,) = struct.unpack("<Q", raw)
    raw = fh.read(8 * (layers + 1))
    if len(raw) != 8 * (layers + 1):
        raise ValueError("truncated checkpoint header")
    return list(struct.unpack(f"<{layers + 1}Q", raw))


def _read_grid(fh, rows, cols):
    raw = fh.read(8 * rows * cols)
    if len(raw) != 8 * rows * cols:
        raise ValueError("truncated checkpoint payload")
    return np.frombuffer(raw, dtype="<f8").reshape(rows, cols).astype(np.float64)


def save_checkpoint(model: CvnnModel, path):
    with open(path, "wb") as fh:
        _write_header(fh, CHECKPOINT_MAGIC, model.layer_dims)
        for w in model.weights:
            fh.write(np.ascontiguousarray(w.re, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(w.im, dtype="<f8").tobytes())


def load_checkpoint(path) -> CvnnModel:
    with open(path, "rb") as fh:
        dims = _read_header(fh, CHECKPOINT_MAGIC)
        weights = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            re = _read_grid(fh, fan_out, fan_in)
            im = _read_grid(fh, fan_out, fan_in)
            weights.append(ComplexMatrix(re, im))
        if fh.read(1):
            raise ValueError("trailing bytes after checkpoint payload")
    return CvnnModel(dims, weights)
