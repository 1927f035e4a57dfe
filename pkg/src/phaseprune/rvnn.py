"""Real-valued MLP: ReLU hidden layers, softmax output, cross-entropy.

Same conventions as :mod:`phaseprune.cvnn` (batch as columns, bias row only
on the input, checkpoint layout) with one real grid per layer.
"""

from dataclasses import dataclass, field

import numpy as np

from ._kernels import matmul
from .cmatrix import ShapeError
from .cvnn import _read_grid, _read_header, _write_header, loss, softmax_columns

CHECKPOINT_MAGIC = b"RVNN1"

__all__ = [
    "RvnnModel",
    "RealCache",
    "r_forward",
    "r_backward",
    "r_sgd_step",
    "r_init_model",
    "r_predict",
    "loss",
    "save_checkpoint",
    "load_checkpoint",
]


@dataclass(eq=False)
class RvnnModel:
    layer_dims: list
    weights: list = field(default_factory=list)

    def __post_init__(self):
        self.layer_dims = [int(d) for d in self.layer_dims]
        self.weights = [np.asarray(w, dtype=np.float64) for w in self.weights]
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
        return RvnnModel(list(self.layer_dims), [w.copy() for w in self.weights])

    def equals(self, other):
        return self.layer_dims == other.layer_dims and all(
            np.array_equal(a, b) for a, b in zip(self.weights, other.weights)
        )


@dataclass(eq=False)
class RealCache:
    z: list
    a: list

    @property
    def probs(self):
        return self.a[-1]


def relu(z):
    return np.maximum(z, 0.0)


def _check_input(model, x):
    if x.shape[0] != model.layer_dims[0]:
        raise ShapeError(f"input has {x.shape[0]} rows, model expects {model.layer_dims[0]}")


def r_forward(model: RvnnModel, x) -> RealCache:
    x = np.asarray(x, dtype=np.float64)
    _check_input(model, x)
    zs, acts = [], []
    a = x
    last = model.depth - 1
    for k, w in enumerate(model.weights):
        z = matmul(w, a)
        zs.append(z)
        a = softmax_columns(z) if k == last else relu(z)
        acts.append(a)
    return RealCache(zs, acts)


def r_predict(model: RvnnModel, x):
    return np.argmax(r_forward(model, x).probs, axis=0)


def r_backward(model: RvnnModel, cache: RealCache, x, y):
    """Per-layer dL/dW for the mean softmax cross-entropy."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_input(model, x)
    if len(cache.z) != model.depth:
        raise ShapeError(f"cache has {len(cache.z)} layers, model has {model.depth}")
    for k, (z, w) in enumerate(zip(cache.z, model.weights)):
        if z.shape != (w.shape[0], x.shape[1]):
            raise ShapeError(f"cache layer {k} has shape {z.shape}, expected {(w.shape[0], x.shape[1])}")
    if y.shape != cache.z[-1].shape:
        raise ShapeError(f"labels {y.shape} vs output {cache.z[-1].shape}")

    delta = (cache.probs - y) / x.shape[1]
    grads = [None] * model.depth
    for k in range(model.depth - 1, -1, -1):
        prev = cache.a[k - 1] if k > 0 else x
        grads[k] = matmul(delta, np.ascontiguousarray(prev.T))
        if k == 0:
            break
        delta = matmul(np.ascontiguousarray(model.weights[k].T), delta) * (cache.z[k - 1] > 0)
    return grads


def r_sgd_step(model: RvnnModel, grads, lr: float) -> RvnnModel:
    if lr < 0:
        raise ValueError(f"learning rate must be non-negative, got {lr}")
    if len(grads) != model.depth:
        raise ShapeError(f"gradients cover {len(grads)} layers, model has {model.depth}")
    new = []
    for w, g in zip(model.weights, grads):
        if g.shape != w.shape:
            raise ShapeError(f"gradient shape {g.shape} vs weight {w.shape}")
        new.append(w - lr * g)
    return RvnnModel(list(model.layer_dims), new)


def r_init_model(layer_dims, seed) -> RvnnModel:
    """Glorot-uniform weights, deterministic in ``seed``."""
    layer_dims = [int(d) for d in layer_dims]
    if len(layer_dims) < 2 or min(layer_dims) < 1:
        raise ValueError(f"layer_dims must list at least two positive sizes, got {layer_dims}")
    rng = np.random.default_rng(seed)
    weights = []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        a = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-a, a, size=(fan_out, fan_in)))
    return RvnnModel(layer_dims, weights)


def save_checkpoint(model: RvnnModel, path):
    with open(path, "wb") as fh:
        _write_header(fh, CHECKPOINT_MAGIC, model.layer_dims)
        for w in model.weights:
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())


def load_checkpoint(path) -> RvnnModel:
    with open(path, "rb") as fh:
        dims = _read_header(fh, CHECKPOINT_MAGIC)
        weights = [_read_grid(fh, fan_out, fan_in) for fan_in, fan_out in zip(dims[:-1], dims[1:])]
        if fh.read(1):
            raise ValueError("trailing bytes after checkpoint payload")
    return RvnnModel(dims, weights)
