"""Information-preserving prune operators.

Each operator replaces every weight by a projection that keeps one kind of
information (phase, amplitude, real part, imaginary part, sign, magnitude)
and discards the rest. ``RANDOM_HALF`` is the reference benchmark: it zeroes
exactly half of the weights chosen by a seeded shuffle.

All functions return a pruned copy and leave the input model untouched.
"""

import enum

import numpy as np

from .cmatrix import ComplexMatrix, amplitude
from .cvnn import CvnnModel
from .rvnn import RvnnModel


class PruneVariant(enum.Enum):
    NONE = "none"
    RANDOM_HALF = "half"
    PHASE_ONLY = "phase"
    AMPLITUDE_ONLY = "amplitude"
    REAL_ONLY = "real"
    IMAG_ONLY = "imag"
    SIGN_ONLY = "sign"
    MAGNITUDE_ONLY = "magnitude"

    @classmethod
    def parse(cls, name):
        try:
            return cls(name.strip().lower())
        except ValueError:
            choices = ", ".join(v.value for v in cls)
            raise ValueError(f"unknown prune variant {name!r}; choose from {choices}") from None

    @property
    def for_complex(self):
        return self in _COMPLEX

    @property
    def for_real(self):
        return self in _REAL

    def __str__(self):
        return self.value


_SHARED = {PruneVariant.NONE, PruneVariant.RANDOM_HALF}
_COMPLEX = _SHARED | {
    PruneVariant.PHASE_ONLY,
    PruneVariant.AMPLITUDE_ONLY,
    PruneVariant.REAL_ONLY,
    PruneVariant.IMAG_ONLY,
}
_REAL = _SHARED | {PruneVariant.SIGN_ONLY, PruneVariant.MAGNITUDE_ONLY}

COMPLEX_VARIANTS = tuple(v for v in PruneVariant if v in _COMPLEX)
REAL_VARIANTS = tuple(v for v in PruneVariant if v in _REAL)

HALF_SCOPES = ("per-matrix", "global")


class VariantMismatchError(ValueError):
    """Variant does not apply to this kind of model."""


def half_masks(shapes, seed, scope="per-matrix"):
    """Boolean keep-masks zeroing exactly half the entries.

    ``per-matrix`` drops floor(N/2) entries of every matrix;
    ``global`` drops floor(total/2) entries across all matrices together.
    """
    if scope not in HALF_SCOPES:
        raise ValueError(f"half scope must be one of {HALF_SCOPES}, got {scope!r}")
    rng = np.random.default_rng(seed)
    sizes = [int(np.prod(s)) for s in shapes]
    if scope == "per-matrix":
        masks = []
        for shape, n in zip(shapes, sizes):
            keep = np.ones(n, dtype=bool)
            keep[rng.permutation(n)[: n // 2]] = False
            masks.append(keep.reshape(shape))
        return masks
    total = sum(sizes)
    keep = np.ones(total, dtype=bool)
    keep[rng.permutation(total)[: total // 2]] = False
    bounds = np.cumsum([0] + sizes)
    return [keep[lo:hi].reshape(s) for lo, hi, s in zip(bounds[:-1], bounds[1:], shapes)]


def _unit_phase(w: ComplexMatrix) -> ComplexMatrix:
    """``w / |w|`` (0 where w == 0), renormalised to a bitwise fixed point.

    A single division can leave ``hypot`` one ulp off 1, so a second pass
    would move the value again; repeating until nothing changes makes the
    operator exactly idempotent (in practice two or three passes).
    """
    amp = amplitude(w)
    nz = amp > 0
    safe = np.where(nz, amp, 1.0)
    re = np.where(nz, w.re / safe, 0.0)
    im = np.where(nz, w.im / safe, 0.0)
    for _ in range(16):
        h = np.hypot(re, im)
        todo = nz & (h != 1.0)
        if not todo.any():
            break
        new_re = re[todo] / h[todo]
        new_im = im[todo] / h[todo]
        if np.array_equal(new_re, re[todo]) and np.array_equal(new_im, im[todo]):
            break
        re[todo] = new_re
        im[todo] = new_im
    return ComplexMatrix(re, im)


def _prune_complex_matrix(w: ComplexMatrix, v: PruneVariant) -> ComplexMatrix:
    if v is PruneVariant.NONE:
        return w.copy()
    if v is PruneVariant.PHASE_ONLY:
        return _unit_phase(w)
    if v is PruneVariant.AMPLITUDE_ONLY:
        return ComplexMatrix(amplitude(w), np.zeros(w.shape))
    if v is PruneVariant.REAL_ONLY:
        return ComplexMatrix(w.re.copy(), np.zeros(w.shape))
    if v is PruneVariant.IMAG_ONLY:
        return ComplexMatrix(np.zeros(w.shape), w.im.copy())
    raise VariantMismatchError(f"{v} does not apply to complex models")


def _prune_real_matrix(w, v: PruneVariant):
    if v is PruneVariant.NONE:
        return w.copy()
    if v is PruneVariant.SIGN_ONLY:
        return np.sign(w)
    if v is PruneVariant.MAGNITUDE_ONLY:
        return np.abs(w)
    raise VariantMismatchError(f"{v} does not apply to real models")


def prune_complex(model: CvnnModel, v: PruneVariant, rng_seed=None, half_scope="per-matrix") -> CvnnModel:
    if not isinstance(model, CvnnModel):
        raise VariantMismatchError("prune_complex needs a CvnnModel")
    if not v.for_complex:
        raise VariantMismatchError(f"{v} does not apply to complex models")
    if v is PruneVariant.RANDOM_HALF:
        if rng_seed is None:
            raise ValueError("RANDOM_HALF needs an rng_seed")
        masks = half_masks([w.shape for w in model.weights], rng_seed, half_scope)
        weights = [
            ComplexMatrix(np.where(keep, w.re, 0.0), np.where(keep, w.im, 0.0))
            for w, keep in zip(model.weights, masks)
        ]
    else:
        weights = [_prune_complex_matrix(w, v) for w in model.weights]
    return CvnnModel(list(model.layer_dims), weights)


def prune_real(model: RvnnModel, v: PruneVariant, rng_seed=None, half_scope="per-matrix") -> RvnnModel:
    if not isinstance(model, RvnnModel):
        raise VariantMismatchError("prune_real needs an RvnnModel")
    if not v.for_real:
        raise VariantMismatchError(f"{v} does not apply to real models")
    if v is PruneVariant.RANDOM_HALF:
        if rng_seed is None:
            raise ValueError("RANDOM_HALF needs an rng_seed")
        masks = half_masks([w.shape for w in model.weights], rng_seed, half_scope)
        weights = [np.where(keep, w, 0.0) for w, keep in zip(model.weights, masks)]
    else:
        weights = [_prune_real_matrix(w, v) for w in model.weights]
    return RvnnModel(list(model.layer_dims), weights)


def prune(model, v: PruneVariant, rng_seed=None, half_scope="per-matrix"):
    """Dispatch on model kind."""
    if isinstance(model, CvnnModel):
        return prune_complex(model, v, rng_seed, half_scope)
    if isinstance(model, RvnnModel):
        return prune_real(model, v, rng_seed, half_scope)
    raise TypeError(f"cannot prune {type(model).__name__}")
