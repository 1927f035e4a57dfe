"""Split-plane complex matrices.

A :class:`ComplexMatrix` stores the real and imaginary parts as two float64
grids of the same shape. Every operation here is written in terms of real
arithmetic on those two planes; numpy's complex dtype is never used.
Real matrices are plain 2-D float64 ``ndarray`` objects.
"""

from dataclasses import dataclass

import numpy as np

from ._kernels import matmul


class ShapeError(ValueError):
    """Operand shapes are incompatible."""


@dataclass(eq=False)
class ComplexMatrix:
    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        self.re = np.asarray(self.re, dtype=np.float64)
        self.im = np.asarray(self.im, dtype=np.float64)
        if self.re.ndim != 2 or self.re.shape != self.im.shape:
            raise ShapeError(
                f"re and im must be 2-D grids of equal shape, got {self.re.shape} and {self.im.shape}"
            )

    @property
    def shape(self):
        return self.re.shape

    @property
    def rows(self):
        return self.re.shape[0]

    @property
    def cols(self):
        return self.re.shape[1]

    @classmethod
    def zeros(cls, rows, cols):
        return cls(np.zeros((rows, cols)), np.zeros((rows, cols)))

    @classmethod
    def from_real(cls, values):
        values = np.asarray(values, dtype=np.float64)
        return cls(values.copy(), np.zeros_like(values))

    @classmethod
    def from_pairs(cls, rows):
        """Build from nested lists of ``(re, im)`` tuples (or python complex)."""
        re = [[complex(v).real for v in row] for row in rows]
        im = [[complex(v).imag for v in row] for row in rows]
        return cls(np.array(re, dtype=np.float64), np.array(im, dtype=np.float64))

    def copy(self):
        return ComplexMatrix(self.re.copy(), self.im.copy())

    def equals(self, other):
        """Exact (bitwise-value) equality of both planes."""
        return (
            self.shape == other.shape
            and np.array_equal(self.re, other.re)
            and np.array_equal(self.im, other.im)
        )

    def __repr__(self):
        return f"ComplexMatrix(shape={self.shape})"


def _check_same_shape(a, b, op):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def cmul(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    """Matrix product via four real products:
    ``(aR bR - aI bI) + i (aR bI + aI bR)``."""
    if a.cols != b.rows:
        raise ShapeError(f"cmul: cannot multiply {a.shape} by {b.shape}")
    # identically-zero planes (real-only / imag-only pruned weights) contribute nothing
    a_im = a.im.any()
    b_im = b.im.any()
    if not (a_im or b_im):
        return ComplexMatrix(matmul(a.re, b.re), np.zeros((a.rows, b.cols)))
    if not a.re.any():
        if not b_im:
            return ComplexMatrix(np.zeros((a.rows, b.cols)), matmul(a.im, b.re))
        return ComplexMatrix(-matmul(a.im, b.im), matmul(a.im, b.re))
    if not a_im:
        return ComplexMatrix(matmul(a.re, b.re), matmul(a.re, b.im))
    re = matmul(a.re, b.re) - matmul(a.im, b.im)
    im = matmul(a.re, b.im) + matmul(a.im, b.re)
    return ComplexMatrix(re, im)


def hadamard(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    _check_same_shape(a, b, "hadamard")
    return ComplexMatrix(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re)


def amplitude(a: ComplexMatrix) -> np.ndarray:
    return np.hypot(a.re, a.im)


def phase(a: ComplexMatrix) -> np.ndarray:
    """Elementwise angle in (-pi, pi]; the angle of an exact zero is 0."""
    ph = np.arctan2(a.im, a.re)
    ph[(a.re == 0.0) & (a.im == 0.0)] = 0.0
    # atan2(-0.0, x<0) is -pi; fold onto the closed end of the interval
    ph[ph == -np.pi] = np.pi
    return ph


def transpose(a: ComplexMatrix) -> ComplexMatrix:
    return ComplexMatrix(np.ascontiguousarray(a.re.T), np.ascontiguousarray(a.im.T))


def adjoint(a: ComplexMatrix) -> ComplexMatrix:
    """Conjugate transpose."""
    return ComplexMatrix(np.ascontiguousarray(a.re.T), -np.ascontiguousarray(a.im.T))


def add(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    _check_same_shape(a, b, "add")
    return ComplexMatrix(a.re + b.re, a.im + b.im)


def scale(a: ComplexMatrix, s) -> ComplexMatrix:
    """Multiply by a scalar; ``s`` may be real or a python complex."""
    s = complex(s)
    if s.imag == 0.0:
        return ComplexMatrix(a.re * s.real, a.im * s.real)
    return ComplexMatrix(a.re * s.real - a.im * s.imag, a.re * s.imag + a.im * s.real)


def from_polar(amp, ph) -> ComplexMatrix:
    amp = np.asarray(amp, dtype=np.float64)
    ph = np.asarray(ph, dtype=np.float64)
    if amp.shape != ph.shape:
        raise ShapeError(f"from_polar: shape mismatch {amp.shape} vs {ph.shape}")
    return ComplexMatrix(amp * np.cos(ph), amp * np.sin(ph))
