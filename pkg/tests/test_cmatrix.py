import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from phaseprune._kernels import matmul_numba, matmul_numpy
from phaseprune.cmatrix import (
    ComplexMatrix,
    ShapeError,
    add,
    adjoint,
    amplitude,
    cmul,
    from_polar,
    hadamard,
    phase,
    scale,
    transpose,
)

from conftest import random_cm, to_pylists


def brute_cmul(a, b):
    """Triple loop over python complex scalars."""
    A, B = to_pylists(a), to_pylists(b)
    n, k, m = len(A), len(B), len(B[0])
    out = [[0j] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            acc = 0j
            for t in range(k):
                acc += A[i][t] * B[t][j]
            out[i][j] = acc
    return out


def assert_matches(cm, ref, rtol=1e-12):
    ref_re = np.array([[z.real for z in row] for row in ref])
    ref_im = np.array([[z.imag for z in row] for row in ref])
    scale_ = max(1.0, np.abs(ref_re).max(), np.abs(ref_im).max())
    assert np.max(np.abs(cm.re - ref_re)) <= rtol * scale_
    assert np.max(np.abs(cm.im - ref_im)) <= rtol * scale_


class TestCmul:
    def test_conjugate_pair(self, backend):
        out = cmul(ComplexMatrix.from_pairs([[1 + 1j]]), ComplexMatrix.from_pairs([[1 - 1j]]))
        assert out.re[0, 0] == 2.0 and out.im[0, 0] == 0.0

    def test_identity(self, backend):
        rng = np.random.default_rng(0)
        m = random_cm(rng, 3, 5)
        eye = ComplexMatrix(np.eye(3), np.zeros((3, 3)))
        assert cmul(eye, m).equals(m)

    def test_seed7_against_loop_oracle(self, backend):
        rng = np.random.default_rng(7)
        a, b = random_cm(rng, 5, 4), random_cm(rng, 4, 3)
        out = cmul(a, b)
        assert out.shape == (5, 3)
        assert_matches(out, brute_cmul(a, b))

    @pytest.mark.parametrize(
        "seed,shape",
        [(s, (1, 1, 1)) for s in range(5)]
        + [(s, (7, 13, 5)) for s in range(10)]
        + [(s, (33, 257, 6)) for s in range(3)]
        + [(0, (9, 130, 300))],
    )
    def test_random_against_loop_oracle(self, backend, seed, shape):
        n, k, m = shape
        rng = np.random.default_rng(seed)
        a, b = random_cm(rng, n, k), random_cm(rng, k, m)
        assert_matches(cmul(a, b), brute_cmul(a, b))

    def test_shape_error_names_both(self):
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(4, 2\)"):
            cmul(ComplexMatrix.zeros(2, 3), ComplexMatrix.zeros(4, 2))

    def test_associative(self, backend):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            a, b, c = (random_cm(rng, 4, 4) for _ in range(3))
            left, right = cmul(a, cmul(b, c)), cmul(cmul(a, b), c)
            assert np.max(np.abs(left.re - right.re)) <= 1e-10
            assert np.max(np.abs(left.im - right.im)) <= 1e-10


class TestKernels:
    def test_numba_matches_numpy(self):
        rng = np.random.default_rng(3)
        for n, k, m in [(1, 1, 1), (3, 0, 4), (5, 785, 3), (130, 300, 517), (4, 129, 257)]:
            a, b = rng.normal(size=(n, k)), rng.normal(size=(k, m))
            np.testing.assert_allclose(matmul_numba(a, b), matmul_numpy(a, b), rtol=1e-12, atol=1e-12)

    def test_numba_kernel_is_deterministic(self):
        rng = np.random.default_rng(4)
        a, b = rng.normal(size=(64, 300)), rng.normal(size=(300, 90))
        first = matmul_numba(a, b)
        assert np.array_equal(first, matmul_numba(a.copy(), b.copy()))

    def test_numba_sums_in_index_order(self):
        # cancellation pattern whose result depends on summation order
        a = np.array([[1.0, 1e16, 1.0, -1e16]])
        b = np.ones((4, 1))
        expected = 0.0
        for t in range(4):
            expected += a[0, t] * b[t, 0]
        assert matmul_numba(a, b)[0, 0] == expected

    def test_non_contiguous_inputs(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=(30, 20)).T
        b = rng.normal(size=(60, 40))[::2]
        np.testing.assert_allclose(matmul_numba(a, b), a @ b, rtol=1e-12, atol=1e-12)


class TestHadamard:
    def test_trivial(self):
        out = hadamard(ComplexMatrix.from_pairs([[2]]), ComplexMatrix.from_pairs([[3j]]))
        assert (out.re[0, 0], out.im[0, 0]) == (0.0, 6.0)

    def test_ones_identity(self):
        m = random_cm(np.random.default_rng(1), 3, 4)
        assert hadamard(m, ComplexMatrix(np.ones((3, 4)), np.zeros((3, 4)))).equals(m)

    def test_seed11_against_scalar_oracle(self):
        rng = np.random.default_rng(11)
        a, b = random_cm(rng, 3, 3), random_cm(rng, 3, 3)
        A, B = to_pylists(a), to_pylists(b)
        assert_matches(hadamard(a, b), [[A[i][j] * B[i][j] for j in range(3)] for i in range(3)])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            hadamard(ComplexMatrix.zeros(2, 2), ComplexMatrix.zeros(2, 3))


class TestPolar:
    def test_three_four_five(self):
        m = ComplexMatrix.from_pairs([[3 + 4j]])
        assert amplitude(m)[0, 0] == 5.0
        assert phase(m)[0, 0] == pytest.approx(math.atan2(4, 3), abs=1e-15)
        assert phase(m)[0, 0] == pytest.approx(0.9273, abs=1e-4)

    def test_zero(self):
        m = ComplexMatrix.zeros(1, 1)
        assert amplitude(m)[0, 0] == 0.0 and phase(m)[0, 0] == 0.0

    def test_negative_zero_is_still_zero_phase(self):
        m = ComplexMatrix(np.array([[-0.0]]), np.array([[-0.0]]))
        assert phase(m)[0, 0] == 0.0

    def test_minus_one(self):
        m = ComplexMatrix.from_pairs([[-1]])
        assert amplitude(m)[0, 0] == 1.0 and phase(m)[0, 0] == math.pi
        m = ComplexMatrix(np.array([[-1.0]]), np.array([[-0.0]]))
        assert phase(m)[0, 0] == math.pi

    def test_from_polar_minus_one(self):
        m = from_polar(np.array([[1.0]]), np.array([[math.pi]]))
        assert m.re[0, 0] == -1.0 and abs(m.im[0, 0]) <= 1e-15

    def test_round_trip_seed3(self):
        m = random_cm(np.random.default_rng(3), 6, 7)
        back = from_polar(amplitude(m), phase(m))
        assert np.max(np.abs(back.re - m.re)) <= 1e-12
        assert np.max(np.abs(back.im - m.im)) <= 1e-12

    @settings(max_examples=200, deadline=None)
    @given(
        arrays(np.float64, (3, 4), elements=st.floats(-1e3, 1e3)),
        arrays(np.float64, (3, 4), elements=st.floats(-1e3, 1e3)),
    )
    def test_polar_properties(self, re, im):
        m = ComplexMatrix(re, im)
        amp, ph = amplitude(m), phase(m)
        assert np.all(amp >= 0)
        assert np.array_equal(amp == 0, (re == 0) & (im == 0))
        nz = amp > 0
        assert np.all((ph[nz] > -math.pi) & (ph[nz] <= math.pi))
        back = from_polar(amp, ph)
        tol = 1e-12 * np.maximum(1.0, amp)
        assert np.all(np.abs(back.re - re) <= tol) and np.all(np.abs(back.im - im) <= tol)


class TestPlumbing:
    def test_double_transpose(self):
        m = random_cm(np.random.default_rng(2), 3, 5)
        assert transpose(m).shape == (5, 3)
        assert transpose(transpose(m)).equals(m)

    def test_adjoint_conjugates(self):
        m = ComplexMatrix.from_pairs([[1 + 2j, 3 - 1j]])
        adj = adjoint(m)
        assert to_pylists(adj) == [[1 - 2j], [3 + 1j]]

    def test_add_and_scale(self):
        a = ComplexMatrix.from_pairs([[1 + 2j]])
        b = ComplexMatrix.from_pairs([[3 - 5j]])
        assert to_pylists(add(a, b)) == [[4 - 3j]]
        assert to_pylists(scale(a, 2)) == [[2 + 4j]]
        assert to_pylists(scale(a, 1j)) == [[-2 + 1j]]
        with pytest.raises(ShapeError):
            add(a, ComplexMatrix.zeros(2, 1))

    def test_mismatched_planes_rejected(self):
        with pytest.raises(ShapeError):
            ComplexMatrix(np.zeros((2, 2)), np.zeros((2, 3)))


@pytest.mark.parametrize("zero_a", ["re", "im", None])
@pytest.mark.parametrize("zero_b", ["re", "im", None])
def test_cmul_with_zero_planes(zero_a, zero_b):
    rng = np.random.default_rng(19)
    a, b = random_cm(rng, 4, 6), random_cm(rng, 6, 3)
    if zero_a:
        getattr(a, zero_a)[:] = 0.0
    if zero_b:
        getattr(b, zero_b)[:] = 0.0
    assert_matches(cmul(a, b), brute_cmul(a, b))
