"""Real matrix-multiply kernels.

Two interchangeable backends:

* ``numba`` (default): a cache-blocked triple loop compiled with ``@njit``.
  The reduction over ``k`` for each output element runs in increasing order,
  so results are bit-identical from run to run and host to host.
* ``numpy``: ``np.matmul``. Faster on most machines (it calls BLAS) but the
  summation order is whatever the linked BLAS picks.

The backend is chosen at import time from ``PHASEPRUNE_BACKEND``
(``numba`` or ``numpy``). Setting ``NUMBA_DISABLE_JIT=1`` or failing to
import numba also selects ``numpy``. ``set_backend`` switches at runtime.
"""

import os

import numpy as np

try:
    import numba
    from numba import njit

    HAS_NUMBA = not numba.config.DISABLE_JIT
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    HAS_NUMBA = False

# rows of `a` handled together per pass over a row of `b`
_ROW_UNROLL = 4
_BLOCK_K = 128
_BLOCK_J = 256


if HAS_NUMBA:

    @njit(cache=True, boundscheck=False, nogil=True)
    def _matmul_blocked(a, b, out, bk, bj):
        n, kdim = a.shape
        m = b.shape[1]
        out[:] = 0.0
        n4 = n - n % 4
        for j0 in range(0, m, bj):
            j1 = min(j0 + bj, m)
            w = j1 - j0
            for k0 in range(0, kdim, bk):
                k1 = min(k0 + bk, kdim)
                for i in range(0, n4, 4):
                    o0 = out[i, j0:j1]
                    o1 = out[i + 1, j0:j1]
                    o2 = out[i + 2, j0:j1]
                    o3 = out[i + 3, j0:j1]
                    for k in range(k0, k1):
                        a0 = a[i, k]
                        a1 = a[i + 1, k]
                        a2 = a[i + 2, k]
                        a3 = a[i + 3, k]
                        brow = b[k, j0:j1]
                        for j in range(w):
                            bv = brow[j]
                            o0[j] += a0 * bv
                            o1[j] += a1 * bv
                            o2[j] += a2 * bv
                            o3[j] += a3 * bv
                for i in range(n4, n):
                    orow = out[i, j0:j1]
                    for k in range(k0, k1):
                        aik = a[i, k]
                        brow = b[k, j0:j1]
                        for j in range(w):
                            orow[j] += aik * brow[j]
        return out


def matmul_numba(a, b):
    """``a @ b`` via the blocked numba kernel (float64, C-contiguous)."""
    if not HAS_NUMBA:
        raise RuntimeError("numba backend unavailable")
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    out = np.empty((a.shape[0], b.shape[1]), dtype=np.float64)
    if a.shape[1] == 0:
        out[:] = 0.0
        return out
    return _matmul_blocked(a, b, out, _BLOCK_K, _BLOCK_J)


def matmul_numpy(a, b):
    return np.matmul(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))


_BACKENDS = {"numba": matmul_numba, "numpy": matmul_numpy}


def _default_backend():
    name = os.environ.get("PHASEPRUNE_BACKEND", "numba").strip().lower()
    if name not in _BACKENDS:
        raise ValueError(f"PHASEPRUNE_BACKEND must be one of {sorted(_BACKENDS)}, got {name!r}")
    if name == "numba" and not HAS_NUMBA:
        return "numpy"
    return name


_backend = _default_backend()


def get_backend():
    return _backend


def set_backend(name):
    """Select the matmul backend for this process; returns the previous one."""
    global _backend
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choose from {sorted(_BACKENDS)}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend unavailable")
    prev, _backend = _backend, name
    return prev


def matmul(a, b):
    """Real ``a @ b`` with the active backend. Shapes must already agree."""
    return _BACKENDS[_backend](a, b)
