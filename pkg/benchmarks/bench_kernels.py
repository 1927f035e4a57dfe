"""Compare the numba and numpy matmul backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Times the raw real kernel and a complex forward pass at the shapes the
MNIST experiments use, and checks the two backends agree.
"""

import argparse
import time

import numpy as np

from phaseprune import _kernels
from phaseprune.cmatrix import ComplexMatrix, cmul
from phaseprune.cvnn import forward, init_model

SHAPES = [
    ("hidden 100, batch", (100, 785, 100)),
    ("hidden 512, batch", (512, 785, 100)),
    ("hidden 100, test set", (100, 785, 10000)),
    ("output 10 <- 512, test", (10, 512, 10000)),
]


def best_time(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.HAS_NUMBA:
        raise SystemExit("numba is not available; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'case':28s} {'numba s':>9s} {'numpy s':>9s} {'numba GF/s':>11s} {'numpy GF/s':>11s} {'max |diff|':>11s}")
    for label, (n, k, m) in SHAPES:
        a, b = rng.normal(size=(n, k)), rng.normal(size=(k, m))
        flops = 2.0 * n * k * m
        t_nb = best_time(lambda: _kernels.matmul_numba(a, b), args.repeat)
        t_np = best_time(lambda: _kernels.matmul_numpy(a, b), args.repeat)
        diff = np.max(np.abs(_kernels.matmul_numba(a, b) - _kernels.matmul_numpy(a, b)))
        print(f"{label:28s} {t_nb:9.4f} {t_np:9.4f} {flops / t_nb / 1e9:11.2f} {flops / t_np / 1e9:11.2f} {diff:11.2e}")

    model = init_model([785, 100, 10], 0)
    x = ComplexMatrix(rng.uniform(0, 1, (785, 2000)), rng.uniform(0, 1, (785, 2000)))
    w = model.weights[0]
    print()
    for name in ("numba", "numpy"):
        prev = _kernels.set_backend(name)
        try:
            t_cmul = best_time(lambda: cmul(w, x), args.repeat)
            t_fwd = best_time(lambda: forward(model, x), args.repeat)
        finally:
            _kernels.set_backend(prev)
        print(f"{name:6s} cmul 100x785 @ 785x2000: {t_cmul:.4f}s   forward 785-100-10 on 2000 cols: {t_fwd:.4f}s")


if __name__ == "__main__":
    main()
