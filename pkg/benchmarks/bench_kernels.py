"""Timing of the numba kernels against their numpy fallbacks.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 20] [--quick]

Both backends are called directly, so the env flag is irrelevant here. The
first numba call (compilation or cache load) is excluded from the timings.
"""

import argparse
import time

import numpy as np

from grasspinch import kernels
from grasspinch.jets import basis

# (label, m, order, rows, inner, cols): shapes seen in second-covariant jets
JET_CASES = [
    ("curve order 4, 4x3 @ 3x3", 1, 4, 4, 3, 3),
    ("surface order 4, 4x3 @ 3x3", 2, 4, 4, 3, 3),
    ("4-fold order 4, 6x5 @ 5x5", 4, 4, 6, 5, 5),
]
# (label, m, n, K)
HOL_CASES = [
    ("curve fiber, n=4, 64 vectors", 1, 4, 64),
    ("4-fold fiber, n=6, 256 vectors", 4, 6, 256),
]


def _best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def _crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def run(repeat: int = 20, quick: bool = False) -> list:
    """Rows (kernel, case, numpy seconds, numba seconds, max abs difference)."""
    rng = np.random.default_rng(0)
    rows = []
    jet_cases = JET_CASES[:1] if quick else JET_CASES
    hol_cases = HOL_CASES[:1] if quick else HOL_CASES
    for label, m, order, r, k, c in jet_cases:
        b = basis(m, order)
        A, B = _crandn(rng, b.size, r, k), _crandn(rng, b.size, k, c)
        args = (b.mul_a, b.mul_b, b.mul_c, b.size)
        ref = kernels._jet_matmul_py(A, B, *args)
        row = ["jet_matmul", label, _best(lambda: kernels._jet_matmul_py(A, B, *args), repeat), None, None]
        if kernels.HAVE_NUMBA:
            diff = np.abs(kernels._jet_matmul_nb(A, B, *args) - ref).max()
            row[3:] = [_best(lambda: kernels._jet_matmul_nb(A, B, *args), repeat), float(diff)]
        rows.append(row)
    for label, m, n, K in hol_cases:
        Y, S = _crandn(rng, m, n * n), _crandn(rng, m, m, n * n)
        S = S + S.transpose(1, 0, 2)
        us = _crandn(rng, K, m)
        us /= np.linalg.norm(us, axis=1, keepdims=True)
        ref = kernels._hol_batch_py(Y, S, us)
        row = ["hol_batch", label, _best(lambda: kernels._hol_batch_py(Y, S, us), repeat), None, None]
        if kernels.HAVE_NUMBA:
            diff = np.abs(kernels._hol_batch_nb(Y, S, us) - ref).max()
            row[3:] = [_best(lambda: kernels._hol_batch_nb(Y, S, us), repeat), float(diff)]
        rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--quick", action="store_true", help="one case per kernel")
    args = ap.parse_args(argv)
    rows = run(args.repeat, args.quick)
    print(f"{'kernel':11s} {'case':32s} {'numpy [us]':>11s} {'numba [us]':>11s} {'speedup':>8s} {'max diff':>9s}")
    for name, label, t_np, t_nb, diff in rows:
        if t_nb is None:
            print(f"{name:11s} {label:32s} {t_np * 1e6:11.1f} {'n/a':>11s}")
            continue
        print(f"{name:11s} {label:32s} {t_np * 1e6:11.1f} {t_nb * 1e6:11.1f} {t_np / t_nb:8.2f} {diff:9.1e}")


if __name__ == "__main__":
    main()
