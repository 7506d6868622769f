"""Hot numeric kernels.

Two implementations of every kernel live here: a numba ``@njit`` version and a
plain numpy version. ``GRASSPINCH_DISABLE_JIT=1`` (or a missing numba) selects
the numpy path at import time. Both paths must agree to round-off; the test
suite and ``benchmarks/bench_kernels.py`` compare them directly.
"""

import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

JIT_ENABLED = HAVE_NUMBA and os.environ.get("GRASSPINCH_DISABLE_JIT", "0") not in ("1", "true", "yes")


def _njit(func):
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True)(func)


# --------------------------------------------------------------------------
# truncated Taylor products: out[ic[t]] += A[ia[t]] @ B[ib[t]]
# --------------------------------------------------------------------------

def _jet_matmul_py(A, B, ia, ib, ic, nout):
    out = np.zeros((nout, A.shape[1], B.shape[2]), dtype=np.complex128)
    if ia.shape[0] == 0:
        return out
    prods = np.matmul(A[ia], B[ib])
    # ic is sorted, so segment sums are contiguous
    starts = np.flatnonzero(np.r_[True, ic[1:] != ic[:-1]])
    out[ic[starts]] = np.add.reduceat(prods, starts, axis=0)
    return out


def _jet_matmul_loops(A, B, ia, ib, ic, nout):
    r = A.shape[1]
    k = A.shape[2]
    c = B.shape[2]
    out = np.zeros((nout, r, c), dtype=np.complex128)
    for t in range(ia.shape[0]):
        a = A[ia[t]]
        b = B[ib[t]]
        o = ic[t]
        for i in range(r):
            for l in range(k):
                ail = a[i, l]
                if ail.real == 0.0 and ail.imag == 0.0:
                    continue
                for j in range(c):
                    out[o, i, j] += ail * b[l, j]
    return out


_jet_matmul_nb = _njit(_jet_matmul_loops)


def jet_matmul(A, B, ia, ib, ic, nout):
    """Convolution product of two matrix-valued truncated Taylor series.

    ``A`` is (Ma, r, k), ``B`` is (Mb, k, c); the index triples enumerate every
    pair of monomials whose product survives truncation.
    """
    if JIT_ENABLED:
        return _jet_matmul_nb(
            np.ascontiguousarray(A, dtype=np.complex128),
            np.ascontiguousarray(B, dtype=np.complex128),
            ia, ib, ic, nout,
        )
    return _jet_matmul_py(A, B, ia, ib, ic, nout)


# --------------------------------------------------------------------------
# batched holomorphic sectional curvature along a fiber
# --------------------------------------------------------------------------

def _hol_batch_py(Y, S, us):
    # Y: (m, N2) tangent images, S: (m, m, N2) second fundamental form,
    # us: (K, m) unit chart vectors. n x n matrices are flattened row-major.
    n = int(round(np.sqrt(Y.shape[1])))
    U = (us @ Y).reshape(-1, n, n)
    UUh = np.matmul(U, np.conj(np.transpose(U, (0, 2, 1))))
    hol_gr = 2.0 * np.einsum("kij,kji->k", UUh, UUh).real
    sig = np.einsum("ka,kb,abx->kx", us, us, S)
    return hol_gr - np.einsum("kx,kx->k", sig, np.conj(sig)).real


def _hol_batch_loops(Y, S, us):
    m = Y.shape[0]
    N2 = Y.shape[1]
    n = int(round(np.sqrt(N2)))
    K = us.shape[0]
    out = np.empty(K, dtype=np.float64)
    U = np.zeros((n, n), dtype=np.complex128)
    W = np.zeros((n, n), dtype=np.complex128)
    sig = np.zeros(N2, dtype=np.complex128)
    for t in range(K):
        U[:, :] = 0.0
        for a in range(m):
            ua = us[t, a]
            for x in range(N2):
                U[x // n, x % n] += ua * Y[a, x]
        # W = U U^H
        for i in range(n):
            for j in range(n):
                acc = 0.0 + 0.0j
                for l in range(n):
                    acc += U[i, l] * np.conj(U[j, l])
                W[i, j] = acc
        tr = 0.0
        for i in range(n):
            for j in range(n):
                tr += (W[i, j] * W[j, i]).real
        sig[:] = 0.0
        for a in range(m):
            for b in range(m):
                c = us[t, a] * us[t, b]
                for x in range(N2):
                    sig[x] += c * S[a, b, x]
        s2 = 0.0
        for x in range(N2):
            s2 += sig[x].real ** 2 + sig[x].imag ** 2
        out[t] = 2.0 * tr - s2
    return out


_hol_batch_nb = _njit(_hol_batch_loops)


def hol_batch(Y, S, us):
    """Extrinsic Hol^M(u) = Hol^Gr(f_* u) - |sigma(u, u)|^2 for each row of ``us``.

    Rows of ``us`` must already be unit vectors for the induced metric.
    """
    Y = np.ascontiguousarray(Y, dtype=np.complex128)
    S = np.ascontiguousarray(S, dtype=np.complex128)
    us = np.ascontiguousarray(np.atleast_2d(us), dtype=np.complex128)
    if JIT_ENABLED:
        return _hol_batch_nb(Y, S, us)
    return _hol_batch_py(Y, S, us)


def backend() -> str:
    return "numba" if JIT_ENABLED else "numpy"
