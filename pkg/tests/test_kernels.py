import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from grasspinch import kernels
from grasspinch.jets import basis

from conftest import crandn

pytestmark = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")


@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_jet_matmul_paths_agree(m, order, k, seed):
    rng = np.random.default_rng(seed)
    b = basis(m, order)
    A = crandn(rng, b.size, 3, k)
    B = crandn(rng, b.size, k, 2)
    args = (b.mul_a, b.mul_b, b.mul_c, b.size)
    ref = kernels._jet_matmul_py(A, B, *args)
    jit = kernels._jet_matmul_nb(A, B, *args)
    assert np.allclose(ref, jit, atol=1e-12)


@given(st.integers(1, 4), st.integers(2, 5), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_hol_batch_paths_agree(m, n, K, seed):
    rng = np.random.default_rng(seed)
    Y = crandn(rng, m, n * n)
    S = crandn(rng, m, m, n * n)
    us = crandn(rng, K, m)
    ref = kernels._hol_batch_py(Y, S, us)
    jit = kernels._hol_batch_nb(Y, S, us)
    assert np.allclose(ref, jit, rtol=1e-12, atol=1e-10)


def test_hol_batch_rank_one_value():
    # a single rank-one unit tangent has Hol^Gr = 2; with sigma = 0 that is the result
    n = 3
    U = np.zeros((n, n), dtype=complex)
    U[2, 0] = 1.0
    out = kernels.hol_batch(U.reshape(1, -1), np.zeros((1, 1, n * n)), np.ones((1, 1)))
    assert out[0] == pytest.approx(2.0)


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, GRASSPINCH_DISABLE_JIT="1")
    out = subprocess.run([sys.executable, "-c", "from grasspinch import kernels; print(kernels.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
