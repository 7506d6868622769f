import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from grasspinch.linalg import (
    DegenerateFrameError,
    JetScalar,
    adjoint,
    complete_frame,
    hermitian_sqrt_inv,
    max_hermitian_eigenpair,
    orthonormal_basis_for,
    orthonormalize,
)

from conftest import crandn

dims = st.tuples(st.integers(2, 7), st.integers(1, 6)).filter(lambda t: t[1] < t[0])


@given(dims, st.integers(0, 2**32 - 1))
def test_orthonormalize_spans_same_plane(shape, seed):
    n, p = shape
    rng = np.random.default_rng(seed)
    A = crandn(rng, n, p)
    Q = orthonormalize(A)
    assert np.allclose(adjoint(Q) @ Q, np.eye(p), atol=1e-12)
    # same column space: projectors agree
    PA = A @ np.linalg.solve(adjoint(A) @ A, adjoint(A))
    assert np.allclose(Q @ adjoint(Q), PA, atol=1e-10)


def test_orthonormalize_rejects_rank_deficient():
    A = np.ones((4, 2), dtype=complex)
    with pytest.raises(DegenerateFrameError):
        orthonormalize(A)


@given(dims, st.integers(0, 2**32 - 1))
def test_complete_frame_is_unitary(shape, seed):
    n, p = shape
    S = orthonormalize(crandn(np.random.default_rng(seed), n, p))
    Qf = complete_frame(S)
    W = np.hstack([S, Qf])
    assert np.allclose(adjoint(W) @ W, np.eye(n), atol=1e-12)


def test_max_eigenpair_matches_eigh(rng):
    A = crandn(rng, 5, 5)
    B = A + adjoint(A)
    lam, v = max_hermitian_eigenpair(B)
    assert lam == pytest.approx(np.linalg.eigvalsh(B)[-1], abs=1e-12)
    assert np.allclose(B @ v, lam * v, atol=1e-10)


def test_hermitian_sqrt_inv(rng):
    A = crandn(rng, 4, 4)
    G = A @ adjoint(A) + np.eye(4)
    R = hermitian_sqrt_inv(G)
    assert np.allclose(R @ G @ R, np.eye(4), atol=1e-10)


def test_orthonormal_basis_for_induced_metric(rng):
    A = crandn(rng, 3, 3)
    g = A @ adjoint(A) + 0.5 * np.eye(3)
    E = orthonormal_basis_for(g)
    assert np.allclose(adjoint(E) @ g.T @ E, np.eye(3), atol=1e-12)


def test_jet_scalar_product_rule():
    z = np.array([0.3 + 0.1j, -0.2 + 0.5j])
    x, y = JetScalar.variables(z)
    f = x * x * y + 3.0 * y
    assert f.value == pytest.approx(z[0] ** 2 * z[1] + 3 * z[1])
    assert f.partials[0] == pytest.approx(2 * z[0] * z[1])
    assert f.partials[1] == pytest.approx(z[0] ** 2 + 3)
