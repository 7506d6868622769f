import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from grasspinch.jets import TaylorJet, basis, holomorphic_fd_jet, polynomial_jet, wirtinger_fd

from conftest import crandn


def _conj_variable_jet(z0, order):
    # the jets of z and zbar at z0 (m = 1)
    b = basis(1, order)
    z = np.zeros((b.size, 1, 1), dtype=complex)
    zb = np.zeros_like(z)
    z[0] = z0
    zb[0] = np.conj(z0)
    z[b.index[(1, 0)]] = 1.0
    zb[b.index[(0, 1)]] = 1.0
    return TaylorJet(b, z), TaylorJet(b, zb)


@pytest.mark.parametrize("z0", [0.0, 0.3 - 0.4j, 1.7 + 0.2j])
def test_inverse_matches_closed_form_mixed_derivative(z0):
    # f = 1 / (1 + z zbar): d_z d_zbar f = (s - 1) / (1 + s)^3 with s = |z|^2
    z, zb = _conj_variable_jet(z0, 3)
    one = TaylorJet.constant(np.eye(1), 1, 3)
    f = (one + z @ zb).inv()
    s = abs(z0) ** 2
    assert f.value[0, 0] == pytest.approx(1 / (1 + s))
    assert f.derivative((1,), (0,))[0, 0] == pytest.approx(-np.conj(z0) / (1 + s) ** 2)
    assert f.derivative((1,), (1,))[0, 0] == pytest.approx((s - 1) / (1 + s) ** 3)


def _random_jet(rng, m, order, r, c):
    b = basis(m, order)
    return TaylorJet(b, crandn(rng, b.size, r, c))


@given(st.integers(1, 2), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_adjoint_reverses_products(m, order, seed):
    rng = np.random.default_rng(seed)
    A = _random_jet(rng, m, order, 2, 3)
    B = _random_jet(rng, m, order, 3, 2)
    lhs = (A @ B).H
    rhs = B.H @ A.H
    assert np.allclose(lhs.coeffs, rhs.coeffs, atol=1e-12)


@given(st.integers(1, 2), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_inverse_is_two_sided(m, order, seed):
    rng = np.random.default_rng(seed)
    A = _random_jet(rng, m, order, 3, 3)
    A.coeffs[0] += 4 * np.eye(3)
    eye = TaylorJet.constant(np.eye(3), m, order)
    assert np.allclose((A.inv() @ A).coeffs, eye.coeffs, atol=1e-10)
    assert np.allclose((A @ A.inv()).coeffs, eye.coeffs, atol=1e-10)


@given(st.integers(1, 2), st.integers(2, 3), st.integers(0, 2**32 - 1))
def test_leibniz_rule(m, order, seed):
    rng = np.random.default_rng(seed)
    A = _random_jet(rng, m, order, 2, 2)
    B = _random_jet(rng, m, order, 2, 2)
    for var in range(2 * m):
        lhs = (A @ B).d(var)
        rhs = A.d(var) @ B.truncate(order - 1) + A.truncate(order - 1) @ B.d(var)
        assert np.allclose(lhs.coeffs, rhs.coeffs, atol=1e-10)


def test_polynomial_jet_against_finite_differences(rng):
    terms = [(crandn(rng, 3, 2), (2, 1)), (crandn(rng, 3, 2), (0, 3)), (crandn(rng, 3, 2), (1, 0))]
    z0 = np.array([0.2 + 0.1j, -0.3 + 0.2j])
    exact = polynomial_jet(terms, z0, 3, (3, 2))

    def F(z):
        return sum(C * z[0] ** e[0] * z[1] ** e[1] for C, e in terms)

    fd = holomorphic_fd_jet(F, z0, 2, 1e-4)
    for alpha in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]:
        assert np.allclose(exact.derivative(alpha), fd.derivative(alpha), atol=1e-6)


def test_wirtinger_fd_separates_holomorphic_parts():
    f = lambda z: np.array([z[0] ** 2 + 3 * np.conj(z[0])])
    z0 = np.array([0.4 - 0.3j])
    d = wirtinger_fd(f, z0, np.ones(1))
    db = wirtinger_fd(f, z0, np.ones(1), bar=True)
    assert d[0] == pytest.approx(2 * z0[0], abs=1e-8)
    assert db[0] == pytest.approx(3.0, abs=1e-8)


def test_basis_prefix_property():
    small, big = basis(2, 2), basis(2, 3)
    assert np.array_equal(big.exps[: small.size], small.exps)
