import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from grasspinch.grassmann import (
    AmbientTangent,
    BasePointMismatch,
    GrassmannPoint,
    curvature_Gr,
    curvature_Gr_ambient,
    curvature_Q,
    frame_curve,
    hol_sectional,
    hol_sectional_ambient,
    metric,
    random_point,
    random_tangent,
    random_unitary,
)

grassmannians = st.tuples(st.integers(2, 6), st.integers(1, 5)).filter(lambda t: t[1] < t[0])
seeds = st.integers(0, 2**32 - 1)


def test_hol_extremes_closed_form():
    # rank-one directions reach the maximum 2; the normalized identity block gives 2/min(p, q)
    x = GrassmannPoint.standard(5, 2)
    E = np.zeros((3, 2), dtype=complex)
    E[0, 0] = 1.0
    assert hol_sectional(AmbientTangent(x, E)) == pytest.approx(2.0, abs=1e-14)
    D = np.zeros((3, 2), dtype=complex)
    D[0, 0] = D[1, 1] = 1 / np.sqrt(2)
    assert hol_sectional(AmbientTangent(x, D)) == pytest.approx(1.0, abs=1e-14)


@given(grassmannians, seeds)
def test_hol_range(dims, seed):
    n, p = dims
    rng = np.random.default_rng(seed)
    U = random_tangent(random_point(n, p, rng), rng)
    h = hol_sectional(U)
    assert 2.0 / min(p, n - p) - 1e-12 <= h <= 2.0 + 1e-12


def test_hol_rejects_non_unit():
    x = GrassmannPoint.standard(3, 1)
    with pytest.raises(ValueError):
        hol_sectional(AmbientTangent(x, np.array([[2.0], [0.0]], dtype=complex)))


@given(grassmannians, seeds)
def test_metric_from_projector_velocity(dims, seed):
    # independent route: |dP/ds|_F^2 = 2 h(U, U) along a real parameter s
    n, p = dims
    rng = np.random.default_rng(seed)
    x = random_point(n, p, rng)
    U = random_tangent(x, rng, unit=False)
    h = 1e-6
    dP = (frame_curve(x, U, h).projector - frame_curve(x, U, -h).projector) / (2 * h)
    assert np.linalg.norm(dP) ** 2 == pytest.approx(2 * metric(U, U).real, rel=1e-6)


@given(grassmannians, seeds)
def test_curvature_gauge_covariance(dims, seed):
    n, p = dims
    rng = np.random.default_rng(seed)
    x = random_point(n, p, rng)
    U, V, Z = (random_tangent(x, rng) for _ in range(3))
    WS, WQ = random_unitary(p, rng), random_unitary(n - p, rng)
    R = curvature_Gr(U, V, Z).regauge(WS, WQ)
    Rg = curvature_Gr(U.regauge(WS, WQ), V.regauge(WS, WQ), Z.regauge(WS, WQ))
    assert np.allclose(R.mat, Rg.mat, atol=1e-12)


@given(grassmannians, seeds)
def test_frame_and_ambient_curvature_agree(dims, seed):
    n, p = dims
    rng = np.random.default_rng(seed)
    x = random_point(n, p, rng)
    U, V, Z = (random_tangent(x, rng) for _ in range(3))
    amb = curvature_Gr_ambient(U.ambient(), V.ambient(), Z.ambient())
    assert np.allclose(curvature_Gr(U, V, Z).ambient(), amb, atol=1e-12)
    assert hol_sectional_ambient(U.ambient()) == pytest.approx(hol_sectional(U), abs=1e-12)


@given(grassmannians, seeds)
def test_quotient_curvature_is_nonnegative(dims, seed):
    # R^Q(U, Ubar) = U U^H is positive semidefinite (Griffiths positivity of Q)
    n, p = dims
    rng = np.random.default_rng(seed)
    U = random_tangent(random_point(n, p, rng), rng)
    assert np.linalg.eigvalsh(curvature_Q(U, U)).min() > -1e-12


def test_base_point_mismatch():
    U = random_tangent(random_point(4, 2, 0), 1)
    V = random_tangent(random_point(4, 2, 2), 3)
    with pytest.raises(BasePointMismatch):
        metric(U, V)
