import numpy as np
import pytest

from grasspinch import catalog
from grasspinch.immersion import Immersion
from grasspinch.integration import (
    CoveringError,
    PhaseVarianceError,
    build_um_plan,
    check_covering,
    closed_form_volume,
    balance_integrals,
    first_covariant_T,
    grassmannian_volume,
    integrate,
    jackknife,
    ros_integral,
    second_covariant_T,
)


def test_jackknife_of_constant_has_zero_error():
    est, se = jackknife([2.0, 2.0, 2.0, 2.0])
    assert est == 2.0 and se == 0.0


def test_jackknife_matches_standard_error_of_mean():
    x = np.array([1.0, 2.0, 4.0, 7.0])
    est, se = jackknife(x)
    assert est == pytest.approx(x.mean())
    assert se == pytest.approx(x.std(ddof=1) / np.sqrt(len(x)))


def test_grassmannian_volume_closed_forms():
    assert grassmannian_volume(1, 1) == pytest.approx(np.pi)
    assert grassmannian_volume(1, 2) == pytest.approx(np.pi**2 / 2)
    assert grassmannian_volume(2, 2) == pytest.approx(np.pi**4 / 12)
    assert grassmannian_volume(2, 1) == pytest.approx(grassmannian_volume(1, 2))


@pytest.mark.parametrize("ident", ["veronese:1", "veronese:2", "tensor_embedding:2"])
def test_curve_volume(ident):
    f = catalog.get(ident)
    vol, se = build_um_plan(f, base_density=8).volume()
    assert vol == pytest.approx(closed_form_volume(f), rel=1e-3)


@pytest.mark.parametrize("ident", ["segre", "pluecker", "linear:2,3"])
def test_surface_volume(ident):
    f = catalog.get(ident)
    vol, se = build_um_plan(f, base_density=4, fiber_samples=1, replicates=3).volume()
    assert vol == pytest.approx(closed_form_volume(f), rel=1e-8)


def test_first_covariant_integrand_is_rejected():
    f = catalog.get("weighted_veronese:3,1")
    plan = build_um_plan(f, base_density=4, replicates=2)
    with pytest.raises(PhaseVarianceError):
        ros_integral(f, first_covariant_T, plan)


def test_vanishing_integral_on_nonhomogeneous_curve():
    f = catalog.get("weighted_veronese:3,1")
    est = ros_integral(f, second_covariant_T, build_um_plan(f, base_density=8))
    assert est.consistent_with_zero()
    assert est.abs_mass > 1.0   # integrand is far from zero pointwise


def test_balance_on_cubic():
    bal = balance_integrals(catalog.veronese(3), build_um_plan(catalog.veronese(3), base_density=6))
    assert not bal.trivial and not bal.inconclusive
    assert bal.residual < 0.02
    assert bal.curvature_term.estimate.real == pytest.approx(-8 * np.pi, rel=1e-2)


def test_single_chart_curve_is_not_covered():
    f = catalog.veronese(2)
    g = Immersion("half", f.n, f.p, f.m, f.terms, atlas=f.atlas[:1], chart_radius=1.0)
    with pytest.raises(CoveringError):
        check_covering(g)


def test_integrals_do_not_depend_on_worker_count(monkeypatch):
    f = catalog.veronese(3)
    plan = build_um_plan(f, base_density=4, replicates=2)
    monkeypatch.setenv("GRASSPINCH_THREADS", "1")
    a = integrate(f, {"t": second_covariant_T}, plan)["t"]
    monkeypatch.setenv("GRASSPINCH_THREADS", "3")
    b = integrate(f, {"t": second_covariant_T}, plan)["t"]
    assert a.replicates == b.replicates
