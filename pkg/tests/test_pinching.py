import numpy as np
import pytest

from grasspinch import catalog
from grasspinch.flatness import point_plan
from grasspinch.pinching import (
    POLARIZATION_CONSTANT,
    SearchPlan,
    VerdictConfig,
    sigma_shape_residual,
    lambda_chain,
    min_hol,
    parallelism_norm,
    random_chart_samples,
    second_covariant_identity,
    pinching_verdict,
)
from grasspinch.submanifold import ORDER_SECOND_COVARIANT, LocalGeometry

SMALL = VerdictConfig(search=SearchPlan(grid=7, fiber=6, refine=3), density=2, directions=2, identity_samples=5)


def test_search_plan_doubling_is_nested():
    p = SearchPlan(grid=7).doubled()
    assert p.grid == 13 and p.fiber == 32


def test_min_hol_weighted_curve_below_constant_curvature():
    # weights (1, 1, 1, 1) flatten the middle of the cubic: curvature dips to -2 at the origin
    r = min_hol(catalog.get("weighted_veronese:3,1"), SearchPlan(grid=9, refine=3))
    assert r.min_hol == pytest.approx(-2.0, abs=1e-6)
    assert abs(r.z[0]) < 1e-3 or r.chart == 1


def test_min_hol_keeps_samples():
    r = min_hol(catalog.veronese(2), SearchPlan(grid=3, refine=0), keep_samples=True)
    assert len(r.samples) == 2 * 9
    assert all(abs(h - 1.0) < 1e-10 for *_, h in r.samples)


def test_parallelism_polarization_bound():
    f = catalog.veronese(3)
    res = parallelism_norm(f, point_plan(f, density=2))
    assert res.max_norm == pytest.approx(2 / np.sqrt(3), abs=1e-9)
    assert res.polarization_bound == pytest.approx(POLARIZATION_CONSTANT * res.max_norm)
    assert res.max_frobenius >= res.max_norm - 1e-12


@pytest.mark.parametrize("ident", ["veronese:2", "veronese:3", "weighted_veronese:3,1", "segre"])
def test_pointwise_second_covariant_identity(ident):
    f = catalog.get(ident)
    for chart, z, u in random_chart_samples(f, 4, 1):
        e = second_covariant_identity(f, z, u, chart)
        assert e.residual < 1e-9 * max(1.0, abs(e.rhs))


def test_second_covariant_terms_cancel_on_cubic():
    # both right-hand terms are +-4/3; the left side vanishes on this homogeneous curve
    f = catalog.veronese(3)
    e = second_covariant_identity(f, np.array([0.2 - 0.4j]), np.ones(1))
    curv = 3.0 / f.q * (e.sigma_sq - f.q * e.shape_sq)
    assert curv == pytest.approx(-4.0 / 3.0, abs=1e-10)
    assert e.nabla_sq == pytest.approx(4.0 / 3.0, abs=1e-10)
    assert abs(e.lhs) < 1e-10 and e.residual < 1e-10


def test_second_covariant_identity_is_nontrivial_off_homogeneous():
    f = catalog.get("weighted_veronese:3,1")
    e = second_covariant_identity(f, np.array([0.1 + 0.2j]), np.ones(1))
    assert abs(e.lhs) > 1.0


def test_trace_bound_and_chain():
    f = catalog.veronese(2)
    G = LocalGeometry(f, [0.3j], ORDER_SECOND_COVARIANT)
    r = sigma_shape_residual(f, G.z, np.ones(1), geom=G)
    assert r.residual < 1e-12 and r.bound_holds
    lc = lambda_chain(f, G.z, np.ones(1), geom=G)
    assert lc.worst_slack > -1e-6
    assert abs(lc.slacks["sigmaVsThreshold"]) < 1e-3
    r3 = sigma_shape_residual(catalog.veronese(3), np.array([0.3j]), np.ones(1))
    assert r3.residual > 0.1


def test_verdict_negative_control():
    v = pinching_verdict(catalog.get("perturbed"), SMALL)
    assert v.status == "hypothesis-not-met"
    assert v.min_hol is None and v.agrees is None
    assert v.headline().startswith("verdict: hypothesis not met")


@pytest.mark.parametrize("ident,pinched", [("veronese:2", True), ("veronese:4", False), ("tensor_embedding:2", True)])
def test_verdict_biconditional(ident, pinched):
    v = pinching_verdict(catalog.get(ident), SMALL)
    assert v.status == "pass"
    assert v.pinched is pinched and v.parallel is pinched
    assert v.headline().startswith("verdict:")
    assert "biconditional holds" in v.headline()
