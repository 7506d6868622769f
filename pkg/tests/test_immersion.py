import json

import numpy as np
import pytest
from scipy.optimize import minimize

from grasspinch import catalog
from grasspinch.immersion import (
    DifferentiationConfig,
    ImmersionError,
    holomorphy_residual,
    immersion_from_dict,
    induced_metric,
    load_immersion,
    pushforward,
    validate_immersion,
)
from grasspinch.submanifold import ORDER_COVARIANT, LocalGeometry, unit_vector


def _veronese2_json():
    # hyperplane model of the conic: columns e_k - v_k(z) e_0 with v = (1, sqrt2 z, z^2)
    c0 = [[0, 0], [1, 0], [0, 1]]
    c1 = [[-np.sqrt(2), 0], [0, 0], [0, 0]]
    c2 = [[0, [-1.0, 0.0]], [0, 0], [0, 0]]
    return {"name": "conic", "n": 3, "p": 2, "m": 1,
            "monomial_frame": [[c0, [0]], [c1, [1]], [c2, [2]]]}


def test_json_immersion_matches_catalog(tmp_path):
    path = tmp_path / "conic.json"
    path.write_text(json.dumps(_veronese2_json()))
    f = load_immersion(path)
    g = catalog.veronese(2)
    for z in (0.0, 0.3 + 0.2j, -0.7j):
        assert np.allclose(induced_metric(f, [z]), induced_metric(g, [z]), atol=1e-13)


def test_json_rejects_unknown_and_missing_keys():
    ident = _veronese2_json()
    with pytest.raises(ImmersionError, match="unknown"):
        immersion_from_dict(dict(ident, colour="red"))
    del ident["m"]
    with pytest.raises(ImmersionError, match="missing"):
        immersion_from_dict(ident)


def test_json_rejects_shape_mismatch():
    ident = _veronese2_json()
    ident["monomial_frame"][0][0] = [[1, 0]]
    with pytest.raises(ImmersionError):
        immersion_from_dict(ident)


def test_json_rejects_non_immersion():
    # constant frame: the differential vanishes everywhere
    ident = {"n": 2, "p": 1, "m": 1, "monomial_frame": [[[[1], [0]], [0]]]}
    with pytest.raises(ImmersionError):
        immersion_from_dict(ident)


def test_complex_entry_formats():
    ident = _veronese2_json()
    ident["monomial_frame"][0][0][1][0] = "1+0j"
    f = immersion_from_dict(ident)
    assert f.catalog_id == "conic"


@pytest.mark.parametrize("ident", catalog.LISTED)
def test_catalog_members_validate(ident):
    f = catalog.get(ident)
    v = validate_immersion(f)
    assert v["min_metric_eigenvalue"] > 0
    assert v["holomorphy_residual"] < 1e-6


def test_pushforward_is_holomorphic_and_fd_consistent():
    f = catalog.get("segre")
    z = np.array([0.2 - 0.1j, 0.4j])
    assert holomorphy_residual(f, z) < 1e-8
    u = np.array([1.0, 0.5j])
    jet = pushforward(f, z, u)
    fd = pushforward(f, z, u, diff=DifferentiationConfig("fd"))
    assert np.allclose(jet.ambient(), fd.ambient(), atol=1e-8)


def _invariants(f, z, chart):
    G = LocalGeometry(f, np.atleast_1d(z), ORDER_COVARIANT, chart)
    u, _ = unit_vector(G, np.ones(1))
    s = G.sigma(u, u)
    return np.array([
        np.linalg.norm(s) ** 2,
        np.linalg.norm(G.nabla_sigma(u, u, u)),
        G.curvature_M(u, u, u, u).real,
    ])


@pytest.mark.parametrize("ident", ["veronese:3", "weighted_veronese:3,2", "tensor_embedding:2"])
def test_charts_agree_on_overlaps(ident):
    # a chart-1 point is matched to its chart-0 preimage; invariants must agree
    f = catalog.get(ident)
    z1 = 0.8 + 0.3j
    P1 = f.projector([z1], 1)

    def loss(x):
        return np.linalg.norm(f.projector([x[0] + 1j * x[1]], 0) - P1) ** 2

    best = min((minimize(loss, [w.real, w.imag], method="Nelder-Mead",
                         options={"xatol": 1e-12, "fatol": 1e-24, "maxiter": 4000})
                for w in (1 / z1, -1 / z1, 1 / np.conj(z1), -1 / np.conj(z1))), key=lambda r: r.fun)
    assert best.fun < 1e-16
    z0 = best.x[0] + 1j * best.x[1]
    assert np.allclose(_invariants(f, z0, 0), _invariants(f, z1, 1), atol=1e-6)
