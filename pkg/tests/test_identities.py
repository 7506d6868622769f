import pytest

from grasspinch.identities import TIERS, connection_residuals, identity_battery
from grasspinch.grassmann import random_point, random_tangent


def test_default_battery_tiers():
    rep = identity_battery(4, 2, draws=30, seed=0)
    assert rep.passed, rep.failures
    for k, v in rep.residuals.items():
        assert v < TIERS[k]
    assert "holHyperplane" not in rep.residuals


def test_projective_line_has_constant_hol():
    rep = identity_battery(2, 1, draws=30, seed=3)
    assert rep.residuals["holHyperplane"] < 1e-10


def test_seed_variation_is_stable():
    a = identity_battery(4, 2, draws=20, seed=1)
    b = identity_battery(4, 2, draws=20, seed=2)
    assert a.passed == b.passed
    # finite-difference residuals are the only ones far above round-off
    for k in ("connectionFD", "secondFormFD"):
        ratio = a.residuals[k] / b.residuals[k]
        assert 0.1 < ratio < 10


def test_fd_checks_detect_flipped_sign_convention(monkeypatch):
    # with K_Ubar = +U^H instead of -U^H the derivative identity must fail
    from grasspinch import identities
    from grasspinch.grassmann import HomQS
    from grasspinch.linalg import adjoint

    x = random_point(4, 2, 5)
    U = random_tangent(x, 6)
    w = x.frameS[:, 0] + x.frameQ[:, 0]
    assert connection_residuals(x, U, w)["connectionFD"] < 1e-6
    monkeypatch.setattr(identities, "second_ff_K", lambda V: HomQS(V.base, adjoint(V.mat)))
    assert connection_residuals(x, U, w)["connectionFD"] > 1e-2


def test_report_dict_is_sorted_and_complete():
    d = identity_battery(3, 1, draws=5, seed=0).to_dict()
    assert list(d["residuals"]) == sorted(d["residuals"])
    assert d["passed"] is True
