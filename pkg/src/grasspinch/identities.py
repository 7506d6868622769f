"""Randomized battery of the ambient Grassmannian identities.

Algebraic identities are checked at the 1e-10 tier; the derivative identities
for the bundle connections are checked by central finite differences of
projectors along holomorphic frame curves (1e-6 tier).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grassmann import (
    AmbientTangent,
    GrassmannPoint,
    curvature_Gr,
    curvature_Q,
    curvature_S,
    frame_curve,
    hol_sectional,
    metric,
    metric_section_sum,
    metric_trace_formula,
    project_Q,
    project_S,
    random_point,
    random_tangent,
    random_unitary,
    second_ff_H,
    second_ff_K,
)
from .jets import wirtinger_fd
from .linalg import TOL_ALGEBRAIC, TOL_FIRST_DERIVATIVE, adjoint

FD_STEP = 1e-5

# residual name -> tolerance tier
TIERS = {
    "hkAdjoint": TOL_ALGEBRAIC,
    "metricTraceFormula": TOL_ALGEBRAIC,
    "metricSectionSumK": TOL_ALGEBRAIC,
    "metricSectionSumH": TOL_ALGEBRAIC,
    "metricHermitian": TOL_ALGEBRAIC,
    "pythagoras": TOL_ALGEBRAIC,
    "splitting": TOL_ALGEBRAIC,
    "curvatureSymmetryUZ": TOL_ALGEBRAIC,
    "bianchi": TOL_ALGEBRAIC,
    "curvatureSHermitian": TOL_ALGEBRAIC,
    "traceRS": TOL_ALGEBRAIC,
    "traceRQ": TOL_ALGEBRAIC,
    "gaugeInvariance": TOL_ALGEBRAIC,
    "holPhaseInvariance": TOL_ALGEBRAIC,
    "connectionFD": TOL_FIRST_DERIVATIVE,
    "secondFormFD": TOL_FIRST_DERIVATIVE,
    "holHyperplane": TOL_ALGEBRAIC,
}


def _projectors_along(x: GrassmannPoint, U: AmbientTangent):
    def P(t):
        y = frame_curve(x, U, complex(np.ravel(t)[0]))
        return y.projector
    return P


def connection_residuals(x: GrassmannPoint, U: AmbientTangent, w: np.ndarray, step: float = FD_STEP) -> dict:
    """Finite-difference checks of the derivative identities at x along U.

    With s = pi_S(w), t = pi_Q(w) viewed as C^n-valued functions P w and
    (I - P) w along the holomorphic curve with velocity U:

    * the (0,1) part of nabla^S s is -K_Ubar t, the (1,0) part vanishes;
    * the (1,0) part of nabla^Q t is -H_U s;
    * pi_Q d(i_S s) along U is H_U s.
    """
    P = _projectors_along(x, U)
    n = x.n
    I = np.eye(n)
    P0 = x.projector
    one = np.ones(1)
    dPw = wirtinger_fd(lambda t: P(t) @ w, np.zeros(1), one, step)
    dbPw = wirtinger_fd(lambda t: P(t) @ w, np.zeros(1), one, step, bar=True)
    dQw = wirtinger_fd(lambda t: (I - P(t)) @ w, np.zeros(1), one, step)
    s = project_S(x, w)
    t = project_Q(x, w)
    H = second_ff_H(U).mat
    K = second_ff_K(U).mat
    nablaS_bar = adjoint(x.frameS) @ (P0 @ dbPw)
    nablaS_hol = adjoint(x.frameS) @ (P0 @ dPw)
    nablaQ = adjoint(x.frameQ) @ ((I - P0) @ dQw)
    Hs_fd = adjoint(x.frameQ) @ ((I - P0) @ dPw)
    return {
        "connectionFD": max(
            np.linalg.norm(nablaS_bar + K @ t),
            np.linalg.norm(nablaS_hol),
            np.linalg.norm(nablaQ + H @ s),
        ),
        "secondFormFD": np.linalg.norm(Hs_fd - H @ s),
    }


@dataclass(frozen=True)
class IdentityReport:
    n: int
    p: int
    draws: int
    seed: int
    residuals: dict

    @property
    def failures(self) -> list:
        return sorted(k for k, v in self.residuals.items() if not v < TIERS[k])

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "n": self.n, "p": self.p, "draws": self.draws, "seed": self.seed,
            "residuals": {k: float(v) for k, v in sorted(self.residuals.items())},
            "tolerances": {k: TIERS[k] for k in sorted(self.residuals)},
            "passed": self.passed,
        }


def identity_battery(n: int = 4, p: int = 2, draws: int = 100, seed: int = 0, fd_draws: int | None = None) -> IdentityReport:
    """Maxima of every identity residual over ``draws`` random (point, vectors)."""
    rng = np.random.default_rng(seed)
    q = n - p
    worst = {k: 0.0 for k in TIERS if k != "holHyperplane"}
    if p == n - 1:
        worst["holHyperplane"] = 0.0
    fd_draws = draws if fd_draws is None else fd_draws

    def upd(key, val):
        worst[key] = max(worst[key], float(val))

    for d in range(draws):
        x = random_point(n, p, rng)
        U, V, Z, W = (random_tangent(x, rng) for _ in range(4))
        s = rng.standard_normal(p) + 1j * rng.standard_normal(p)
        t = rng.standard_normal(q) + 1j * rng.standard_normal(q)
        w = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        H = second_ff_H(U)
        K = second_ff_K(U)
        upd("hkAdjoint", abs(np.vdot(t, H(s)) + np.vdot(K(t), s)))
        g = metric(U, V)
        upd("metricTraceFormula", abs(metric_trace_formula(U, V) - g))
        viaK, viaH = metric_section_sum(U, V, random_unitary(n, rng))
        upd("metricSectionSumK", abs(viaK - g))
        upd("metricSectionSumH", abs(viaH - g))
        upd("metricHermitian", abs(g - np.conj(metric(V, U))))
        ps, pq = project_S(x, w), project_Q(x, w)
        upd("pythagoras", abs(np.vdot(ps, ps).real + np.vdot(pq, pq).real - np.vdot(w, w).real))
        upd("splitting", np.linalg.norm(x.frameS @ ps + x.frameQ @ pq - w))
        R1 = curvature_Gr(U, V, Z)
        upd("curvatureSymmetryUZ", np.linalg.norm(R1.mat - curvature_Gr(Z, V, U).mat))
        upd("bianchi", abs(metric(R1, W) - metric(curvature_Gr(Z, V, U), W)))
        upd("curvatureSHermitian", np.linalg.norm(curvature_S(U, V) - adjoint(curvature_S(V, U))))
        upd("traceRS", abs(np.trace(curvature_S(U, U)) + metric(U, U)))
        upd("traceRQ", abs(np.trace(curvature_Q(U, V)) - g))
        WS, WQ = random_unitary(p, rng), random_unitary(q, rng)
        Ug, Vg = U.regauge(WS, WQ), AmbientTangent(U.regauge(WS, WQ).base, V.regauge(WS, WQ).mat)
        upd("gaugeInvariance", max(abs(metric(Ug, Vg) - g), abs(hol_sectional(Ug) - hol_sectional(U))))
        th = rng.uniform(0, 2 * np.pi)
        upd("holPhaseInvariance", abs(hol_sectional(np.exp(1j * th) * U) - hol_sectional(U)))
        if p == n - 1:
            upd("holHyperplane", abs(hol_sectional(U) - 2.0))
        if d < fd_draws:
            for k, v in connection_residuals(x, U, w).items():
                upd(k, v)
    return IdentityReport(n, p, draws, seed, worst)
