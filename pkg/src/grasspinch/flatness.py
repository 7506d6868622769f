"""Projective flatness of the pulled-back quotient bundle and its consequences.

The pulled-back quotient bundle f*Q is projectively flat in the required sense
when its curvature R(u, vbar) = -H_u K_vbar equals h_M(u, v) / q times the
identity for all tangent u, v. Flatness is a sampled, tolerance-gated
predicate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grassmann import curvature_Q, hol_sectional_ambient, second_ff_K
from .immersion import DEFAULT_DIFF, DifferentiationConfig, Immersion
from .linalg import orthonormal_basis_for
from .submanifold import ORDER_FIRST, ORDER_SIGMA, LocalGeometry

FLATNESS_GATE = 1e-6


@dataclass(frozen=True)
class PointPlan:
    """Chart points (chart index, z) plus a number of random tangent directions per point."""

    points: tuple
    directions: int = 4
    seed: int = 0

    def __post_init__(self):
        if not self.points:
            raise ValueError("empty sample plan")


def point_plan(f: Immersion, density: int = 3, directions: int = 4, seed: int = 0, scale: float = 0.9) -> PointPlan:
    """Grid points in every chart: a density x density square per complex coordinate plane,
    plus ``density`` random points in the chart polydisc when m >= 2."""
    rng = np.random.default_rng(seed)
    r = scale * f.chart_radius
    axis = np.linspace(-r, r, density) if density > 1 else np.zeros(1)
    pts = []
    for chart in range(len(f.atlas)):
        for a in axis:
            for b in axis:
                z = np.zeros(f.m, dtype=np.complex128)
                z[0] = a + 1j * b
                pts.append((chart, z))
        if f.m > 1:
            for _ in range(density):
                z = r * (rng.uniform(-1, 1, f.m) + 1j * rng.uniform(-1, 1, f.m)) / np.sqrt(2)
                pts.append((chart, z))
    return PointPlan(tuple(pts), directions, seed)


def random_unit_vectors(G: LocalGeometry, k: int, rng: np.random.Generator) -> np.ndarray:
    """k chart vectors uniform on the h_M unit sphere (rows)."""
    E = orthonormal_basis_for(G.g)
    c = rng.standard_normal((k, G.m)) + 1j * rng.standard_normal((k, G.m))
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    return c @ E.T


def pullback_Q_curvature(f: Immersion, z, u, v, chart: int = 0, diff: DifferentiationConfig = DEFAULT_DIFF,
                         geom: LocalGeometry | None = None) -> np.ndarray:
    """R^{f*Q}(u, vbar) = -H_u K_vbar as a q x q matrix in the adapted frame."""
    G = geom if geom is not None else LocalGeometry(f, z, ORDER_FIRST, chart, diff)
    U, V = G.to_frame(G.tangent(u)), G.to_frame(G.tangent(v))
    return curvature_Q(U, V)


def _flatness_defect(G: LocalGeometry, u, v, q: int) -> float:
    R = pullback_Q_curvature(G.f, G.z, u, v, geom=G)
    return float(np.linalg.norm(R - G.metric(u, v) / q * np.eye(q), 2))


@dataclass(frozen=True)
class FlatnessReport:
    max_residual: float
    alpha_form: list            # h_M / q at the first sample point, as [[re, im], ...] rows
    rank_check_passed: bool
    pullback_hol_max_deviation: float | None
    composition_max_norm: float | None
    trace_residual: float
    samples: int
    gate: float = FLATNESS_GATE
    notes: tuple = field(default_factory=tuple)

    @property
    def flat(self) -> bool:
        return self.max_residual < self.gate

    def to_dict(self) -> dict:
        return {
            "maxResidual": self.max_residual,
            "flat": self.flat,
            "gate": self.gate,
            "alphaForm": self.alpha_form,
            "rankCheckPassed": self.rank_check_passed,
            "pullbackHolMaxDeviation": self.pullback_hol_max_deviation,
            "compositionMaxNorm": self.composition_max_norm,
            "traceResidual": self.trace_residual,
            "samples": self.samples,
            "notes": list(self.notes),
        }


def _geometries(f, plan: PointPlan, order: int, diff):
    for chart, z in plan.points:
        yield LocalGeometry(f, z, order, chart, diff)


def composition_norm(G: LocalGeometry, u) -> float:
    """Operator norm of H_{sigma(u,u)} K_ubar on Q."""
    S = G.to_frame(G.sigma(u, u))
    K = second_ff_K(G.to_frame(G.tangent(u))).mat
    return float(np.linalg.norm(S.mat @ K, 2))


def flatness_residual(f: Immersion, plan: PointPlan, diff: DifferentiationConfig = DEFAULT_DIFF,
                      gate: float = FLATNESS_GATE) -> FlatnessReport:
    """Worst deviation of R^{f*Q}(u, vbar) from h_M(u, v)/q Id over the plan."""
    rng = np.random.default_rng(plan.seed)
    q = f.q
    worst = 0.0
    trace_worst = 0.0
    count = 0
    alpha = None
    geoms = list(_geometries(f, plan, ORDER_SIGMA, diff))
    for G in geoms:
        E = orthonormal_basis_for(G.g)
        vecs = list(E.T) + list(random_unit_vectors(G, plan.directions, rng))
        if alpha is None:
            a = G.g / q
            alpha = [[[float(x.real), float(x.imag)] for x in row] for row in a]
        for u in vecs:
            for v in vecs:
                worst = max(worst, _flatness_defect(G, u, v, q))
                count += 1
            R = pullback_Q_curvature(f, G.z, u, u, geom=G)
            trace_worst = max(trace_worst, abs(np.trace(R) - G.metric(u, u)))
    flat = worst < gate
    notes = []
    if flat and f.p < q:
        notes.append("flatness passed but p < q: rank inequality violated")
    l_hol = l_comp = None
    if flat:
        l_hol = l_comp = 0.0
        for G in geoms:
            for u in random_unit_vectors(G, plan.directions, rng):
                l_hol = max(l_hol, abs(hol_sectional_ambient(G.tangent(u)) - 2.0 / q))
                l_comp = max(l_comp, composition_norm(G, u))
    else:
        notes.append("curvature of the pulled-back quotient is not scalar; dependent checks skipped")
    return FlatnessReport(
        max_residual=float(worst), alpha_form=alpha, rank_check_passed=bool(f.p >= q),
        pullback_hol_max_deviation=None if l_hol is None else float(l_hol),
        composition_max_norm=None if l_comp is None else float(l_comp),
        trace_residual=float(trace_worst), samples=count, gate=gate, notes=tuple(notes),
    )


def pullback_hol_check(f: Immersion, plan: PointPlan, diff: DifferentiationConfig = DEFAULT_DIFF,
                  report: FlatnessReport | None = None) -> float | None:
    """max |Hol^Gr(f_* u) - 2/q| over unit samples; None when the flatness gate fails."""
    report = report if report is not None else flatness_residual(f, plan, diff)
    if not report.flat:
        return None
    rng = np.random.default_rng(plan.seed + 1)
    worst = 0.0
    for G in _geometries(f, plan, ORDER_FIRST, diff):
        for u in random_unit_vectors(G, plan.directions, rng):
            worst = max(worst, abs(hol_sectional_ambient(G.tangent(u)) - 2.0 / f.q))
    return float(worst)


def composition_check(f: Immersion, plan: PointPlan, diff: DifferentiationConfig = DEFAULT_DIFF) -> float:
    """max ||H_{sigma(u,u)} K_ubar|| over unit samples (evaluated whether or not f is flat)."""
    rng = np.random.default_rng(plan.seed + 2)
    worst = 0.0
    for G in _geometries(f, plan, ORDER_SIGMA, diff):
        for u in random_unit_vectors(G, plan.directions, rng):
            worst = max(worst, composition_norm(G, u))
    return float(worst)
