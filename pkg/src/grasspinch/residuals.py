"""Randomized residuals of the submanifold identities at sampled points of f(M).

Each residual compares two independent computations (intrinsic metric data
against ambient projector data, or duality against a derivative of a normal
extension). Flat-only quantities are reported as None on non-flat immersions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flatness import composition_norm, random_unit_vectors
from .immersion import DEFAULT_DIFF, DifferentiationConfig, Immersion
from .pinching import random_chart_samples
from .submanifold import (
    ORDER_COVARIANT,
    LocalGeometry,
    curvature_normal_part,
    gauss_equation_residual,
    hol_M,
    ricci_equation_residual,
)

TOLERANCES = {
    "sigmaSymmetry": 1e-4,
    "codazziSymmetry": 1e-4,
    "duality": 1e-6,
    "shapeAlongU": 1e-6,
    "sigmaMixed": 1e-6,
    "gauss": 1e-4,
    "ricci": 1e-3,
    "holTwoWay": 1e-4,
    "nablaBarCurvature": 1e-4,
    "nablaBarSigmaFlat": 1e-4,
    "compositionFlat": 1e-5,
}
# on totally geodesic members sigma vanishes identically; allow round-off only
EXACT_ZERO = 1e-12


@dataclass(frozen=True)
class SubmanifoldResiduals:
    catalog_id: str
    samples: int
    residuals: dict
    flat: bool
    totally_geodesic: bool

    @property
    def failures(self) -> list:
        out = []
        for k, v in self.residuals.items():
            if v is None:
                continue
            tol = TOLERANCES[k]
            if k == "compositionFlat" and self.totally_geodesic:
                tol = EXACT_ZERO
            if not v < tol:
                out.append(k)
        return sorted(out)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "residuals": {k: (None if v is None else float(v)) for k, v in sorted(self.residuals.items())},
            "tolerances": dict(sorted(TOLERANCES.items())),
            "flat": self.flat,
            "totallyGeodesic": self.totally_geodesic,
            "passed": self.passed,
        }


def _n(X) -> float:
    return float(np.linalg.norm(X))


def submanifold_suite(f: Immersion, samples: int = 50, seed: int = 0, flat: bool | None = None,
                      diff: DifferentiationConfig = DEFAULT_DIFF) -> SubmanifoldResiduals:
    """Maxima of every submanifold identity residual over random points and unit frames.

    ``flat`` enables the checks that only hold when the pulled-back quotient
    is projectively flat; by default the catalog expectation is used.
    """
    flat = bool(f.expected.flat) if flat is None else bool(flat)
    tg = bool(f.expected.totally_geodesic)
    rng = np.random.default_rng(seed + 11)
    keys = [k for k in TOLERANCES if not k.endswith("Flat")]
    worst = {k: 0.0 for k in keys}
    worst["nablaBarSigmaFlat"] = 0.0 if flat else None
    worst["compositionFlat"] = 0.0 if flat else None

    def upd(k, v):
        worst[k] = max(worst[k], float(v))

    for chart, z, _ in random_chart_samples(f, samples, seed):
        G = LocalGeometry(f, z, ORDER_COVARIANT, chart, diff)
        u, v, w, x = random_unit_vectors(G, 4, rng)
        upd("sigmaSymmetry", _n(G.sigma(u, v) - G.sigma(v, u)))
        upd("codazziSymmetry", _n(G.nabla_sigma(w, u, v) - G.nabla_sigma(u, w, v)))
        upd("sigmaMixed", _n(G.sigma_mixed(u, v)))
        upd("gauss", gauss_equation_residual(f, z, u, v, w, x, geom=G))
        upd("holTwoWay", hol_M(f, z, u, geom=G).discrepancy)
        upd("nablaBarCurvature", _n(G.nabla_bar_sigma(v, u, w) - curvature_normal_part(G, u, v, w)))
        if flat:
            upd("nablaBarSigmaFlat", _n(G.nabla_bar_sigma(v, u, w)))
            upd("compositionFlat", composition_norm(G, u))
        N = G.normal_frame
        if len(N):
            c = rng.standard_normal((2, len(N))) + 1j * rng.standard_normal((2, len(N)))
            c /= np.linalg.norm(c, axis=1, keepdims=True)
            xi, eta = np.tensordot(c[0], N, 1), np.tensordot(c[1], N, 1)
            upd("duality", _n(G.shape(xi, u) - G.shape_by_derivative(xi, u)))
            upd("shapeAlongU", _n(G.shape_by_derivative(xi, u, bar=False)))
            upd("ricci", ricci_equation_residual(f, z, u, v, xi, eta, geom=G))
    return SubmanifoldResiduals(f.catalog_id, samples, worst, flat, tg)
