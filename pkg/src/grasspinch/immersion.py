"""Holomorphic immersions into Gr_p(C^n) given by polynomial chart maps."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .grassmann import AmbientTangent, GrassmannPoint
from .jets import TaylorJet, holomorphic_fd_jet, polynomial_jet, wirtinger_fd
from .linalg import TOL_FIRST_DERIVATIVE, JetScalar, adjoint


class ImmersionError(ValueError):
    """Invalid immersion description or a non-immersive chart point."""


@dataclass(frozen=True)
class DifferentiationConfig:
    """How chart-map derivatives are obtained.

    ``jet`` expands the polynomial chart map exactly; ``fd`` uses nested central
    differences with ``step`` (first order) and ``second_order_step`` (higher).
    """

    mode: str = "jet"
    step: float = 1e-5
    second_order_step: float = 1e-4

    def __post_init__(self):
        if self.mode not in ("jet", "fd"):
            raise ValueError(f"unknown differentiation mode {self.mode!r}")
        for s in (self.step, self.second_order_step):
            if not 1e-8 <= s <= 1e-2:
                raise ValueError(f"finite-difference step {s} outside [1e-8, 1e-2]")


DEFAULT_DIFF = DifferentiationConfig()


@dataclass(frozen=True)
class Expected:
    """Ground truth recorded by catalog constructors (None = not asserted)."""

    flat: bool | None = None
    min_hol: float | None = None
    parallel: bool | None = None
    totally_geodesic: bool | None = None
    homogeneous: bool = False


@dataclass(frozen=True, eq=False)
class Immersion:
    """Chart map z -> F(z) (n x p, full rank) spanning f(z) in Gr_p(C^n).

    ``terms`` lists (coefficient n x p, exponent tuple) pairs of the polynomial
    chart map. Chart j of the atlas is z -> atlas[j] @ F(z); every atlas
    rotation must preserve the image of the immersion.

    ``chart_shape = (k, l)`` declares that the chart coordinates, read
    row-major as a k x l matrix, are big-cell coordinates of Gr_k(C^{k+l});
    quadrature then samples from that Grassmannian's invariant measure.
    """

    catalog_id: str
    n: int
    p: int
    m: int
    terms: tuple
    atlas: tuple = ()
    chart_radius: float = 1.0
    params: dict = field(default_factory=dict)
    expected: Expected = field(default_factory=Expected)
    chart_shape: tuple | None = None

    def __post_init__(self):
        if not 0 < self.p < self.n:
            raise ImmersionError(f"need 0 < p < n, got p={self.p}, n={self.n}")
        if self.m < 1:
            raise ImmersionError("complex dimension m must be positive")
        for coef, e in self.terms:
            if np.shape(coef) != (self.n, self.p) or len(e) != self.m:
                raise ImmersionError("monomial term does not match (n, p, m)")
        if self.chart_shape is not None:
            k, l = self.chart_shape
            if k < 1 or l < 1 or k * l != self.m:
                raise ImmersionError(f"chart_shape {self.chart_shape} does not match m={self.m}")
        if not self.atlas:
            object.__setattr__(self, "atlas", (np.eye(self.n, dtype=np.complex128),))

    @property
    def q(self) -> int:
        return self.n - self.p

    @property
    def label(self) -> str:
        return self.catalog_id

    def chart_map(self, z, chart: int = 0) -> np.ndarray:
        z = np.asarray(z, dtype=np.complex128).reshape(self.m)
        F = np.zeros((self.n, self.p), dtype=np.complex128)
        for coef, e in self.terms:
            F += coef * np.prod(z ** np.asarray(e))
        return self.atlas[chart] @ F

    def chart_map_jet(self, z, chart: int = 0) -> JetScalar:
        """Chart map evaluated on forward jets: value and holomorphic partials."""
        zs = JetScalar.variables(np.asarray(z, dtype=np.complex128).reshape(self.m))
        F = JetScalar.constant(np.zeros((self.n, self.p)), self.m)
        for coef, e in self.terms:
            mono = JetScalar.constant(1.0, self.m)
            for k, ek in enumerate(e):
                if ek:
                    mono = mono * zs[k] ** int(ek)
            F = F + mono * np.asarray(coef, dtype=np.complex128)
        return JetScalar(self.atlas[chart] @ F.value, self.atlas[chart] @ F.partials)

    def frame_jet(self, z, order: int, chart: int = 0, diff: DifferentiationConfig = DEFAULT_DIFF) -> TaylorJet:
        z = np.asarray(z, dtype=np.complex128).reshape(self.m)
        if diff.mode == "jet":
            return self.atlas[chart] @ polynomial_jet(self.terms, z, order, (self.n, self.p))
        step = diff.step if order <= 1 else diff.second_order_step
        return holomorphic_fd_jet(lambda w: self.chart_map(w, chart), z, order, step)

    def projector(self, z, chart: int = 0) -> np.ndarray:
        F = self.chart_map(z, chart)
        return F @ np.linalg.solve(adjoint(F) @ F, adjoint(F))


def evaluate(f: Immersion, z, chart: int = 0) -> GrassmannPoint:
    F = f.chart_map(z, chart)
    try:
        return GrassmannPoint.from_frame(F)
    except ValueError as exc:
        raise ImmersionError(f"chart map of {f.catalog_id} is rank deficient at z={z}") from exc


def chart_derivatives(f: Immersion, z, chart: int = 0, diff: DifferentiationConfig = DEFAULT_DIFF) -> np.ndarray:
    """Holomorphic partials dF/dz_k, shape (m, n, p)."""
    z = np.asarray(z, dtype=np.complex128).reshape(f.m)
    if diff.mode == "jet":
        return f.chart_map_jet(z, chart).partials
    eye = np.eye(f.m)
    return np.array([wirtinger_fd(lambda w: f.chart_map(w, chart), z, eye[k], diff.step) for k in range(f.m)])


def pushforward(f: Immersion, z, u, chart: int = 0, diff: DifferentiationConfig = DEFAULT_DIFF,
                x: GrassmannPoint | None = None) -> AmbientTangent:
    """f_* u as a Hom(S, Q) matrix: frameQ^H (d_u F) (frameS^H F)^{-1}."""
    x = evaluate(f, z, chart) if x is None else x
    F = f.chart_map(z, chart)
    dF = np.tensordot(np.asarray(u, dtype=np.complex128), chart_derivatives(f, z, chart, diff), axes=1)
    mat = adjoint(x.frameQ) @ dF @ np.linalg.inv(adjoint(x.frameS) @ F)
    return AmbientTangent(x, mat)


def antiholomorphic_component(f: Immersion, z, u, chart: int = 0, step: float = 1e-5) -> np.ndarray:
    """Hom(S, Q) part of d/dzbar along u, measured by finite differences of the projector."""
    P = f.projector(z, chart)
    dP = wirtinger_fd(lambda w: f.projector(w, chart), z, u, step, bar=True)
    return (np.eye(f.n) - P) @ dP @ P


def holomorphy_residual(f: Immersion, z, chart: int = 0, step: float = 1e-5) -> float:
    eye = np.eye(f.m)
    return max(float(np.linalg.norm(antiholomorphic_component(f, z, eye[k], chart, step))) for k in range(f.m))


def induced_metric(f: Immersion, z, chart: int = 0, diff: DifferentiationConfig = DEFAULT_DIFF) -> np.ndarray:
    """g[i, j] = h_Gr(f_* d_i, f_* d_j); Hermitian positive definite."""
    x = evaluate(f, z, chart)
    eye = np.eye(f.m)
    mats = [pushforward(f, z, eye[k], chart, diff, x=x).mat for k in range(f.m)]
    g = np.array([[np.vdot(mats[j], mats[i]) for j in range(f.m)] for i in range(f.m)])
    if np.linalg.eigvalsh(g)[0] <= 1e-12:
        raise ImmersionError(f"{f.catalog_id} is not immersive at z={z}")
    return g


# --------------------------------------------------------------------------
# user-defined immersions
# --------------------------------------------------------------------------

_JSON_KEYS = {"n", "p", "m", "monomial_frame"}
_JSON_OPTIONAL = {"name", "atlas", "chart_radius"}


def _complex_entry(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        return complex(v.replace(" ", ""))
    raise ImmersionError(f"cannot read complex entry {v!r}")


def _complex_matrix(rows, shape) -> np.ndarray:
    try:
        M = np.array([[_complex_entry(v) for v in row] for row in rows], dtype=np.complex128)
    except TypeError as exc:
        raise ImmersionError("matrix entries must be nested lists") from exc
    if M.shape != shape:
        raise ImmersionError(f"expected a {shape} matrix, got {M.shape}")
    return M


def immersion_from_dict(desc: dict[str, Any], validate: bool = True) -> Immersion:
    """Build an immersion from the JSON description.

    ``{"n": .., "p": .., "m": .., "monomial_frame": [[coefficient, exponent], ...]}``
    where each coefficient is an n x p matrix of numbers, ``[re, im]`` pairs or
    complex strings, and each exponent a list of m non-negative integers.
    """
    unknown = set(desc) - _JSON_KEYS - _JSON_OPTIONAL
    if unknown:
        raise ImmersionError(f"unknown keys in immersion description: {sorted(unknown)}")
    missing = _JSON_KEYS - set(desc)
    if missing:
        raise ImmersionError(f"missing keys in immersion description: {sorted(missing)}")
    n, p, m = int(desc["n"]), int(desc["p"]), int(desc["m"])
    terms = []
    for item in desc["monomial_frame"]:
        if len(item) != 2:
            raise ImmersionError("each monomial_frame entry is [coefficient, multi-exponent]")
        coef = _complex_matrix(item[0], (n, p))
        e = tuple(int(k) for k in item[1])
        if len(e) != m or min(e, default=0) < 0:
            raise ImmersionError(f"bad multi-exponent {item[1]!r} for m={m}")
        terms.append((coef, e))
    atlas = tuple(_complex_matrix(R, (n, n)) for R in desc.get("atlas", [])) or ()
    for R in atlas:
        if np.abs(adjoint(R) @ R - np.eye(n)).max() > 1e-10:
            raise ImmersionError("atlas entries must be unitary")
    f = Immersion(
        catalog_id=str(desc.get("name", "user")),
        n=n, p=p, m=m, terms=tuple(terms), atlas=atlas,
        chart_radius=float(desc.get("chart_radius", 1.0)),
    )
    if validate:
        validate_immersion(f)
    return f


def load_immersion(path: str | Path, validate: bool = True) -> Immersion:
    with open(path, encoding="utf-8") as fh:
        try:
            desc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ImmersionError(f"{path}: not valid JSON ({exc})") from exc
    return immersion_from_dict(desc, validate=validate)


def sample_chart_points(f: Immersion, density: int = 3) -> list[np.ndarray]:
    """Small deterministic grid in the chart polydisc, used for validation."""
    r = f.chart_radius
    axis = np.linspace(-r, r, density) if density > 1 else np.zeros(1)
    pts = []
    for k in range(f.m):
        for a in axis:
            for b in axis:
                z = np.zeros(f.m, dtype=np.complex128)
                z[k] = a + 1j * b
                pts.append(z)
    return pts


def validate_immersion(f: Immersion, points=None, tol: float = TOL_FIRST_DERIVATIVE) -> dict[str, float]:
    """Rank, immersion and holomorphy checks at sampled chart points."""
    points = sample_chart_points(f) if points is None else points
    worst_holo = 0.0
    min_eig = np.inf
    for chart in range(len(f.atlas)):
        for z in points:
            evaluate(f, z, chart)
            g = induced_metric(f, z, chart)
            min_eig = min(min_eig, float(np.linalg.eigvalsh(g)[0]))
            worst_holo = max(worst_holo, holomorphy_residual(f, z, chart))
    if worst_holo >= tol:
        raise ImmersionError(f"{f.catalog_id}: antiholomorphic residual {worst_holo:.2e} >= {tol}")
    return {"holomorphy_residual": worst_holo, "min_metric_eigenvalue": min_eig, "points": len(points) * len(f.atlas)}
