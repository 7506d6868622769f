"""Integration over the unit tangent sphere bundle UM.

Measure: the Riemannian volume of M (2^m det h_M times chart Lebesgue measure,
so the Fubini-Study line with Hol = 2 has area 2 pi) times the normalized round
measure on each fiber. All integrands used here are invariant under
u -> e^{i theta} u, which is checked at runtime; for m = 1 the fiber then
collapses to a single representative.

Quadrature. For m = 1 every chart contributes the disc |z| <= chart_radius
in coordinates s = |z|^2, theta, with a randomly shifted rectangle rule on a
periodized s-axis (s = R^2 psi(t), psi(t) = t - sin(2 pi t) / (2 pi)). Each
image point is counted only by the chart whose origin is nearest (largest
|det(S_0^H S)|^2), a hard partition of unity. For m >= 2, randomized Sobol
points on chart 0 with a Fubini-Study proposal cover the whole chart, whose
complement has measure zero. Independent random shifts form replicates, and
the standard error is the jackknife over replicates.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.stats import norm, qmc

from .immersion import DEFAULT_DIFF, DifferentiationConfig, Immersion
from .linalg import adjoint, orthonormal_basis_for, orthonormalize
from .parallel import ordered_map
from .submanifold import ORDER_COVARIANT, ORDER_FIRST, ORDER_SECOND_COVARIANT, LocalGeometry

PHASE_TOL = 1e-8
PARTITION_TOL = 1e-3
# absolute noise floor relative to the integrated |integrand| mass: estimates
# below this level are numerically zero regardless of the standard error
ROUNDOFF_FLOOR = 1e-10


class CoveringError(ValueError):
    """Atlas discs do not cover the image (partition-of-unity check failed)."""


class PhaseVarianceError(ValueError):
    """Integrand changes under u -> e^{i theta} u, so the fiber cannot be collapsed."""


@dataclass(frozen=True)
class UMSample:
    chart: int
    z: np.ndarray
    u: np.ndarray
    weight: float
    replicate: int


@dataclass(frozen=True)
class UMPlan:
    samples: tuple
    replicates: int
    base_density: int
    fiber_samples: int
    seed: int

    def volume_replicates(self) -> np.ndarray:
        v = np.zeros(self.replicates)
        for s in self.samples:
            v[s.replicate] += s.weight
        return v

    def volume(self) -> tuple[float, float]:
        return jackknife(self.volume_replicates())


def jackknife(values) -> tuple[float, float]:
    """Mean of replicate estimates and its jackknife standard error."""
    v = np.asarray(values)
    R = v.shape[0]
    mean = v.mean()
    if R < 2:
        return mean, float("nan")
    loo = (R * mean - v) / (R - 1)
    se = np.sqrt((R - 1) / R * np.sum(np.abs(loo - loo.mean()) ** 2))
    return mean, float(se)


def chart_origin_frames(f: Immersion) -> list[np.ndarray]:
    return [orthonormalize(f.chart_map(np.zeros(f.m), j)) for j in range(len(f.atlas))]


def chart_weights(f: Immersion, z, chart: int, origins=None) -> np.ndarray:
    """|det(S_k(0)^H S)|^2 for every chart k, S the frame of f at chart point (chart, z)."""
    origins = chart_origin_frames(f) if origins is None else origins
    S = orthonormalize(f.chart_map(z, chart))
    return np.array([abs(np.linalg.det(adjoint(S0) @ S)) ** 2 for S0 in origins])


def check_covering(f: Immersion, points: int = 64, tol: float = PARTITION_TOL) -> float:
    """On each chart's boundary circle the chart must not beat every other chart.

    If it did, image points just outside the disc would belong to this chart
    yet never be sampled. Returns the worst excess (must be <= tol).
    """
    if f.m != 1:
        return 0.0
    origins = chart_origin_frames(f)
    R = f.chart_radius
    worst = -np.inf
    for j in range(len(f.atlas)):
        if len(f.atlas) == 1:
            raise CoveringError(f"{f.catalog_id}: a single disc chart cannot cover a compact curve")
        for th in np.linspace(0, 2 * np.pi, points, endpoint=False):
            w = chart_weights(f, np.array([R * np.exp(1j * th)]), j, origins)
            others = np.delete(w, j).max()
            worst = max(worst, (w[j] - others) / max(w.max(), 1e-300))
    if worst > tol:
        raise CoveringError(f"{f.catalog_id}: chart discs leave uncovered points (excess {worst:.2e})")
    return float(worst)


def _psi(t):
    return t - np.sin(2 * np.pi * t) / (2 * np.pi), 1.0 - np.cos(2 * np.pi * t)


def _unit_first_direction(G: LocalGeometry) -> np.ndarray:
    return orthonormal_basis_for(G.g)[:, 0]


def _curve_plan(f, base_density, replicates, seed, diff):
    check_covering(f)
    rng = np.random.default_rng(seed)
    origins = chart_origin_frames(f)
    R2 = f.chart_radius**2
    Ns = base_density
    Nt = base_density
    samples = []
    for r in range(replicates):
        a, b = rng.uniform(0, 1, 2)
        for chart in range(len(f.atlas)):
            for i in range(Ns):
                t = (i + a) / Ns
                ps, dps = _psi(t)
                s = R2 * ps
                for k in range(Nt):
                    th = 2 * np.pi * (k + b) / Nt
                    z = np.array([np.sqrt(s) * np.exp(1j * th)])
                    w = chart_weights(f, z, chart, origins)
                    if w[chart] < w.max() * (1 - 1e-12) and np.argmax(w) != chart:
                        continue
                    G = LocalGeometry(f, z, ORDER_FIRST, chart, diff)
                    det = np.linalg.det(G.g).real
                    # dLebesgue = (1/2) ds dtheta; ds = R^2 psi'(t) dt
                    weight = 2.0 * det * 0.5 * R2 * dps / Ns * (2 * np.pi / Nt)
                    samples.append(UMSample(chart, z, _unit_first_direction(G), float(weight), r))
    return samples


def grassmannian_volume(k: int, l: int) -> float:
    """Integral over C^{k x l} of det(I + Z Z^H)^{-(k+l)} against Lebesgue measure."""
    return float(np.pi ** (k * l) * np.prod([factorial(j - 1) / factorial(k + l - j) for j in range(1, k + 1)]))


def _fs_proposal(x, m):
    # per-coordinate Fubini-Study law: (1/pi) (1 + |z|^2)^{-2}
    t = np.clip(x[:m], 1e-15, 1 - 1e-15)
    rad2 = t / (1 - t)
    z = np.sqrt(rad2) * np.exp(2j * np.pi * x[m:])
    return z, float(np.prod((1.0 / np.pi) / (1 + rad2) ** 2))


def _big_cell_proposal(x, k, l):
    # invariant law of Gr_k(C^{k+l}) in big-cell coordinates: Z = A^{-1} B with [A | B] Gaussian
    g = norm.ppf(np.clip(x, 1e-12, 1 - 1e-12))
    half = k * (k + l)
    M = (g[:half] + 1j * g[half:]).reshape(k, k + l)
    Z = np.linalg.solve(M[:, :k], M[:, k:])
    dens = np.linalg.det(np.eye(k) + Z @ adjoint(Z)).real ** (-(k + l)) / grassmannian_volume(k, l)
    return Z.reshape(-1), float(dens)


def _surface_plan(f, base_density, fiber_samples, replicates, seed, diff):
    m = f.m
    rng = np.random.default_rng(seed)
    k = max(1, int(np.ceil(np.log2(base_density))))
    shape = f.chart_shape
    dim = 2 * m if shape is None else 2 * shape[0] * (shape[0] + shape[1])
    samples = []
    for r in range(replicates):
        sob = qmc.Sobol(dim, scramble=True, seed=int(rng.integers(2**63)))
        pts = sob.random_base2(k)
        Nb = pts.shape[0]
        for x in pts:
            z, dens = _fs_proposal(x, m) if shape is None else _big_cell_proposal(x, *shape)
            G = LocalGeometry(f, z, ORDER_FIRST, 0, diff)
            det = np.linalg.det(G.g).real
            base_w = (2.0**m) * det / dens / Nb
            E = orthonormal_basis_for(G.g)
            c = rng.standard_normal((fiber_samples, m)) + 1j * rng.standard_normal((fiber_samples, m))
            c /= np.linalg.norm(c, axis=1, keepdims=True)
            for cc in c:
                samples.append(UMSample(0, z, E @ cc, float(base_w / fiber_samples), r))
    return samples


def build_um_plan(f: Immersion, base_density: int = 8, fiber_samples: int = 2, seed: int = 0,
                  replicates: int = 6, diff: DifferentiationConfig = DEFAULT_DIFF) -> UMPlan:
    """Deterministic (given ``seed``) quadrature plan on UM."""
    if base_density < 1 or replicates < 2 or fiber_samples < 1:
        raise ValueError("plan needs base_density >= 1, fiber_samples >= 1 and replicates >= 2")
    if f.m == 1:
        samples = _curve_plan(f, base_density, replicates, seed, diff)
        fiber_samples = 1
    else:
        samples = _surface_plan(f, base_density, fiber_samples, replicates, seed, diff)
    return UMPlan(tuple(samples), replicates, base_density, fiber_samples, seed)


# --------------------------------------------------------------------------
# integrands: functions (LocalGeometry, unit u) -> complex
# --------------------------------------------------------------------------

def second_covariant_T(G: LocalGeometry, u) -> complex:
    """(nabla^2 T)(ubar, u, u, u, ubar, ubar), T(U,V,Zbar,Wbar) = h(sigma(U,V), sigma(Z,W))."""
    return G.second_covariant_T(u)


second_covariant_T.order = ORDER_SECOND_COVARIANT


def first_covariant_T(G: LocalGeometry, u) -> complex:
    """(nabla_ubar T)(u, u, ubar, ubar); picks up e^{-i theta} under u -> e^{i theta} u."""
    u = np.asarray(u, dtype=np.complex128)
    m = G.m
    S = G.sigma_jet
    uu = np.kron(u, u).reshape(-1, 1)
    s_uu = S @ uu
    T = s_uu.H @ s_uu
    val = T.dzbar(u).value[0, 0]
    Gam = np.einsum("cij,i,j->c", G.christoffel, u, u)
    eye = np.eye(m)
    s0 = G.sigma(u, u).reshape(-1)
    for a in range(m):
        sau = G.sigma(eye[a], u).reshape(-1)
        val -= 2.0 * np.conj(Gam[a]) * np.vdot(sau, s0)
    return complex(val)


first_covariant_T.order = ORDER_COVARIANT


def zero_derivative(G: LocalGeometry, u) -> complex:
    """Covariant derivative of a constant function: identically zero."""
    return 0.0 + 0.0j


zero_derivative.order = ORDER_FIRST


def balance_curvature_term(G: LocalGeometry, u) -> complex:
    """3/q (|sigma(u,u)|^2 - q |A_{sigma(u,u)} ubar|^2)."""
    q = G.f.q
    s = G.sigma(u, u)
    A = G.shape(s, u, check=False)
    return 3.0 / q * (np.vdot(s, s).real - q * np.vdot(A, A).real)


balance_curvature_term.order = 2


def balance_nabla_term(G: LocalGeometry, u) -> complex:
    """|nabla sigma(u, u, u)|^2."""
    v = G.nabla_sigma(u, u, u)
    return np.vdot(v, v).real


balance_nabla_term.order = ORDER_COVARIANT


def _order(fn) -> int:
    return getattr(fn, "order", ORDER_SECOND_COVARIANT)


def check_phase_invariance(f: Immersion, evaluator, plan: UMPlan, diff=DEFAULT_DIFF, draws: int = 5,
                           tol: float = PHASE_TOL) -> float:
    """Max relative change of the integrand under random fiber phases."""
    rng = np.random.default_rng(plan.seed + 101)
    idx = rng.choice(len(plan.samples), size=min(draws, len(plan.samples)), replace=False)
    worst = 0.0
    for i in idx:
        s = plan.samples[int(i)]
        G = LocalGeometry(f, s.z, _order(evaluator), s.chart, diff)
        base = evaluator(G, s.u)
        for th in rng.uniform(0, 2 * np.pi, 5):
            val = evaluator(G, np.exp(1j * th) * s.u)
            worst = max(worst, abs(val - base) / max(1.0, abs(base)))
    if worst > tol:
        raise PhaseVarianceError(f"integrand is not phase invariant (change {worst:.2e})")
    return worst


@dataclass(frozen=True)
class IntegralEstimate:
    estimate: complex
    standard_error: float
    abs_mass: float          # integral of |integrand|, sets the round-off floor
    replicates: tuple

    @property
    def floor(self) -> float:
        return ROUNDOFF_FLOOR * max(1.0, self.abs_mass)

    def consistent_with_zero(self, k: float = 3.0) -> bool:
        return abs(self.estimate) <= k * self.standard_error + self.floor

    def to_dict(self) -> dict:
        return {
            "estimate": [float(np.real(self.estimate)), float(np.imag(self.estimate))],
            "standardError": self.standard_error,
            "absMass": self.abs_mass,
            "roundoffFloor": self.floor,
            "withinThreeSE": self.consistent_with_zero(),
        }


def integrate(f: Immersion, evaluators: dict, plan: UMPlan, diff: DifferentiationConfig = DEFAULT_DIFF) -> dict:
    """Integrate several integrands over one plan, sharing the local geometry."""
    order = max(_order(fn) for fn in evaluators.values())
    sums = {k: np.zeros(plan.replicates, dtype=np.complex128) for k in evaluators}
    mass = {k: np.zeros(plan.replicates) for k in evaluators}

    def values(s):
        G = LocalGeometry(f, s.z, order, s.chart, diff)
        return {k: fn(G, s.u) for k, fn in evaluators.items()}

    # accumulate in plan order so the sums do not depend on the worker count
    for s, vals in zip(plan.samples, ordered_map(values, plan.samples)):
        for k, val in vals.items():
            sums[k][s.replicate] += s.weight * val
            mass[k][s.replicate] += s.weight * abs(val)
    out = {}
    for k in evaluators:
        est, se = jackknife(sums[k])
        out[k] = IntegralEstimate(complex(est), se, float(mass[k].mean()), tuple(complex(x) for x in sums[k]))
    return out


def ros_integral(f: Immersion, evaluator, plan: UMPlan, diff: DifferentiationConfig = DEFAULT_DIFF) -> IntegralEstimate:
    """Integral over UM of a covariant-derivative integrand (expected to vanish)."""
    check_phase_invariance(f, evaluator, plan, diff)
    return integrate(f, {"value": evaluator}, plan, diff)["value"]


@dataclass(frozen=True)
class BalanceIntegrals:
    curvature_term: IntegralEstimate
    nabla_term: IntegralEstimate
    residual: float
    inconclusive: bool
    trivial: bool

    def to_dict(self) -> dict:
        return {
            "curvatureTerm": self.curvature_term.to_dict(),
            "nablaSigmaTerm": self.nabla_term.to_dict(),
            "balanceResidual": self.residual,
            "inconclusive": self.inconclusive,
            "trivial": self.trivial,
        }


def balance_integrals(f: Immersion, plan: UMPlan, diff: DifferentiationConfig = DEFAULT_DIFF,
                  trivial_level: float = 1e-6) -> BalanceIntegrals:
    """Both integrals of the balance identity and |sum| / max(|terms|)."""
    for fn in (balance_curvature_term, balance_nabla_term):
        check_phase_invariance(f, fn, plan, diff)
    res = integrate(f, {"curv": balance_curvature_term, "nabla": balance_nabla_term}, plan, diff)
    c, n = res["curv"], res["nabla"]
    big = max(abs(c.estimate), abs(n.estimate))
    trivial = big < trivial_level
    residual = 0.0 if trivial else float(abs(c.estimate + n.estimate) / big)
    inconclusive = (not trivial) and any(
        t.standard_error > 0.1 * abs(t.estimate) for t in (c, n)
    )
    return BalanceIntegrals(c, n, residual, inconclusive, trivial)


def um_integrals(f: Immersion, plan: UMPlan, diff: DifferentiationConfig = DEFAULT_DIFF) -> dict:
    """One sweep: vanishing integral of nabla^2 T and both balance terms."""
    evals = {"ros": second_covariant_T, "curv": balance_curvature_term, "nabla": balance_nabla_term}
    for fn in evals.values():
        check_phase_invariance(f, fn, plan, diff)
    return integrate(f, evals, plan, diff)


def closed_form_volume(f: Immersion) -> float | None:
    """Riemannian volume of M for catalog members with a known value (Hol <= 2 normalization).

    A degree-d curve covers the Hol-2 line d times (area 2 pi d); CP^m has
    volume (2 pi)^m / m!; Gr_k(C^{k+l}) is 2^{kl} times the Lebesgue mass of
    its big-cell density.
    """
    name = f.catalog_id.split(":")[0]
    if name == "veronese":
        return 2 * np.pi * f.params["d"]
    if name == "tensor_embedding":
        return 2 * np.pi * f.params["q"]
    if name == "linear":
        return (2 * np.pi) ** f.m / factorial(f.m)
    if name == "segre":
        return (2 * np.pi) ** 2
    if name == "pluecker":
        return 2.0**4 * grassmannian_volume(2, 2)
    if name == "identity":
        p, n = f.params["p"], f.params["n"]
        return 2.0 ** f.m * grassmannian_volume(p, n - p)
    return None
