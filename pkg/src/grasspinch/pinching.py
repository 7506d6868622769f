"""Minimum holomorphic sectional curvature, parallelism of sigma, and the verdict.

The pinching statement tested here: for a holomorphic isometric immersion
whose pulled-back quotient bundle is projectively flat, Hol^M >= 1/q holds
everywhere exactly when sigma is parallel. Both sides are measured
numerically and compared; a disagreement is reported, never reconciled.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from . import kernels
from .flatness import FlatnessReport, PointPlan, flatness_residual, point_plan, random_unit_vectors
from .immersion import DEFAULT_DIFF, DifferentiationConfig, Immersion
from .linalg import max_hermitian_eigenpair, orthonormal_basis_for
from .submanifold import (
    ORDER_COVARIANT,
    ORDER_SECOND_COVARIANT,
    ORDER_SIGMA,
    LocalGeometry,
    hol_extrinsic,
    unit_vector,
)

PINCH_TOL = 1e-3
PAR_TOL = 1e-3
POLARIZATION_CONSTANT = 4.5  # 3^3 / 3! for symmetric trilinear forms
VACUOUS_SIGMA = 1e-10


class BudgetWarning(RuntimeWarning):
    """Local refinement stopped before convergence."""


# --------------------------------------------------------------------------
# minimum of Hol^M over the unit tangent bundle
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SearchPlan:
    grid: int = 15          # base grid points per real axis (m = 1) or log2-ish base count (m >= 2)
    fiber: int = 16         # fiber samples per base point (m >= 2)
    refine: int = 10        # candidates sent to local descent
    max_iter: int = 400
    seed: int = 0

    def __post_init__(self):
        if self.grid < 2 or self.fiber < 1 or self.refine < 0 or self.max_iter < 1:
            raise ValueError("search plan needs grid >= 2 and positive budgets")

    def doubled(self) -> "SearchPlan":
        # nested refinement: every old grid node survives
        return SearchPlan(2 * self.grid - 1, 2 * self.fiber, self.refine, self.max_iter, self.seed)


@dataclass(frozen=True)
class MinHolResult:
    min_hol: float
    chart: int
    z: np.ndarray
    u: np.ndarray
    grid_min: float
    sampling_gap: float       # coarse-subgrid minimum minus full-grid minimum
    evaluations: int
    converged: bool
    samples: tuple = field(default=(), repr=False)  # (chart, z, fiber params, hol)

    def to_dict(self) -> dict:
        return {
            "minHol": self.min_hol,
            "argmin": {"chart": self.chart, "z": _cplx(self.z), "u": _cplx(self.u)},
            "gridMin": self.grid_min,
            "samplingGap": self.sampling_gap,
            "evaluations": self.evaluations,
            "converged": self.converged,
        }


def _cplx(a) -> list:
    return [[float(np.real(x)), float(np.imag(x))] for x in np.ravel(a)]


def _hol_at(f, z, chart, diff, c=None):
    """Hol^M at z along the orthonormal-frame direction c (m = 1: the only direction)."""
    G = LocalGeometry(f, z, ORDER_SIGMA, chart, diff)
    if c is None:
        u, _ = unit_vector(G, np.ones(1))
    else:
        c = np.asarray(c, dtype=np.complex128)
        u = orthonormal_basis_for(G.g) @ (c / np.linalg.norm(c))
    return hol_extrinsic(G, u), u


def _grid_axis(f: Immersion, N: int) -> np.ndarray:
    r = f.chart_radius
    return np.linspace(-r, r, N)


def _min_hol_curve(f, plan, diff, keep_samples):
    N = plan.grid
    axis = _grid_axis(f, N)
    coarse = (N % 2 == 1) and N >= 3
    vals = []
    samples = []
    best_coarse = np.inf
    for chart in range(len(f.atlas)):
        for i, x in enumerate(axis):
            for j, y in enumerate(axis):
                z = np.array([x + 1j * y])
                h, u = _hol_at(f, z, chart, diff)
                vals.append((h, chart, i * N + j, z, u))
                if coarse and i % 2 == 0 and j % 2 == 0:
                    best_coarse = min(best_coarse, h)
                if keep_samples:
                    samples.append((chart, z, (), h))
    return vals, (best_coarse if coarse else np.nan), samples


def _min_hol_surface(f, plan, diff, keep_samples):
    rng = np.random.default_rng(plan.seed)
    k = max(1, int(np.ceil(np.log2(plan.grid))))
    r = f.chart_radius
    vals = []
    samples = []
    best_coarse = np.inf
    for chart in range(len(f.atlas)):
        sob = qmc.Sobol(2 * f.m, scramble=True, seed=plan.seed + chart)
        pts = sob.random_base2(k) * 2 * r - r
        for idx, x in enumerate(pts):
            z = x[: f.m] + 1j * x[f.m:]
            G = LocalGeometry(f, z, ORDER_SIGMA, chart, diff)
            E = orthonormal_basis_for(G.g)
            c = rng.standard_normal((plan.fiber, f.m)) + 1j * rng.standard_normal((plan.fiber, f.m))
            c /= np.linalg.norm(c, axis=1, keepdims=True)
            us = c @ E.T
            hs = kernels.hol_batch(G.Yvals, G.sigma_values, us)
            for t, h in enumerate(hs):
                vals.append((float(h), chart, idx * plan.fiber + t, z, us[t]))
                if keep_samples:
                    samples.append((chart, z, tuple(c[t]), float(h)))
            if idx < len(pts) // 2:
                best_coarse = min(best_coarse, float(hs[: max(1, plan.fiber // 2)].min()))
    return vals, best_coarse, samples


def min_hol(f: Immersion, plan: SearchPlan = SearchPlan(), diff: DifferentiationConfig = DEFAULT_DIFF,
            keep_samples: bool = False) -> MinHolResult:
    """Sampled minimum of Hol^M over unit (1,0) vectors, refined by Nelder-Mead.

    For m = 1 the fiber collapses to a point (Hol is phase invariant), so the
    search runs over a nested square grid in every chart. For m >= 2 base
    points come from a scrambled Sobol sequence and fiber directions are
    Gaussian samples in an h_M-orthonormal frame.
    """
    if f.m == 1:
        vals, coarse, samples = _min_hol_curve(f, plan, diff, keep_samples)
    else:
        vals, coarse, samples = _min_hol_surface(f, plan, diff, keep_samples)
    vals.sort(key=lambda t: (t[0], t[1], t[2]))
    h0, chart0, _, z0, u0 = vals[0]
    best = (h0, chart0, z0, u0)
    evaluations = len(vals)
    converged = True
    lim = 2.0 * f.chart_radius
    for h, chart, _, z, u in vals[: plan.refine]:
        if f.m == 1:
            def obj(x, chart=chart):
                zz = np.clip(x, -lim, lim)
                return _hol_at(f, np.array([zz[0] + 1j * zz[1]]), chart, diff)[0]
            x0 = np.array([z[0].real, z[0].imag])
        else:
            G = LocalGeometry(f, z, ORDER_SIGMA, chart, diff)
            E = orthonormal_basis_for(G.g)
            Einv = np.linalg.inv(E)
            Y, S = G.Yvals, G.sigma_values

            def obj(x, E=E, Y=Y, S=S):
                c = x[: f.m] + 1j * x[f.m:]
                nrm = np.linalg.norm(c)
                if nrm < 1e-12:
                    return 10.0
                return float(kernels.hol_batch(Y, S, (E @ (c / nrm))[None, :])[0])
            c0 = Einv @ u
            x0 = np.concatenate([c0.real, c0.imag])
        res = minimize(obj, x0, method="Nelder-Mead",
                       options={"xatol": 1e-7, "fatol": 1e-12, "maxiter": plan.max_iter, "maxfev": 2 * plan.max_iter})
        evaluations += int(res.nfev)
        converged &= bool(res.success)
        if res.fun < best[0] - 1e-15:
            if f.m == 1:
                x = np.clip(res.x, -lim, lim)
                zb = np.array([x[0] + 1j * x[1]])
                hb, ub = _hol_at(f, zb, chart, diff)
                best = (hb, chart, zb, ub)
            else:
                c = res.x[: f.m] + 1j * res.x[f.m:]
                best = (float(res.fun), chart, z, E @ (c / np.linalg.norm(c)))
    if not converged:
        warnings.warn("min_hol refinement hit its iteration budget; returning best-so-far", BudgetWarning)
    gap = float(coarse - h0) if np.isfinite(coarse) else float("nan")
    return MinHolResult(
        min_hol=float(best[0]), chart=int(best[1]), z=np.asarray(best[2]), u=np.asarray(best[3]),
        grid_min=float(h0), sampling_gap=gap, evaluations=evaluations, converged=converged,
        samples=tuple(samples),
    )


# --------------------------------------------------------------------------
# parallelism of sigma
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ParallelismResult:
    max_norm: float             # sampled max |nabla sigma(u, u, u)| over unit u
    max_frobenius: float        # max full norm of nabla sigma in an orthonormal frame
    polarization_bound: float   # bound on the operator norm from the sampled maximum
    samples: int

    def to_dict(self) -> dict:
        return {
            "maxNablaSigma": self.max_norm,
            "maxFrobenius": self.max_frobenius,
            "polarizationBound": self.polarization_bound,
            "polarizationConstant": POLARIZATION_CONSTANT,
            "samples": self.samples,
        }


def nabla_sigma_frobenius(G: LocalGeometry) -> float:
    E = orthonormal_basis_for(G.g)
    T = np.einsum("kijx,ka,ib,jc->abcx", G.nabla_sigma_values, E, E, E)
    return float(np.linalg.norm(T))


def parallelism_norm(f: Immersion, plan: PointPlan, diff: DifferentiationConfig = DEFAULT_DIFF) -> ParallelismResult:
    rng = np.random.default_rng(plan.seed + 11)
    worst = 0.0
    frob = 0.0
    count = 0
    for chart, z in plan.points:
        G = LocalGeometry(f, z, ORDER_COVARIANT, chart, diff)
        E = orthonormal_basis_for(G.g)
        dirs = list(E.T) if f.m == 1 else list(E.T) + list(random_unit_vectors(G, plan.directions, rng))
        for u in dirs:
            v = G.nabla_sigma(u, u, u)
            worst = max(worst, float(np.linalg.norm(v)))
            count += 1
        frob = max(frob, nabla_sigma_frobenius(G))
    return ParallelismResult(worst, frob, POLARIZATION_CONSTANT * worst, count)


# --------------------------------------------------------------------------
# pointwise identities
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SecondCovariantIdentity:
    lhs: complex
    rhs: float
    sigma_sq: float
    shape_sq: float
    nabla_sq: float

    @property
    def residual(self) -> float:
        return float(abs(self.lhs - self.rhs))


def second_covariant_identity(f: Immersion, z, u, chart: int = 0, diff: DifferentiationConfig = DEFAULT_DIFF,
                              geom: LocalGeometry | None = None) -> SecondCovariantIdentity:
    """Both sides of (nabla^2 T)(ubar, u, u, u, ubar, ubar) = 3/q (|s|^2 - q |A_s ubar|^2) + |nabla sigma(u,u,u)|^2."""
    G = geom if geom is not None else LocalGeometry(f, z, ORDER_SECOND_COVARIANT, chart, diff)
    u, _ = unit_vector(G, u)
    s = G.sigma(u, u)
    A = G.shape(s, u, check=False)
    ns = G.nabla_sigma(u, u, u)
    s2 = float(np.vdot(s, s).real)
    a2 = float(np.vdot(A, A).real)
    n2 = float(np.vdot(ns, ns).real)
    rhs = 3.0 / f.q * (s2 - f.q * a2) + n2
    return SecondCovariantIdentity(G.second_covariant_T(u), rhs, s2, a2, n2)


def second_covariant_residual(f: Immersion, z, u, chart: int = 0, diff: DifferentiationConfig = DEFAULT_DIFF,
                   geom: LocalGeometry | None = None) -> float:
    return second_covariant_identity(f, z, u, chart, diff, geom).residual


@dataclass(frozen=True)
class SigmaShapeIdentity:
    residual: float       # | |sigma(u,u)|^2 - q |A_{sigma(u,u)} ubar|^2 |
    sigma_sq: float
    shape_sq: float
    bound_holds: bool     # |sigma(u,u)|^2 <= 1/q (within tolerance)


def sigma_shape_residual(f: Immersion, z, u, chart: int = 0, diff: DifferentiationConfig = DEFAULT_DIFF,
                   geom: LocalGeometry | None = None, tol: float = 1e-6) -> SigmaShapeIdentity:
    G = geom if geom is not None else LocalGeometry(f, z, ORDER_SIGMA, chart, diff)
    u, _ = unit_vector(G, u)
    s = G.sigma(u, u)
    A = G.shape(s, u, check=False)
    s2 = float(np.vdot(s, s).real)
    a2 = float(np.vdot(A, A).real)
    return SigmaShapeIdentity(abs(s2 - f.q * a2), s2, a2, s2 <= 1.0 / f.q + tol)


@dataclass(frozen=True)
class LambdaChain:
    vacuous: bool
    lam: float = float("nan")
    e: np.ndarray | None = None
    shape_sq: float = float("nan")      # |A_xi ubar|^2
    sigma_e_sq: float = float("nan")    # |sigma(e, e)|^2
    lam_identity_residual: float = float("nan")   # |lambda - h(xi, sigma(e,e))|
    slacks: dict = field(default_factory=dict)

    @property
    def worst_slack(self) -> float:
        return min(self.slacks.values()) if self.slacks else float("nan")

    def to_dict(self) -> dict:
        return {
            "vacuous": self.vacuous,
            "lambda": self.lam,
            "shapeSq": self.shape_sq,
            "sigmaEESq": self.sigma_e_sq,
            "lambdaIdentityResidual": self.lam_identity_residual,
            "slacks": dict(self.slacks),
        }


def realified_shape_operator(G: LocalGeometry, xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Real 2m x 2m matrix of B = A_xi o tau in an h_M-orthonormal frame.

    Coordinates x in R^{2m} stand for the chart vector E (x[:m] + i x[m:]);
    the real inner product is Re h.
    """
    m = G.m
    E = orthonormal_basis_for(G.g)
    Einv = np.linalg.inv(E)
    B = np.empty((2 * m, 2 * m))
    for k in range(2 * m):
        x = np.zeros(2 * m)
        x[k] = 1.0
        w = E @ (x[:m] + 1j * x[m:])
        c = Einv @ G.shape_coefficients(xi, w)
        B[:, k] = np.concatenate([c.real, c.imag])
    return B, E


def lambda_chain(f: Immersion, z, u, chart: int = 0, diff: DifferentiationConfig = DEFAULT_DIFF,
                 geom: LocalGeometry | None = None) -> LambdaChain:
    """|A_xi ubar|^2 <= lambda^2 <= |sigma(e,e)|^2 <= 1/q with xi = sigma(u,u)/|sigma(u,u)|.

    Slacks are reported for each inequality; negative slack means the
    inequality fails at this sample.
    """
    G = geom if geom is not None else LocalGeometry(f, z, ORDER_SIGMA, chart, diff)
    u, _ = unit_vector(G, u)
    s = G.sigma(u, u)
    ns = np.linalg.norm(s)
    if ns < VACUOUS_SIGMA:
        return LambdaChain(vacuous=True)
    xi = s / ns
    B, E = realified_shape_operator(G, xi)
    lam, x = max_hermitian_eigenpair(B)
    m = G.m
    e = E @ (x[:m] + 1j * x[m:])
    A = G.shape(xi, u, check=False)
    a2 = float(np.vdot(A, A).real)
    se = G.sigma(e, e)
    se2 = float(np.vdot(se, se).real)
    lam_id = abs(lam - np.vdot(se, xi))  # lambda = h(xi, sigma(e, e))
    slacks = {
        "shapeVsLambda": lam**2 - a2,
        "lambdaVsSigma": se2 - lam**2,
        "sigmaVsThreshold": 1.0 / f.q - se2,
    }
    return LambdaChain(False, float(lam), e, a2, se2, float(lam_id), slacks)


# --------------------------------------------------------------------------
# verdict
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class VerdictConfig:
    search: SearchPlan = SearchPlan()
    density: int = 3            # per-axis chart grid for flatness / parallelism sampling
    directions: int = 4
    identity_samples: int = 20  # random (z, u) draws for the pointwise identities
    pinch_tol: float = PINCH_TOL
    par_tol: float = PAR_TOL
    flat_gate: float = 1e-6
    second_covariant_tol: float = 1e-3
    seed: int = 0
    diff: DifferentiationConfig = DEFAULT_DIFF


@dataclass(frozen=True)
class PinchingVerdict:
    status: str                     # pass | fail | hypothesis-not-met
    threshold: float
    flatness: FlatnessReport
    min_hol: MinHolResult | None = None
    parallelism: ParallelismResult | None = None
    pinched: bool | None = None
    parallel: bool | None = None
    second_covariant_max_residual: float | None = None
    sigma_shape_max_residual: float | None = None
    sigma_bound_holds: bool | None = None
    lambda_chain_worst_slack: float | None = None
    lambda_chain_vacuous: bool | None = None
    lambda_boundary_gap: float | None = None   # min over samples of 1/q - |sigma(e,e)|^2
    notes: tuple = ()

    @property
    def agrees(self) -> bool | None:
        if self.pinched is None:
            return None
        return self.pinched == self.parallel

    @property
    def min_hol_value(self) -> float | None:
        return None if self.min_hol is None else self.min_hol.min_hol

    @property
    def max_nabla_sigma(self) -> float | None:
        return None if self.parallelism is None else self.parallelism.max_norm

    def headline(self) -> str:
        if self.status == "hypothesis-not-met":
            return (f"verdict: hypothesis not met (pulled-back quotient not projectively flat, "
                    f"residual {self.flatness.max_residual:.3e})")
        return (f"verdict: {'pinched' if self.pinched else 'not pinched'} "
                f"(minHol {self.min_hol_value:.6f} vs 1/q = {self.threshold:.6f}), "
                f"{'parallel' if self.parallel else 'not parallel'} "
                f"(max |nabla sigma(u,u,u)| {self.max_nabla_sigma:.3e}); "
                f"biconditional {'holds' if self.agrees else 'VIOLATED'}")

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "threshold": self.threshold,
            "minHol": self.min_hol.to_dict() if self.min_hol else None,
            "parallelism": self.parallelism.to_dict() if self.parallelism else None,
            "pinched": self.pinched,
            "parallel": self.parallel,
            "biconditionalAgrees": self.agrees,
            "secondCovariantMaxResidual": self.second_covariant_max_residual,
            "sigmaShapeMaxResidual": self.sigma_shape_max_residual,
            "sigmaBoundHolds": self.sigma_bound_holds,
            "lambdaChainWorstSlack": self.lambda_chain_worst_slack,
            "lambdaChainVacuous": self.lambda_chain_vacuous,
            "lambdaBoundaryGap": self.lambda_boundary_gap,
            "notes": list(self.notes),
        }


def random_chart_samples(f: Immersion, k: int, seed: int, scale: float = 0.9):
    """k draws (chart, z, u) with z uniform in the chart polydisc and u a random chart vector."""
    rng = np.random.default_rng(seed)
    r = scale * f.chart_radius
    out = []
    for _ in range(k):
        chart = int(rng.integers(len(f.atlas)))
        rad = r * np.sqrt(rng.uniform(0, 1, f.m))
        z = rad * np.exp(2j * np.pi * rng.uniform(0, 1, f.m))
        u = rng.standard_normal(f.m) + 1j * rng.standard_normal(f.m)
        out.append((chart, z, u))
    return out


def pinching_verdict(f: Immersion, config: VerdictConfig = VerdictConfig()) -> PinchingVerdict:
    plan = point_plan(f, config.density, config.directions, config.seed)
    flat = flatness_residual(f, plan, config.diff, gate=config.flat_gate)
    q = f.q
    if not flat.flat:
        return PinchingVerdict("hypothesis-not-met", 1.0 / q, flat)
    notes = list(flat.notes)
    mh = min_hol(f, config.search, config.diff)
    par = parallelism_norm(f, plan, config.diff)
    pinched = mh.min_hol >= 1.0 / q - config.pinch_tol
    parallel = par.max_norm <= config.par_tol
    e_cov = 0.0
    e_shape = 0.0
    bound = True
    worst_slack = np.inf
    boundary_gap = np.inf
    all_vacuous = True
    for chart, z, u in random_chart_samples(f, config.identity_samples, config.seed + 7):
        G = LocalGeometry(f, z, ORDER_SECOND_COVARIANT, chart, config.diff)
        e_cov = max(e_cov, second_covariant_residual(f, z, u, geom=G))
        r_shape = sigma_shape_residual(f, z, u, geom=G)
        e_shape = max(e_shape, r_shape.residual)
        bound &= r_shape.bound_holds
        lc = lambda_chain(f, z, u, geom=G)
        if not lc.vacuous:
            all_vacuous = False
            worst_slack = min(worst_slack, lc.worst_slack)
            boundary_gap = min(boundary_gap, lc.slacks["sigmaVsThreshold"])
    if not mh.converged:
        notes.append("min_hol refinement budget exhausted")
    if pinched != parallel:
        notes.append("pinching and parallelism disagree")
    status = "pass" if (pinched == parallel and e_cov < config.second_covariant_tol and flat.rank_check_passed) else "fail"
    return PinchingVerdict(
        status=status, threshold=1.0 / q, flatness=flat, min_hol=mh, parallelism=par,
        pinched=bool(pinched), parallel=bool(parallel),
        second_covariant_max_residual=float(e_cov), sigma_shape_max_residual=float(e_shape), sigma_bound_holds=bool(bound),
        lambda_chain_worst_slack=None if all_vacuous else float(worst_slack),
        lambda_chain_vacuous=all_vacuous,
        lambda_boundary_gap=None if all_vacuous else float(boundary_gap),
        notes=tuple(notes),
    )
