"""Second fundamental form, shape operator and covariant derivatives of f(M).

Everything is computed in a gauge-free ambient picture. Along a chart, the
plane f(z) is represented by its orthogonal projector P(z) = F (F^H F)^{-1} F^H,
and a (1,0) tangent vector of the Grassmannian by an n x n matrix X with
X = (I - P) X P. Then

* f_* d_a is Y_a = dP/dz_a,
* the Levi-Civita connection on (1,0) vectors is X -> (I - P) dX P,
* the normal bundle N is the orthogonal complement of span{Y_a} inside
  Hom(S, Q), with projector Pi_N = Pi_Hom - Pi_T,

and every derivative comes from one truncated Taylor jet of P in the Wirtinger
variables (dz, dzbar). Matrices are flattened row-major when a vector is
needed (vec(X)[i*n + j] = X[i, j]), so h(X, Y) = vdot(vec Y, vec X).

Intrinsic quantities (Christoffel symbols, R^M) are derived from the induced
metric alone; extrinsic ones (sigma, A, R^N) from the ambient projectors. The
Gauss, Ricci and Codazzi checks therefore compare independent computations.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .grassmann import AmbientTangent, GrassmannPoint, curvature_Gr_ambient, hol_sectional_ambient
from .immersion import DEFAULT_DIFF, DifferentiationConfig, Immersion, ImmersionError
from .jets import TaylorJet
from .linalg import TOL_ALGEBRAIC, adjoint

# jet order needed by each family of quantities
ORDER_FIRST = 1      # metric, pushforward, flatness
ORDER_SIGMA = 2      # sigma, A (both routes)
ORDER_COVARIANT = 3  # nabla sigma, R^M, R^N
ORDER_SECOND_COVARIANT = 4  # second covariant derivative of T


class NotNormalError(ValueError):
    """Input to the shape operator has a tangential component."""


def _hom_part(Pc: TaylorJet, P: TaylorJet, coeffs: np.ndarray, b) -> np.ndarray:
    """Pc X_k P for a stack of jets X_k; ``coeffs`` is (M, k, n, n)."""
    M, k, n, _ = coeffs.shape
    wide = TaylorJet(b, np.ascontiguousarray(coeffs.transpose(0, 2, 1, 3).reshape(M, n, k * n)))
    left = (Pc.truncate(b.order) @ wide).coeffs.reshape(M, n, k, n).transpose(0, 2, 1, 3)
    tall = TaylorJet(b, np.ascontiguousarray(left.reshape(M, k * n, n)))
    return (tall @ P.truncate(b.order)).coeffs.reshape(M, k, n, n)


def _as_vector(u, m: int) -> np.ndarray:
    u = np.asarray(u, dtype=np.complex128).reshape(-1)
    if u.shape[0] != m:
        raise ValueError(f"chart vector of length {u.shape[0]} for an m={m} manifold")
    return u


class LocalGeometry:
    """Taylor data of f around one chart point, up to jet order ``order``."""

    def __init__(self, f: Immersion, z, order: int = ORDER_SIGMA, chart: int = 0,
                 diff: DifferentiationConfig = DEFAULT_DIFF):
        self.f = f
        self.z = np.asarray(z, dtype=np.complex128).reshape(f.m)
        self.chart = chart
        self.order = order
        self.diff = diff
        m, n = f.m, f.n
        self.m, self.n = m, n
        F = f.frame_jet(self.z, order, chart, diff)
        if np.linalg.svd(F.value, compute_uv=False)[-1] < 1e-12:
            raise ImmersionError(f"chart map of {f.catalog_id} is rank deficient at z={self.z}")
        self.P = F @ (F.H @ F).inv() @ F.H
        self.Pc = np.eye(n) - self.P
        if order < 1:
            raise ValueError("local geometry needs jet order >= 1")
        b1 = self.P.basis if order == 1 else None
        Ys = [self.P.d(a) for a in range(m)]
        bY = Ys[0].basis
        self.Ymat = TaylorJet(bY, np.stack([Y.coeffs.reshape(bY.size, n * n) for Y in Ys], axis=-1))
        self.Gm = self.Ymat.H @ self.Ymat          # Gm[b, a] = h(Y_a, Y_b)
        self.Gmi = self.Gm.inv()
        self.Yvals = self.Ymat.value.T.copy()       # (m, n*n)
        self.g = self.Gm.value.T.copy()             # g[i, j] = h(d_i, d_j)
        if np.linalg.eigvalsh(self.g)[0] <= 1e-12:
            raise ImmersionError(f"{f.catalog_id} is not immersive at z={self.z}")
        self.ginv = np.linalg.inv(self.g)
        self.P0 = self.P.value
        self.Pc0 = self.Pc.value
        del b1

    # -- point data ----------------------------------------------------------
    @cached_property
    def point(self) -> GrassmannPoint:
        return GrassmannPoint.from_frame(self.f.chart_map(self.z, self.chart))

    @cached_property
    def tangent_projector(self) -> np.ndarray:
        Y = self.Ymat.value
        return Y @ np.linalg.solve(self.Gm.value, adjoint(Y))

    def normal_part(self, X: np.ndarray) -> np.ndarray:
        """Pi_N of an n x n matrix (first projected to Hom(S, Q))."""
        H = self.Pc0 @ X @ self.P0
        return H - (self.tangent_projector @ H.reshape(-1)).reshape(self.n, self.n)

    def tangential_coefficients(self, X: np.ndarray) -> np.ndarray:
        """c with Pi_T X = sum_a c_a Y_a."""
        return np.linalg.solve(self.Gm.value, adjoint(self.Ymat.value) @ X.reshape(-1))

    def tangent(self, u) -> np.ndarray:
        u = _as_vector(u, self.m)
        return (u @ self.Yvals).reshape(self.n, self.n)

    def metric(self, u, v) -> complex:
        """h_M(u, v), linear in u."""
        return complex(_as_vector(v, self.m).conj() @ self.g.T @ _as_vector(u, self.m))

    def to_frame(self, X: np.ndarray) -> AmbientTangent:
        return AmbientTangent.from_ambient(self.point, X)

    def from_frame(self, V) -> np.ndarray:
        if isinstance(V, AmbientTangent):
            if np.abs(V.base.projector - self.P0).max() > 1e-8:
                raise ValueError("tangent vector is not based at f(z)")
            return V.ambient()
        return np.asarray(V, dtype=np.complex128)

    @cached_property
    def normal_frame(self) -> np.ndarray:
        """Orthonormal basis of N (k, n, n), k = pq - m."""
        PiN = np.kron(self.Pc0, self.P0.T) - self.tangent_projector
        w, V = np.linalg.eigh(0.5 * (PiN + adjoint(PiN)))
        keep = V[:, w > 0.5]
        return np.ascontiguousarray(keep.T.reshape(-1, self.n, self.n))

    # -- second fundamental form ---------------------------------------------
    def _require(self, order: int, what: str):
        if self.order < order:
            raise ValueError(f"{what} needs jet order {order}, geometry built with {self.order}")

    @cached_property
    def _second_derivatives(self):
        # Hom(S, Q) part of d_i Y_j as jets, shape (M, m*m, n, n)
        self._require(ORDER_SIGMA, "sigma")
        m, n = self.m, self.n
        Ys = [self.P.d(a) for a in range(m)]
        D = [Ys[j].d(i) for i in range(m) for j in range(m)]
        b = D[0].basis
        C = np.stack([d.coeffs for d in D], axis=1)
        return b, _hom_part(self.Pc, self.P, C, b)

    @cached_property
    def sigma_jet(self) -> TaylorJet:
        """Columns vec(sigma(d_i, d_j)), column index i*m + j."""
        b, H = self._second_derivatives
        n2 = self.n * self.n
        X = TaylorJet(b, np.ascontiguousarray(H.reshape(b.size, -1, n2).transpose(0, 2, 1)))
        return X - self.Ymat @ self.christoffel_jet

    @cached_property
    def christoffel_jet(self) -> TaylorJet:
        """Gamma^c_ij as an m x m^2 jet (row c, column i*m + j)."""
        b, H = self._second_derivatives
        n2 = self.n * self.n
        X = TaylorJet(b, np.ascontiguousarray(H.reshape(b.size, -1, n2).transpose(0, 2, 1)))
        return self.Gmi @ (self.Ymat.H @ X)

    @cached_property
    def sigma_values(self) -> np.ndarray:
        """(m, m, n*n) array of vec sigma(d_i, d_j)."""
        return self.sigma_jet.value.T.reshape(self.m, self.m, self.n * self.n).copy()

    @cached_property
    def christoffel(self) -> np.ndarray:
        """Gamma[c, i, j]."""
        return self.christoffel_jet.value.reshape(self.m, self.m, self.m).copy()

    def sigma(self, u, v) -> np.ndarray:
        u, v = _as_vector(u, self.m), _as_vector(v, self.m)
        s = np.einsum("i,j,ijx->x", u, v, self.sigma_values)
        return s.reshape(self.n, self.n)

    def sigma_mixed(self, u, v) -> np.ndarray:
        """Normal part of the ambient derivative of f_* v along ubar (vanishes)."""
        self._require(ORDER_SIGMA, "sigma")
        u, v = _as_vector(u, self.m), _as_vector(v, self.m)
        Yv = self.P.dz(v)
        return self.normal_part(Yv.dzbar(u).value)

    # -- shape operator -------------------------------------------------------
    def _check_normal(self, xi: np.ndarray, tol: float = 1e-8):
        H = self.Pc0 @ xi @ self.P0
        tang = (self.tangent_projector @ H.reshape(-1)).reshape(self.n, self.n)
        off = np.linalg.norm(xi - H) + np.linalg.norm(tang)
        if off > tol * max(1.0, np.linalg.norm(xi)):
            raise NotNormalError(f"vector is not normal (off-normal part {off:.2e})")

    def shape_coefficients(self, xi: np.ndarray, u) -> np.ndarray:
        """Chart components a of A_xi ubar, from duality with sigma."""
        u = _as_vector(u, self.m)
        xv = xi.reshape(-1)
        b = np.array([np.vdot(xv, np.einsum("i,ix->x", u, self.sigma_values[:, j])) for j in range(self.m)])
        # h(d_j, A) = b_j  <=>  g conj(a) = b
        return np.conj(np.linalg.solve(self.g, b))

    def shape(self, xi: np.ndarray, u, check: bool = True) -> np.ndarray:
        """A_xi ubar as an ambient matrix."""
        xi = np.asarray(xi, dtype=np.complex128)
        if check:
            self._check_normal(xi)
        return self.tangent(self.shape_coefficients(xi, u))

    def _normal_extension(self, xi0: np.ndarray) -> TaylorJet:
        # z -> Pi_N(z) xi0, a smooth normal field through xi0
        self._require(ORDER_SIGMA, "normal extension")
        b = self.Ymat.basis
        P, Pc = self.P.truncate(b.order), self.Pc.truncate(b.order)
        H = Pc @ TaylorJet.constant(xi0, self.m, b.order) @ P
        vecH = H.reshape(self.n * self.n, 1)
        T = self.Ymat @ (self.Gmi @ (self.Ymat.H @ vecH))
        return (vecH - T).reshape(self.n, self.n)

    def shape_by_derivative(self, xi: np.ndarray, u, bar: bool = True) -> np.ndarray:
        """-(tangential part of the ambient derivative of a normal extension of xi).

        ``bar=True`` differentiates along ubar (gives A_xi ubar), ``bar=False``
        along u (gives A_xi u, which vanishes).
        """
        xi = np.asarray(xi, dtype=np.complex128)
        self._check_normal(xi)
        ext = self._normal_extension(xi)
        d = ext.dzbar(u) if bar else ext.dz(u)
        D = self.Pc0 @ d.value @ self.P0
        return -(self.tangent_projector @ D.reshape(-1)).reshape(self.n, self.n)

    # -- covariant derivatives -----------------------------------------------
    @cached_property
    def nabla_sigma_values(self) -> np.ndarray:
        """(m, m, m, n*n): [k, i, j] = (nabla_k sigma)(d_i, d_j)."""
        self._require(ORDER_COVARIANT, "nabla sigma")
        m, n2 = self.m, self.n * self.n
        S0 = self.sigma_values
        G = self.christoffel
        out = np.empty((m, m, m, n2), dtype=np.complex128)
        for k in range(m):
            D = self.sigma_jet.d(k).value.T.reshape(m * m, self.n, self.n)
            N = np.array([self.normal_part(X).reshape(-1) for X in D]).reshape(m, m, n2)
            corr = np.einsum("ci,cjx->ijx", G[:, k, :], S0) + np.einsum("cj,icx->ijx", G[:, k, :], S0)
            out[k] = N - corr
        return out

    @cached_property
    def nabla_bar_sigma_values(self) -> np.ndarray:
        """(m, m, m, n*n): [k, i, j] = (nabla_{dbar_k} sigma)(d_i, d_j)."""
        self._require(ORDER_COVARIANT, "nabla-bar sigma")
        m, n2 = self.m, self.n * self.n
        out = np.empty((m, m, m, n2), dtype=np.complex128)
        for k in range(m):
            D = self.sigma_jet.d(m + k).value.T.reshape(m * m, self.n, self.n)
            out[k] = np.array([self.normal_part(X).reshape(-1) for X in D]).reshape(m, m, n2)
        return out

    def nabla_sigma(self, w, u, z) -> np.ndarray:
        w, u, z = (_as_vector(a, self.m) for a in (w, u, z))
        return np.einsum("k,i,j,kijx->x", w, u, z, self.nabla_sigma_values).reshape(self.n, self.n)

    def nabla_bar_sigma(self, v, u, z) -> np.ndarray:
        """(nabla_{vbar} sigma)(u, z); antilinear in v."""
        v, u, z = (_as_vector(a, self.m) for a in (v, u, z))
        return np.einsum("k,i,j,kijx->x", v.conj(), u, z, self.nabla_bar_sigma_values).reshape(self.n, self.n)

    # -- curvature ------------------------------------------------------------
    @cached_property
    def curvature_M_tensor(self) -> np.ndarray:
        """R[i, j, k, l] = h(R^M(d_k, dbar_l) d_i, d_j), from the induced metric only."""
        self._require(ORDER_COVARIANT, "intrinsic curvature")
        m = self.m
        gj = self.Gm.T  # g[i, j] as a jet
        dg = np.array([gj.d(k).value for k in range(m)])              # [k, i, j]
        dbg = np.array([gj.d(m + l).value for l in range(m)])         # [l, i, j]
        ddg = np.array([[gj.d(k).d(m + l).value for l in range(m)] for k in range(m)])  # [k, l, i, j]
        R = -np.einsum("klij->ijkl", ddg)
        R += np.einsum("qp,kiq,lpj->ijkl", self.ginv, dg, dbg)
        return R

    def curvature_M(self, u, v, z, w) -> complex:
        u, v, z, w = (_as_vector(a, self.m) for a in (u, v, z, w))
        return complex(np.einsum("ijkl,i,j,k,l->", self.curvature_M_tensor, z, w.conj(), u, v.conj()))

    @cached_property
    def _normal_projector_jet(self) -> TaylorJet:
        self._require(ORDER_SIGMA, "normal curvature")
        b = self.Ymat.basis
        PiHom = self.Pc.truncate(b.order).kron(self.P.truncate(b.order).T)
        return PiHom - self.Ymat @ self.Gmi @ self.Ymat.H

    def curvature_N(self, u, v) -> np.ndarray:
        """R^N(u, vbar) on N as an (n^2 x n^2) operator (projector-connection curvature)."""
        Pi = self._normal_projector_jet
        A = Pi.dz(_as_vector(u, self.m)).value
        B = Pi.dzbar(_as_vector(v, self.m)).value
        P0 = Pi.value
        return P0 @ (A @ B - B @ A) @ P0

    # -- second covariant derivative of T(U, V, Zbar, Wbar) = h(sigma(U,V), sigma(Z,W)) --
    def second_covariant_T(self, u) -> complex:
        """(nabla^2 T)(ubar, u; u, u, ubar, ubar) with u extended as a constant chart field."""
        self._require(ORDER_SECOND_COVARIANT, "second covariant derivative of T")
        u = _as_vector(u, self.m)
        m = self.m
        S = self.sigma_jet                               # order >= 2
        Gam = self.christoffel_jet
        uu = np.kron(u, u)
        s_uu = S @ uu.reshape(-1, 1)
        eye = np.eye(m)
        s_au = [S @ np.kron(eye[a], u).reshape(-1, 1) for a in range(m)]
        Gam_uu = Gam @ uu.reshape(-1, 1)                 # m x 1
        Sa = []
        for a in range(m):
            T_a = s_au[a].H @ s_uu                       # h(sigma_uu, sigma_au)
            corr = None
            for c in range(m):
                s_cu = S @ np.kron(eye[c], u).reshape(-1, 1)
                term = Gam_uu[c] * (s_au[a].H @ s_cu)
                corr = term if corr is None else corr + term
            Sa.append(T_a.dz(u) - 2.0 * corr.truncate(T_a.order - 1))
        total = None
        for a in range(m):
            term = Sa[a] * np.conj(u[a])
            total = term if total is None else total + term
        lhs = total.dzbar(u).value[0, 0]
        G0 = Gam_uu.value[:, 0]
        lhs -= 2.0 * sum(np.conj(G0[a]) * Sa[a].value[0, 0] for a in range(m))
        return complex(lhs)


def local_geometry(f: Immersion, z, order: int = ORDER_SIGMA, chart: int = 0,
                   diff: DifferentiationConfig = DEFAULT_DIFF) -> LocalGeometry:
    return LocalGeometry(f, z, order, chart, diff)


def _geom(f, z, order, chart, diff, geom):
    if geom is not None:
        if geom.order < order:
            raise ValueError(f"need a geometry of order >= {order}")
        return geom
    return LocalGeometry(f, z, order, chart, diff)


# --------------------------------------------------------------------------
# public operations on chart vectors
# --------------------------------------------------------------------------

def second_fundamental_form(f: Immersion, z, U, V, chart: int = 0, diff: DifferentiationConfig = DEFAULT_DIFF,
                            geom: LocalGeometry | None = None) -> AmbientTangent:
    G = _geom(f, z, ORDER_SIGMA, chart, diff, geom)
    return G.to_frame(G.sigma(U, V))


def shape_operator(f: Immersion, z, xi, Ubar, chart: int = 0, diff: DifferentiationConfig = DEFAULT_DIFF,
                   geom: LocalGeometry | None = None) -> AmbientTangent:
    """A_xi Ubar for a normal vector xi (AmbientTangent at f(z) or n x n matrix)."""
    G = _geom(f, z, ORDER_SIGMA, chart, diff, geom)
    return G.to_frame(G.shape(G.from_frame(xi), Ubar))


def nabla_sigma(f: Immersion, z, W, U, Z, chart: int = 0, diff: DifferentiationConfig = DEFAULT_DIFF,
                geom: LocalGeometry | None = None) -> AmbientTangent:
    G = _geom(f, z, ORDER_COVARIANT, chart, diff, geom)
    return G.to_frame(G.nabla_sigma(W, U, Z))


def nabla_bar_sigma(f: Immersion, z, Vbar, U, Z, chart: int = 0, diff: DifferentiationConfig = DEFAULT_DIFF,
                    geom: LocalGeometry | None = None) -> AmbientTangent:
    G = _geom(f, z, ORDER_COVARIANT, chart, diff, geom)
    return G.to_frame(G.nabla_bar_sigma(Vbar, U, Z))


def curvature_normal_part(G: LocalGeometry, U, V, Z) -> np.ndarray:
    """-(R^Gr(U, Vbar) Z)^perp as an ambient matrix."""
    R = curvature_Gr_ambient(G.tangent(U), G.tangent(V), G.tangent(Z))
    return -G.normal_part(R)


def gauss_equation_residual(f: Immersion, z, U, V, Z, W, chart: int = 0, diff: DifferentiationConfig = DEFAULT_DIFF,
                            geom: LocalGeometry | None = None) -> float:
    G = _geom(f, z, ORDER_COVARIANT, chart, diff, geom)
    lhs = G.curvature_M(U, V, Z, W)
    RGr = curvature_Gr_ambient(G.tangent(U), G.tangent(V), G.tangent(Z))
    rhs = np.vdot(G.tangent(W), RGr) - np.vdot(G.sigma(V, W), G.sigma(U, Z))
    return float(abs(lhs - rhs))


def ricci_equation_residual(f: Immersion, z, U, V, xi, eta, chart: int = 0, diff: DifferentiationConfig = DEFAULT_DIFF,
                            geom: LocalGeometry | None = None) -> float:
    G = _geom(f, z, ORDER_SIGMA, chart, diff, geom)
    xi, eta = G.from_frame(xi), G.from_frame(eta)
    RN = G.curvature_N(U, V)
    lhs = np.vdot(eta.reshape(-1), RN @ xi.reshape(-1))
    RGr = curvature_Gr_ambient(G.tangent(U), G.tangent(V), xi)
    rhs = np.vdot(eta, RGr) + np.vdot(G.shape(eta, U), G.shape(xi, V))
    return float(abs(lhs - rhs))


@dataclass(frozen=True)
class HolM:
    intrinsic: float
    extrinsic: float
    normalized: bool  # input was not unit and got rescaled

    @property
    def discrepancy(self) -> float:
        return abs(self.intrinsic - self.extrinsic)


def unit_vector(G: LocalGeometry, u) -> tuple[np.ndarray, bool]:
    u = _as_vector(u, G.m)
    nrm = G.metric(u, u).real
    if nrm <= 0:
        raise ValueError("holomorphic sectional curvature of the zero vector")
    rescaled = abs(nrm - 1.0) > TOL_ALGEBRAIC
    return u / np.sqrt(nrm), rescaled


def hol_extrinsic(G: LocalGeometry, u) -> float:
    """Hol^Gr(f_* u) - |sigma(u, u)|^2 for a unit u."""
    s = G.sigma(u, u)
    return hol_sectional_ambient(G.tangent(u)) - float(np.vdot(s, s).real)


def hol_M(f: Immersion, z, u, chart: int = 0, diff: DifferentiationConfig = DEFAULT_DIFF,
          geom: LocalGeometry | None = None) -> HolM:
    G = _geom(f, z, ORDER_COVARIANT, chart, diff, geom)
    u, rescaled = unit_vector(G, u)
    intrinsic = G.curvature_M(u, u, u, u).real
    return HolM(float(intrinsic), hol_extrinsic(G, u), rescaled)


@dataclass(frozen=True)
class FundamentalFormData:
    base_point: np.ndarray
    chart: int
    tangent_frame: tuple
    normal_frame: tuple
    sigma: tuple          # m x m nested tuple of AmbientTangent
    shape: tuple          # shape[r][j] = A_{xi_r} dbar_j
    christoffel: np.ndarray

    def symmetry_residual(self) -> float:
        m = len(self.tangent_frame)
        return max((np.linalg.norm(self.sigma[i][j].mat - self.sigma[j][i].mat)
                    for i in range(m) for j in range(m)), default=0.0)


def fundamental_form_data(f: Immersion, z, chart: int = 0, diff: DifferentiationConfig = DEFAULT_DIFF,
                          geom: LocalGeometry | None = None) -> FundamentalFormData:
    G = _geom(f, z, ORDER_SIGMA, chart, diff, geom)
    m = f.m
    eye = np.eye(m)
    tangents = tuple(G.to_frame(G.tangent(eye[a])) for a in range(m))
    normals = tuple(G.to_frame(X) for X in G.normal_frame)
    sig = tuple(tuple(G.to_frame(G.sigma(eye[i], eye[j])) for j in range(m)) for i in range(m))
    shp = tuple(tuple(G.to_frame(G.shape(X, eye[j], check=False)) for j in range(m)) for X in G.normal_frame)
    return FundamentalFormData(G.z.copy(), chart, tangents, normals, sig, shp, G.christoffel.copy())
