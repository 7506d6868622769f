"""Homogeneous geometry of Gr_p(C^n) in adapted unitary frames.

A point carries orthonormal frames for S and for S^perp (identified with Q), so
a (1,0) tangent vector is a q x p matrix in Hom(S, Q) and the bundle second
fundamental forms H, K and the curvatures R^S, R^Q, R^Gr are literal matrix
products. Sign conventions: K_Vbar = -V^H, which makes Hol = 2 on
Gr_{n-1}(C^n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import TOL_ALGEBRAIC, adjoint, complete_frame, orthonormalize


class BasePointMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GrassmannPoint:
    frameS: np.ndarray
    frameQ: np.ndarray

    @property
    def n(self) -> int:
        return self.frameS.shape[0]

    @property
    def p(self) -> int:
        return self.frameS.shape[1]

    @property
    def q(self) -> int:
        return self.frameQ.shape[1]

    @classmethod
    def from_frame(cls, F: np.ndarray) -> "GrassmannPoint":
        """Point spanned by the columns of a full-rank n x p matrix."""
        S = orthonormalize(F)
        return cls(S, complete_frame(S))

    @classmethod
    def standard(cls, n: int, p: int) -> "GrassmannPoint":
        eye = np.eye(n, dtype=np.complex128)
        return cls(eye[:, :p].copy(), eye[:, p:].copy())

    @property
    def projector(self) -> np.ndarray:
        return self.frameS @ adjoint(self.frameS)

    def unitary(self) -> np.ndarray:
        return np.hstack([self.frameS, self.frameQ])

    def invariant_residual(self) -> float:
        S, Q = self.frameS, self.frameQ
        return max(
            np.abs(adjoint(S) @ S - np.eye(self.p)).max(),
            np.abs(adjoint(Q) @ Q - np.eye(self.q)).max(),
            np.abs(adjoint(S) @ Q).max() if self.q and self.p else 0.0,
        )

    def regauge(self, WS: np.ndarray, WQ: np.ndarray) -> "GrassmannPoint":
        """Same plane, frames rotated by (WS, WQ) in U(p) x U(q)."""
        return GrassmannPoint(self.frameS @ WS, self.frameQ @ WQ)


@dataclass(frozen=True, eq=False)
class AmbientTangent:
    base: GrassmannPoint
    mat: np.ndarray  # q x p, Hom(S, Q) in the adapted frame

    def __add__(self, other: "AmbientTangent") -> "AmbientTangent":
        _same_base(self, other)
        return AmbientTangent(self.base, self.mat + other.mat)

    def __sub__(self, other: "AmbientTangent") -> "AmbientTangent":
        _same_base(self, other)
        return AmbientTangent(self.base, self.mat - other.mat)

    def __mul__(self, c) -> "AmbientTangent":
        return AmbientTangent(self.base, c * self.mat)

    __rmul__ = __mul__

    def ambient(self) -> np.ndarray:
        """n x n representative i_Q o U o pi_S (kills S^perp, lands in S^perp)."""
        return self.base.frameQ @ self.mat @ adjoint(self.base.frameS)

    @classmethod
    def from_ambient(cls, base: GrassmannPoint, X: np.ndarray) -> "AmbientTangent":
        return cls(base, adjoint(base.frameQ) @ X @ base.frameS)

    def regauge(self, WS: np.ndarray, WQ: np.ndarray) -> "AmbientTangent":
        return AmbientTangent(self.base.regauge(WS, WQ), adjoint(WQ) @ self.mat @ WS)

    def norm(self) -> float:
        return float(np.linalg.norm(self.mat))


@dataclass(frozen=True, eq=False)
class HomSQ:
    base: GrassmannPoint
    mat: np.ndarray  # q x p

    def __call__(self, s: np.ndarray) -> np.ndarray:
        return self.mat @ s


@dataclass(frozen=True, eq=False)
class HomQS:
    base: GrassmannPoint
    mat: np.ndarray  # p x q

    def __call__(self, t: np.ndarray) -> np.ndarray:
        return self.mat @ t


def _same_base(*vs: AmbientTangent) -> GrassmannPoint:
    b = vs[0].base
    for v in vs[1:]:
        if v.base is not b and not (
            np.array_equal(v.base.frameS, b.frameS) and np.array_equal(v.base.frameQ, b.frameQ)
        ):
            raise BasePointMismatch("tangent vectors live at different base points")
    return b


def project_S(x: GrassmannPoint, w: np.ndarray) -> np.ndarray:
    w = np.asarray(w)
    if w.shape[0] != x.n:
        raise ValueError(f"vector of length {w.shape[0]} does not fit C^{x.n}")
    return adjoint(x.frameS) @ w


def project_Q(x: GrassmannPoint, w: np.ndarray) -> np.ndarray:
    w = np.asarray(w)
    if w.shape[0] != x.n:
        raise ValueError(f"vector of length {w.shape[0]} does not fit C^{x.n}")
    return adjoint(x.frameQ) @ w


def include_S(x: GrassmannPoint, s: np.ndarray) -> np.ndarray:
    return x.frameS @ s


def include_Q(x: GrassmannPoint, t: np.ndarray) -> np.ndarray:
    return x.frameQ @ t


def metric(U: AmbientTangent, V: AmbientTangent) -> complex:
    """h_Gr(U, V) = trace(V^H U); linear in U, conjugate-linear in V."""
    _same_base(U, V)
    return complex(np.vdot(V.mat, U.mat))


def metric_trace_formula(U: AmbientTangent, V: AmbientTangent) -> complex:
    """-trace_Q(H_U K_Vbar)."""
    H = second_ff_H(U).mat
    K = second_ff_K(V).mat
    return complex(-np.trace(H @ K))


def metric_section_sum(U: AmbientTangent, V: AmbientTangent, basis: np.ndarray | None = None) -> tuple[complex, complex]:
    """Both section sums over a unitary basis w_1..w_n of C^n.

    Returns (sum_A h_S(K_Vbar t_A, K_Ubar t_A), sum_A h_Q(H_U s_A, H_V s_A)).
    """
    x = _same_base(U, V)
    W = np.eye(x.n, dtype=np.complex128) if basis is None else basis
    HU, HV = second_ff_H(U).mat, second_ff_H(V).mat
    KU, KV = second_ff_K(U).mat, second_ff_K(V).mat
    via_K = 0.0j
    via_H = 0.0j
    for A in range(x.n):
        s = project_S(x, W[:, A])
        t = project_Q(x, W[:, A])
        via_K += np.vdot(KU @ t, KV @ t)
        via_H += np.vdot(HV @ s, HU @ s)
    return complex(via_K), complex(via_H)


def second_ff_H(U: AmbientTangent) -> HomSQ:
    return HomSQ(U.base, U.mat)


def second_ff_K(U: AmbientTangent) -> HomQS:
    """K_Ubar = -(H_U)^H."""
    return HomQS(U.base, -adjoint(U.mat))


def curvature_S(U: AmbientTangent, V: AmbientTangent) -> np.ndarray:
    """R^S(U, Vbar) = K_Vbar H_U on S (p x p)."""
    _same_base(U, V)
    return second_ff_K(V).mat @ second_ff_H(U).mat


def curvature_Q(U: AmbientTangent, V: AmbientTangent) -> np.ndarray:
    """R^Q(U, Vbar) = -H_U K_Vbar on Q (q x q)."""
    _same_base(U, V)
    return -second_ff_H(U).mat @ second_ff_K(V).mat


def curvature_Gr(U: AmbientTangent, V: AmbientTangent, Z: AmbientTangent) -> AmbientTangent:
    """R^Gr(U, Vbar) Z = -H_Z K_Vbar H_U - H_U K_Vbar H_Z."""
    x = _same_base(U, V, Z)
    KV = second_ff_K(V).mat
    return AmbientTangent(x, -(Z.mat @ KV @ U.mat) - (U.mat @ KV @ Z.mat))


def curvature_Gr_ambient(U: np.ndarray, V: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Same tensor on n x n Hom(S, Q) representatives."""
    Vh = adjoint(V)
    return Z @ Vh @ U + U @ Vh @ Z


def hol_sectional(U: AmbientTangent, tol: float = TOL_ALGEBRAIC) -> float:
    nrm = metric(U, U).real
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"holomorphic sectional curvature needs a unit vector (|U|^2 = {nrm})")
    return metric(curvature_Gr(U, U, U), U).real


def hol_sectional_ambient(U: np.ndarray) -> float:
    """Hol^Gr of an n x n representative, normalized internally."""
    UUh = U @ adjoint(U)
    nrm = np.trace(UUh).real
    return float(2.0 * np.trace(UUh @ UUh).real / nrm**2)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_point(n: int, p: int, seed=None) -> GrassmannPoint:
    if not 0 < p < n:
        raise ValueError(f"need 0 < p < n for Gr_p(C^n), got p={p}, n={n}")
    rng = _rng(seed)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Uni = orthonormalize(A)
    return GrassmannPoint(Uni[:, :p].copy(), Uni[:, p:].copy())


def random_tangent(x: GrassmannPoint, seed=None, unit: bool = True) -> AmbientTangent:
    rng = _rng(seed)
    M = rng.standard_normal((x.q, x.p)) + 1j * rng.standard_normal((x.q, x.p))
    if unit:
        M /= np.linalg.norm(M)
    return AmbientTangent(x, M)


def random_unitary(k: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    return orthonormalize(rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k)))


def frame_curve(x: GrassmannPoint, U: AmbientTangent, t: complex) -> GrassmannPoint:
    """Point reached along the holomorphic chart line S + t Q U (velocity U at t = 0)."""
    F = x.frameS + t * (x.frameQ @ U.mat)
    return _point_with_Q(orthonormalize(F), x)


def _point_with_Q(S: np.ndarray, ref: GrassmannPoint) -> GrassmannPoint:
    # complement frame chosen continuously from the reference frame
    Q = orthonormalize(ref.frameQ - S @ (adjoint(S) @ ref.frameQ))
    return GrassmannPoint(S, Q)
