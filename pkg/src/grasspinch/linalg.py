"""Dense complex linear algebra and a first-order forward-mode jet scalar."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# tolerance tiers
TOL_ALGEBRAIC = 1e-10
TOL_FIRST_DERIVATIVE = 1e-6
TOL_SECOND_DERIVATIVE = 1e-4

MIN_SINGULAR_VALUE = 1e-12
SYMMETRY_TOL = 1e-10


class DegenerateFrameError(ValueError):
    """Raised when a frame matrix is (numerically) rank deficient."""


class ConventionError(ValueError):
    """Raised when an input violates a symmetry convention."""


def adjoint(A: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(A, -1, -2))


def orthonormalize(A: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the column span of ``A``.

    Equivalent to Gram-Schmidt: the triangular factor is normalized to a
    positive real diagonal, so the output is unique and reproducible.
    """
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[1] > A.shape[0]:
        raise DegenerateFrameError(f"need a tall matrix, got shape {A.shape}")
    smin = np.linalg.svd(A, compute_uv=False)[-1]
    if smin <= MIN_SINGULAR_VALUE:
        raise DegenerateFrameError(f"frame is rank deficient (smallest singular value {smin:.3e})")
    Q, R = np.linalg.qr(A)
    d = np.diagonal(R)
    phase = d / np.abs(d)
    return Q * phase[None, :]


def complete_frame(S: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the columns of ``S``."""
    n, p = S.shape
    Qfull, _ = np.linalg.qr(S, mode="complete")
    C = Qfull[:, p:]
    # fix the per-column phase: largest-modulus entry real positive
    for j in range(C.shape[1]):
        k = np.argmax(np.abs(C[:, j]) > 1e-8 * np.max(np.abs(C[:, j])))
        C[:, j] *= np.conj(C[k, j]) / np.abs(C[k, j])
    return C


def max_hermitian_eigenpair(B: np.ndarray, tol: float = SYMMETRY_TOL) -> tuple[float, np.ndarray]:
    """Largest eigenvalue of a symmetric/Hermitian matrix with a unit eigenvector.

    The eigenvector's first non-negligible component is made real positive.
    """
    B = np.asarray(B)
    scale = max(1.0, float(np.max(np.abs(B)))) if B.size else 1.0
    if np.max(np.abs(B - adjoint(B))) > tol * scale:
        raise ConventionError("operator is not symmetric within tolerance")
    w, V = np.linalg.eigh(0.5 * (B + adjoint(B)))
    lam = float(w[-1])
    e = V[:, -1].copy()
    k = int(np.argmax(np.abs(e) > 1e-12))
    e *= np.conj(e[k]) / np.abs(e[k])
    if not np.iscomplexobj(B):
        e = e.real
    return lam, e


def hermitian_sqrt_inv(G: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(G)
    if w[0] <= 0:
        raise DegenerateFrameError("Gram matrix is not positive definite")
    return (V / np.sqrt(w)) @ adjoint(V)


def orthonormal_basis_for(g: np.ndarray) -> np.ndarray:
    """Columns e_a with sum_ij e_a[i] conj(e_b[j]) g[i, j] = delta_ab.

    ``g[i, j]`` is h(d_i, d_j) for a Hermitian form h linear in its first slot.
    """
    # h(u, v) = v^H g^T u, so orthonormality means E^H g^T E = I
    return hermitian_sqrt_inv(np.asarray(g).T)


@dataclass(frozen=True)
class JetScalar:
    """Value plus holomorphic first partials, vectorized over array shapes.

    ``partials`` has shape (nvars, *value.shape).
    """

    value: np.ndarray
    partials: np.ndarray

    @staticmethod
    def variables(z) -> list["JetScalar"]:
        z = np.asarray(z, dtype=np.complex128)
        m = z.shape[0]
        eye = np.eye(m, dtype=np.complex128)
        return [JetScalar(np.asarray(z[i]), eye[i].reshape(m)) for i in range(m)]

    @staticmethod
    def constant(c, nvars: int) -> "JetScalar":
        c = np.asarray(c, dtype=np.complex128)
        return JetScalar(c, np.zeros((nvars,) + c.shape, dtype=np.complex128))

    @property
    def nvars(self) -> int:
        return self.partials.shape[0]

    def _lift(self, other) -> "JetScalar":
        if isinstance(other, JetScalar):
            return other
        return JetScalar.constant(other, self.nvars)

    def _bshape(self, p, ndim):
        # reshape partial-array so it broadcasts like a value of ndim dims
        return p.reshape((p.shape[0],) + (1,) * (ndim - (p.ndim - 1)) + p.shape[1:])

    def __add__(self, other):
        o = self._lift(other)
        v = self.value + o.value
        return JetScalar(v, self._bshape(self.partials, v.ndim) + self._bshape(o.partials, v.ndim))

    __radd__ = __add__

    def __neg__(self):
        return JetScalar(-self.value, -self.partials)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        v = self.value * o.value
        d = self._bshape(self.partials, v.ndim) * o.value + self.value * self._bshape(o.partials, v.ndim)
        return JetScalar(v, d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        inv = 1.0 / o.value
        v = self.value * inv
        d = (self._bshape(self.partials, v.ndim) - v * self._bshape(o.partials, v.ndim)) * inv
        return JetScalar(v, d)

    def __pow__(self, k: int):
        if k == 0:
            return JetScalar.constant(np.ones_like(self.value), self.nvars)
        out = self
        for _ in range(k - 1):
            out = out * self
        return out

    def __matmul__(self, other):
        o = self._lift(other)
        v = self.value @ o.value
        d = self.partials @ o.value + self.value @ o.partials
        return JetScalar(v, d)
