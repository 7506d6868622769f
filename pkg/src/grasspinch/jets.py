"""Truncated multivariate Taylor series in Wirtinger variables.

A real-analytic function near a chart point z0 in C^m is expanded in the 2m
formal variables (dz_1..dz_m, dzbar_1..dzbar_m). A :class:`TaylorJet` stores the
matrix-valued coefficients of every monomial of total degree <= order, so that
products, inverses and adjoints are exact up to round-off and any derivative up
to ``order`` can be read off directly.

Monomials are sorted by degree, so the basis of order k is a prefix of the
basis of order k+1 and mixing orders is a slice.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb, factorial, prod

import numpy as np

from . import kernels


class MonomialBasis:
    def __init__(self, m: int, order: int):
        self.m = m
        self.nvars = 2 * m
        self.order = order
        exps = []
        for deg in range(order + 1):
            for combo in itertools.combinations_with_replacement(range(self.nvars), deg):
                e = [0] * self.nvars
                for v in combo:
                    e[v] += 1
                exps.append(tuple(e))
        self.exps = np.array(exps, dtype=np.int64).reshape(len(exps), self.nvars)
        self.degree = self.exps.sum(axis=1)
        self.size = len(exps)
        self.index = {e: i for i, e in enumerate(exps)}
        self.factorials = np.array([prod(factorial(k) for k in e) for e in exps], dtype=np.float64)
        self._build_tables()

    def _build_tables(self):
        base = self.order + 1
        weights = base ** np.arange(self.nvars, dtype=np.int64)
        codes = self.exps @ weights
        order_of_code = np.argsort(codes)
        sorted_codes = codes[order_of_code]

        ia, ib = np.nonzero(self.degree[:, None] + self.degree[None, :] <= self.order)
        sums = (self.exps[ia] + self.exps[ib]) @ weights
        ic = order_of_code[np.searchsorted(sorted_codes, sums)]
        perm = np.lexsort((ib, ia, ic))
        self.mul_a = ia[perm].astype(np.int64)
        self.mul_b = ib[perm].astype(np.int64)
        self.mul_c = ic[perm].astype(np.int64)

        swapped = np.concatenate([self.exps[:, self.m:], self.exps[:, : self.m]], axis=1)
        self.conj_perm = order_of_code[np.searchsorted(sorted_codes, swapped @ weights)]

        # derivative d/dvar maps order-k basis onto order-(k-1) basis
        self.deriv = []
        if self.order > 0:
            lower = basis(self.m, self.order - 1) if self.order - 1 >= 0 else None
            for v in range(self.nvars):
                src = np.flatnonzero(self.exps[:, v] > 0)
                dst_exps = self.exps[src].copy()
                dst_exps[:, v] -= 1
                dst = np.array([lower.index[tuple(e)] for e in dst_exps], dtype=np.int64)
                self.deriv.append((src, dst, self.exps[src, v].astype(np.float64)))

    def holomorphic_index(self, alpha) -> int:
        return self.index[tuple(alpha) + (0,) * self.m]


@lru_cache(maxsize=None)
def basis(m: int, order: int) -> MonomialBasis:
    return MonomialBasis(m, order)


class TaylorJet:
    """Matrix-valued truncated Taylor series; ``coeffs`` has shape (M, rows, cols)."""

    __slots__ = ("basis", "coeffs")
    __array_priority__ = 100

    def __init__(self, b: MonomialBasis, coeffs: np.ndarray):
        if coeffs.ndim != 3 or coeffs.shape[0] != b.size:
            raise ValueError(f"coefficient array {coeffs.shape} does not match basis size {b.size}")
        self.basis = b
        self.coeffs = coeffs

    # -- construction -------------------------------------------------------
    @classmethod
    def constant(cls, value, m: int, order: int) -> "TaylorJet":
        value = np.atleast_2d(np.asarray(value, dtype=np.complex128))
        b = basis(m, order)
        c = np.zeros((b.size,) + value.shape, dtype=np.complex128)
        c[0] = value
        return cls(b, c)

    @classmethod
    def zeros(cls, shape, m: int, order: int) -> "TaylorJet":
        b = basis(m, order)
        return cls(b, np.zeros((b.size,) + tuple(shape), dtype=np.complex128))

    # -- structure ----------------------------------------------------------
    @property
    def order(self) -> int:
        return self.basis.order

    @property
    def m(self) -> int:
        return self.basis.m

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape[1:]

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    def truncate(self, order: int) -> "TaylorJet":
        if order == self.order:
            return self
        if order > self.order:
            raise ValueError("cannot raise the order of a jet")
        b = basis(self.m, order)
        return TaylorJet(b, self.coeffs[: b.size])

    def _common(self, other: "TaylorJet"):
        k = min(self.order, other.order)
        return self.truncate(k), other.truncate(k)

    def __getitem__(self, idx) -> "TaylorJet":
        c = self.coeffs[(slice(None),) + (idx if isinstance(idx, tuple) else (idx,))]
        if c.ndim == 2:
            c = c[:, :, None]
        elif c.ndim == 1:
            c = c[:, None, None]
        return TaylorJet(self.basis, c)

    def reshape(self, rows: int, cols: int) -> "TaylorJet":
        return TaylorJet(self.basis, self.coeffs.reshape(self.basis.size, rows, cols))

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, TaylorJet):
            a, b = self._common(other)
            return TaylorJet(a.basis, a.coeffs + b.coeffs)
        c = self.coeffs.copy()
        c[0] = c[0] + other
        return TaylorJet(self.basis, c)

    __radd__ = __add__

    def __neg__(self):
        return TaylorJet(self.basis, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TaylorJet):
            if other.shape == (1, 1):
                return self._scalar_product(other)
            if self.shape == (1, 1):
                return other._scalar_product(self)
            raise TypeError("elementwise jet products are only defined for scalar jets")
        return TaylorJet(self.basis, self.coeffs * other)

    __rmul__ = __mul__

    def _scalar_product(self, s: "TaylorJet") -> "TaylorJet":
        a, b = self._common(s)
        r, c = a.shape
        flat = TaylorJet(a.basis, a.coeffs.reshape(a.basis.size, 1, r * c))
        out = b @ flat
        return TaylorJet(out.basis, out.coeffs.reshape(out.basis.size, r, c))

    def __matmul__(self, other):
        if isinstance(other, TaylorJet):
            a, b = self._common(other)
            bs = a.basis
            out = kernels.jet_matmul(a.coeffs, b.coeffs, bs.mul_a, bs.mul_b, bs.mul_c, bs.size)
            return TaylorJet(bs, out)
        return TaylorJet(self.basis, np.matmul(self.coeffs, other))

    def __rmatmul__(self, other):
        return TaylorJet(self.basis, np.matmul(other, self.coeffs))

    @property
    def H(self) -> "TaylorJet":
        """Pointwise conjugate transpose (swaps holomorphic/antiholomorphic slots)."""
        c = np.conj(np.swapaxes(self.coeffs, 1, 2))[self.basis.conj_perm]
        return TaylorJet(self.basis, np.ascontiguousarray(c))

    @property
    def T(self) -> "TaylorJet":
        return TaylorJet(self.basis, np.ascontiguousarray(np.swapaxes(self.coeffs, 1, 2)))

    def conj(self) -> "TaylorJet":
        return TaylorJet(self.basis, np.conj(self.coeffs)[self.basis.conj_perm])

    def trace(self) -> "TaylorJet":
        t = np.trace(self.coeffs, axis1=1, axis2=2)
        return TaylorJet(self.basis, t[:, None, None])

    def inv(self) -> "TaylorJet":
        """Inverse of a square jet via the terminating Neumann series."""
        A0inv = np.linalg.inv(self.coeffs[0])
        N = TaylorJet(self.basis, self.coeffs.copy())
        N.coeffs[0] = 0.0
        X = TaylorJet.constant(A0inv, self.m, self.order)
        first = TaylorJet.constant(A0inv, self.m, self.order)
        for _ in range(self.order):
            X = first - (A0inv @ (N @ X))
        return X

    def kron(self, other: "TaylorJet") -> "TaylorJet":
        a, b = self._common(other)
        bs = a.basis
        r1, c1 = a.shape
        r2, c2 = b.shape
        prods = np.einsum("tij,tkl->tikjl", a.coeffs[bs.mul_a], b.coeffs[bs.mul_b])
        prods = prods.reshape(len(bs.mul_a), r1 * r2, c1 * c2)
        out = np.zeros((bs.size, r1 * r2, c1 * c2), dtype=np.complex128)
        ic = bs.mul_c
        starts = np.flatnonzero(np.r_[True, ic[1:] != ic[:-1]])
        out[ic[starts]] = np.add.reduceat(prods, starts, axis=0)
        return TaylorJet(bs, out)

    # -- calculus -----------------------------------------------------------
    def d(self, var: int) -> "TaylorJet":
        """Partial derivative in formal variable ``var`` (0..m-1 holomorphic, m..2m-1 antiholomorphic)."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, dst, fac = self.basis.deriv[var]
        lower = basis(self.m, self.order - 1)
        c = np.zeros((lower.size,) + self.shape, dtype=np.complex128)
        c[dst] = self.coeffs[src] * fac[:, None, None]
        return TaylorJet(lower, c)

    def dz(self, u) -> "TaylorJet":
        """Holomorphic directional derivative sum_i u_i d/dz_i."""
        out = None
        for i, ui in enumerate(np.asarray(u, dtype=np.complex128)):
            if ui == 0:
                continue
            term = self.d(i) * ui
            out = term if out is None else out + term
        if out is None:
            lower = basis(self.m, self.order - 1)
            return TaylorJet(lower, np.zeros((lower.size,) + self.shape, dtype=np.complex128))
        return out

    def dzbar(self, u) -> "TaylorJet":
        """Antiholomorphic directional derivative sum_i conj(u_i) d/dzbar_i."""
        out = None
        for i, ui in enumerate(np.asarray(u, dtype=np.complex128)):
            if ui == 0:
                continue
            term = self.d(self.m + i) * np.conj(ui)
            out = term if out is None else out + term
        if out is None:
            lower = basis(self.m, self.order - 1)
            return TaylorJet(lower, np.zeros((lower.size,) + self.shape, dtype=np.complex128))
        return out

    def derivative(self, alpha, beta=None) -> np.ndarray:
        """Value of d^alpha dbar^beta at the expansion point."""
        beta = beta if beta is not None else (0,) * self.m
        key = tuple(alpha) + tuple(beta)
        i = self.basis.index[key]
        return self.coeffs[i] * self.basis.factorials[i]


def polynomial_jet(terms, z0, order: int, shape) -> TaylorJet:
    """Exact Taylor jet of a holomorphic matrix polynomial sum_e C_e z^e at z0."""
    z0 = np.asarray(z0, dtype=np.complex128)
    m = z0.shape[0]
    b = basis(m, order)
    c = np.zeros((b.size,) + tuple(shape), dtype=np.complex128)
    hol = [i for i in range(b.size) if not b.exps[i, m:].any()]
    for coef, e in terms:
        coef = np.asarray(coef, dtype=np.complex128)
        for i in hol:
            alpha = b.exps[i, :m]
            if np.any(alpha > np.asarray(e)):
                continue
            w = 1.0 + 0.0j
            for k in range(m):
                w *= comb(int(e[k]), int(alpha[k])) * z0[k] ** (int(e[k]) - int(alpha[k]))
            c[i] += w * coef
    return TaylorJet(b, c)


def holomorphic_fd_jet(func, z0, order: int, step: float) -> TaylorJet:
    """Taylor jet of a holomorphic map from central finite differences.

    Holomorphic derivatives are taken along the real axes (d/dz = d/dx for
    holomorphic maps), nested up to ``order``. Accuracy degrades quickly beyond
    second order; this is the portable fallback, not the default.
    """
    z0 = np.asarray(z0, dtype=np.complex128)
    m = z0.shape[0]
    v0 = np.asarray(func(z0), dtype=np.complex128)
    b = basis(m, order)
    c = np.zeros((b.size,) + v0.shape, dtype=np.complex128)
    c[0] = v0
    for i in range(1, b.size):
        e = b.exps[i]
        if e[m:].any():
            continue
        alpha = e[:m]
        # tensor-product central stencil of the required orders
        axes = []
        for k in range(m):
            a = int(alpha[k])
            if a == 0:
                continue
            nodes = np.arange(a + 1) - a / 2.0
            wts = np.array([(-1.0) ** (a - j) * comb(a, j) for j in range(a + 1)])
            axes.append((k, nodes * step, wts / step**a))
        total = np.zeros_like(v0)
        for combo in itertools.product(*[range(len(ax[1])) for ax in axes]):
            z = z0.copy()
            w = 1.0
            for (k, nodes, wts), j in zip(axes, combo):
                z[k] += nodes[j]
                w *= wts[j]
            total += w * np.asarray(func(z), dtype=np.complex128)
        c[i] = total / b.factorials[i]
    return TaylorJet(b, c)


def wirtinger_fd(func, z0, direction, step: float = 1e-5, bar: bool = False):
    """Central-difference Wirtinger derivative of an arbitrary point function.

    Returns d/dt f(z0 + t u) (or d/dtbar) at t = 0 for the complex line through
    ``direction``.
    """
    z0 = np.asarray(z0, dtype=np.complex128)
    u = np.asarray(direction, dtype=np.complex128)
    fx = (np.asarray(func(z0 + step * u)) - np.asarray(func(z0 - step * u))) / (2 * step)
    fy = (np.asarray(func(z0 + 1j * step * u)) - np.asarray(func(z0 - 1j * step * u))) / (2 * step)
    if bar:
        return 0.5 * (fx + 1j * fy)
    return 0.5 * (fx - 1j * fy)
