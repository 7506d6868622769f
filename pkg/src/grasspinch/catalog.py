"""Built-in immersions with known geometry.

Rank-one quotient examples use the hyperplane model: a holomorphic curve
z -> [v(z)] in CP^n becomes the plane family {w : sum_k v_k(z) w_k = 0} in
Gr_n(C^{n+1}). With v_0 = 1 the columns e_k - v_k(z) e_0 (k >= 1) form a
polynomial frame of that plane.

Every atlas rotation R satisfies R^{-T} v(z) ~ v(z') for a second chart point
z', so translated charts stay on the image and together cover it.
"""

from __future__ import annotations

import re
from math import comb, sqrt

import numpy as np

from .immersion import Expected, Immersion, ImmersionError


class CatalogMiss(KeyError):
    """Unknown catalog identifier."""


_J = np.array([[0.0, -1.0], [1.0, 0.0]])


def _hyperplane_terms(v_terms, n_plus_one: int, m: int):
    """Frame terms of the plane family orthogonal (bilinearly) to v.

    ``v_terms`` maps coordinate index k >= 1 to a list of (coefficient, exponent).
    """
    N = n_plus_one
    const = np.zeros((N, N - 1), dtype=np.complex128)
    const[1:, :] = np.eye(N - 1)
    terms = [(const, (0,) * m)]
    for k, monos in v_terms.items():
        for c, e in monos:
            C = np.zeros((N, N - 1), dtype=np.complex128)
            C[0, k - 1] = -c
            terms.append((C, tuple(e)))
    return _merge(terms)


def _merge(terms):
    merged: dict[tuple, np.ndarray] = {}
    for C, e in terms:
        e = tuple(int(x) for x in e)
        merged[e] = merged.get(e, 0) + C
    return tuple((C, e) for e, C in sorted(merged.items()))


def _swap(N: int, a: int, b: int) -> np.ndarray:
    R = np.eye(N, dtype=np.complex128)
    R[[a, b]] = R[[b, a]]
    return R


def linear(m: int = 1, n: int = 2) -> Immersion:
    """Totally geodesic CP^m inside CP^n (hyperplane model in Gr_n(C^{n+1}))."""
    if not 1 <= m <= n:
        raise ImmersionError(f"linear(m, n) needs 1 <= m <= n, got m={m}, n={n}")
    e = np.eye(m, dtype=int)
    v_terms = {k: [(1.0, e[k - 1])] for k in range(1, m + 1)}
    atlas = (np.eye(n + 1, dtype=np.complex128),) + tuple(_swap(n + 1, 0, k) for k in range(1, m + 1))
    return Immersion(
        catalog_id=f"linear:m={m},n={n}", n=n + 1, p=n, m=m,
        terms=_hyperplane_terms(v_terms, n + 1, m), atlas=atlas,
        params={"m": m, "n": n},
        expected=Expected(flat=True, min_hol=2.0, parallel=True, totally_geodesic=True, homogeneous=True),
        chart_shape=(1, m),
    )


def _antipodal(d: int) -> np.ndarray:
    R = np.zeros((d + 1, d + 1), dtype=np.complex128)
    for k in range(d + 1):
        R[k, d - k] = (-1.0) ** k
    return R


def veronese(d: int = 2) -> Immersion:
    """Rational normal curve v(z) = (sqrt(binom(d, k)) z^k)_k, degree d, in Gr_d(C^{d+1})."""
    if d < 1:
        raise ImmersionError(f"veronese degree must be >= 1, got {d}")
    v_terms = {k: [(sqrt(comb(d, k)), (k,))] for k in range(1, d + 1)}
    return Immersion(
        catalog_id=f"veronese:d={d}", n=d + 1, p=d, m=1,
        terms=_hyperplane_terms(v_terms, d + 1, 1), atlas=(np.eye(d + 1, dtype=np.complex128), _antipodal(d)),
        params={"d": d},
        expected=Expected(flat=True, min_hol=2.0 / d, parallel=d <= 2, totally_geodesic=d == 1, homogeneous=True),
    )


def weighted_veronese(d: int = 3, a: float = 1.0) -> Immersion:
    """Degree-d curve with palindromic weights (1, a, ..., a, 1): not homogeneous unless a = sqrt(binom(d, k))."""
    if d < 2:
        raise ImmersionError(f"weighted_veronese needs d >= 2, got {d}")
    if a <= 0:
        raise ImmersionError("weight must be positive")
    w = [1.0] + [float(a)] * (d - 1) + [1.0]
    v_terms = {k: [(w[k], (k,))] for k in range(1, d + 1)}
    homogeneous = all(abs(w[k] - sqrt(comb(d, k))) < 1e-14 for k in range(d + 1))
    return Immersion(
        catalog_id=f"weighted_veronese:d={d},a={a:g}", n=d + 1, p=d, m=1,
        terms=_hyperplane_terms(v_terms, d + 1, 1), atlas=(np.eye(d + 1, dtype=np.complex128), _antipodal(d)),
        params={"d": d, "a": float(a)},
        expected=Expected(flat=True, min_hol=None, parallel=(d <= 2 and homogeneous), homogeneous=homogeneous),
    )


def segre() -> Immersion:
    """CP^1 x CP^1 -> CP^3, (z, w) -> (1, z, w, zw), in Gr_3(C^4)."""
    v_terms = {1: [(1.0, (1, 0))], 2: [(1.0, (0, 1))], 3: [(1.0, (1, 1))]}
    I2 = np.eye(2)
    atlas = tuple(np.asarray(R, dtype=np.complex128) for R in
                  (np.eye(4), np.kron(I2, _J), np.kron(_J, I2), np.kron(_J, _J)))
    return Immersion(
        catalog_id="segre", n=4, p=3, m=2,
        terms=_hyperplane_terms(v_terms, 4, 2), atlas=atlas,
        expected=Expected(flat=True, min_hol=1.0, parallel=True, homogeneous=True),
    )


def pluecker() -> Immersion:
    """Gr_2(C^4) -> CP^5 by decomposable 2-vectors, hyperplane model in Gr_5(C^6).

    The chart point (a, b, c, d) is the row space of [[1, 0, a, b], [0, 1, c, d]];
    its Pluecker coordinates are (1, c, d, -a, -b, ad - bc).
    """
    v_terms = {
        1: [(1.0, (0, 0, 1, 0))],
        2: [(1.0, (0, 0, 0, 1))],
        3: [(-1.0, (1, 0, 0, 0))],
        4: [(-1.0, (0, 1, 0, 0))],
        5: [(1.0, (1, 0, 0, 1)), (-1.0, (0, 1, 1, 0))],
    }
    return Immersion(
        catalog_id="pluecker", n=6, p=5, m=4,
        terms=_hyperplane_terms(v_terms, 6, 4),
        expected=Expected(flat=True, min_hol=1.0, parallel=True, homogeneous=True),
        chart_shape=(2, 2),
    )


def tensor_embedding(q: int = 2) -> Immersion:
    """CP^1 -> Gr_q(C^{2q}), l -> l (x) C^q; universal quotient of rank q."""
    if q < 1:
        raise ImmersionError(f"tensor_embedding needs q >= 1, got {q}")
    Iq = np.eye(q, dtype=np.complex128)
    top = np.vstack([Iq, np.zeros((q, q))])
    low = np.vstack([np.zeros((q, q)), Iq])
    R = np.kron(_J, np.eye(q)).astype(np.complex128)
    return Immersion(
        catalog_id=f"tensor_embedding:q={q}", n=2 * q, p=q, m=1,
        terms=((top, (0,)), (low, (1,))), atlas=(np.eye(2 * q, dtype=np.complex128), R),
        params={"q": q},
        expected=Expected(flat=True, min_hol=2.0 / q, parallel=True, totally_geodesic=True, homogeneous=True),
    )


def identity_grassmannian(p: int = 2, n: int = 4) -> Immersion:
    """Gr_p(C^n) into itself through the big cell [I_p; Z]."""
    if not 0 < p < n:
        raise ImmersionError(f"identity_grassmannian needs 0 < p < n, got p={p}, n={n}")
    q = n - p
    m = p * q
    const = np.zeros((n, p), dtype=np.complex128)
    const[:p] = np.eye(p)
    terms = [(const, (0,) * m)]
    e = np.eye(m, dtype=int)
    for i in range(q):
        for j in range(p):
            C = np.zeros((n, p), dtype=np.complex128)
            C[p + i, j] = 1.0
            terms.append((C, tuple(e[i * p + j])))
    return Immersion(
        catalog_id=f"identity:p={p},n={n}", n=n, p=p, m=m, terms=tuple(terms),
        params={"p": p, "n": n},
        expected=Expected(flat=(q == 1), min_hol=2.0 / min(p, q), parallel=True,
                          totally_geodesic=True, homogeneous=True),
        chart_shape=(q, p),
    )


def perturbed_surface(eps: float = 0.3) -> Immersion:
    """Generic surface in Gr_2(C^4): frame [I_2; Z], Z = [[z, w], [eps z w, z - w^2 / 2]]."""
    const = np.zeros((4, 2), dtype=np.complex128)
    const[:2] = np.eye(2)

    def E(i, j, c=1.0):
        C = np.zeros((4, 2), dtype=np.complex128)
        C[2 + i, j] = c
        return C

    terms = [
        (const, (0, 0)),
        (E(0, 0) + E(1, 1), (1, 0)),
        (E(0, 1), (0, 1)),
        (E(1, 0, eps), (1, 1)),
        (E(1, 1, -0.5), (0, 2)),
    ]
    return Immersion(
        catalog_id=f"perturbed:eps={eps:g}", n=4, p=2, m=2, terms=_merge(terms),
        params={"eps": float(eps)},
        expected=Expected(flat=False, homogeneous=False),
    )


# name -> (constructor, positional parameter names)
CATALOG = {
    "linear": (linear, ("m", "n")),
    "veronese": (veronese, ("d",)),
    "weighted_veronese": (weighted_veronese, ("d", "a")),
    "segre": (segre, ()),
    "pluecker": (pluecker, ()),
    "tensor_embedding": (tensor_embedding, ("q",)),
    "identity": (identity_grassmannian, ("p", "n")),
    "identity_grassmannian": (identity_grassmannian, ("p", "n")),
    "perturbed": (perturbed_surface, ("eps",)),
}

# members shown by the catalog listing (one representative per parameter value)
LISTED = (
    "linear:1,2", "linear:2,3", "veronese:1", "veronese:2", "veronese:3", "veronese:4",
    "weighted_veronese:3,1", "segre", "pluecker", "tensor_embedding:1", "tensor_embedding:2",
    "tensor_embedding:3", "identity:2,4", "perturbed",
)


def _number(s: str):
    try:
        return int(s)
    except ValueError:
        return float(s)


def parse_id(ident: str) -> tuple[str, dict]:
    """'veronese:3', 'identity:p=2,n=4' or 'segre' -> (name, kwargs)."""
    name, _, rest = ident.strip().partition(":")
    if name not in CATALOG:
        raise CatalogMiss(f"unknown catalog member {name!r}; known: {sorted(CATALOG)}")
    _, positional = CATALOG[name]
    kwargs: dict = {}
    if rest:
        for i, item in enumerate(x for x in rest.split(",") if x):
            if "=" in item:
                key, val = item.split("=", 1)
                key = key.strip()
            else:
                if i >= len(positional):
                    raise CatalogMiss(f"too many parameters for {name}")
                key, val = positional[i], item
            if key not in positional:
                raise CatalogMiss(f"{name} has no parameter {key!r}")
            if not re.fullmatch(r"[-+0-9.eE]+", val.strip()):
                raise CatalogMiss(f"parameter {key} of {name} must be numeric, got {val!r}")
            kwargs[key] = _number(val.strip())
    return name, kwargs


def get(ident: str) -> Immersion:
    name, kwargs = parse_id(ident)
    ctor, _ = CATALOG[name]
    return ctor(**kwargs)


def describe(f: Immersion) -> dict:
    e = f.expected
    return {
        "id": f.catalog_id,
        "n": f.n, "p": f.p, "q": f.q, "m": f.m,
        "charts": len(f.atlas),
        "threshold": 1.0 / f.q,
        "expectedMinHol": e.min_hol,
        "expectedParallel": e.parallel,
        "expectedFlat": e.flat,
        "homogeneous": e.homogeneous,
    }
