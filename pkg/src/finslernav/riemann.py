"""Riemannian quantities of navigation data ``h``.

All derivatives come from jets of the metric components, so Christoffel
symbols, covariant derivatives and curvature are exact up to rounding.
Index conventions:

* ``gamma[i, j, k]`` is the Christoffel symbol with upper index ``i``;
* ``cov[i, j]`` is ``omega_{i|j} = d_j omega_i - gamma^k_ij omega_k``;
* ``R[i, j, k, l]`` is ``R^i_{jkl}`` with ``R(d_k, d_l) d_j = R^i_{jkl} d_i``;
* ``ricci[j, l] = R^i_{jil}``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import exprdsl
from .errors import (
    DegeneratePlaneError,
    GuardViolatedError,
    NotPositiveDefiniteError,
)
from .jets import Jet, jet_space

__all__ = [
    "RiemannMetric",
    "VectorField",
    "CovectorField",
    "field_jets",
    "metric_at",
    "christoffel",
    "christoffel_jets",
    "cov_deriv_covector",
    "cov_deriv_jets",
    "lowered",
    "riemann_curvature_h",
    "ricci_h",
    "sectional_h",
    "sample_planes",
    "isotropy_residual",
    "einstein_residual",
    "norm_h",
    "inner_h",
]


def field_jets(exprs, x, order, space=None):
    """Jets of expressions at ``x``.

    The expansion is taken in the coordinates (variables ``0..n-1``); when a
    larger ``space`` is given the result is embedded into it, which is how the
    Finsler layer gets x-only coefficients inside ``(x, y)`` jets.
    Returns an array of shape ``(len(exprs), size)``.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    local = jet_space(n, order)
    point = [Jet(local, local.variable(i, x[i])) for i in range(n)]
    cache = {}
    rows = []
    for e in exprs:
        c = cache.get(e)
        if c is None:
            c = exprdsl.eval_jet(e, point).coeffs
            cache[e] = c
        rows.append(c)
    out = np.array(rows).reshape(len(rows), local.size)
    if space is not None and space is not local:
        out = local.embed(out, space)
    return out


@dataclass(frozen=True)
class RiemannMetric:
    """Symmetric matrix of chart expressions, optionally with a domain guard."""

    components: tuple
    guard: exprdsl.Expr | None = None

    def __post_init__(self):
        n = len(self.components)
        if n == 0 or any(len(row) != n for row in self.components):
            raise ValueError("metric components must form a square matrix")
        for i in range(n):
            for j in range(i):
                if self.components[i][j] != self.components[j][i]:
                    raise ValueError("metric components must be symmetric")

    @classmethod
    def from_upper(cls, upper, guard=None):
        """Build from an upper triangle (``upper[i][j]`` for ``j >= i``)."""
        n = len(upper)
        rows = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                rows[i][j] = upper[i][j] if j >= i else upper[j][i]
        return cls(tuple(tuple(r) for r in rows), guard)

    @classmethod
    def parse(cls, rows, dim, params: Mapping[str, float] | None = None, guard=None):
        upper = [[None] * dim for _ in range(dim)]
        for i in range(dim):
            for j in range(i, dim):
                upper[i][j] = exprdsl.parse(str(rows[i][j]), dim, params)
        g = exprdsl.parse(guard, dim, params) if isinstance(guard, str) else guard
        return cls.from_upper(upper, g)

    @classmethod
    def conformal(cls, factor: exprdsl.Expr, dim: int, guard=None):
        zero = exprdsl.num(0)
        return cls(tuple(tuple(factor if i == j else zero for j in range(dim)) for i in range(dim)), guard)

    @property
    def dim(self) -> int:
        return len(self.components)

    def flat(self):
        return [e for row in self.components for e in row]

    def check_guard(self, x):
        if self.guard is not None:
            g = exprdsl.evaluate(self.guard, [float(v) for v in x])
            if not g > 0:
                raise GuardViolatedError(f"guard {self.guard} is {g} at x={[float(t) for t in x]}")

    def jets(self, x, order, space=None):
        n = self.dim
        out = field_jets(self.flat(), x, order, space)
        return out.reshape(n, n, out.shape[-1])

    def at(self, x):
        self.check_guard(x)
        return self.jets(x, 0)[..., 0]


@dataclass(frozen=True)
class VectorField:
    """Components of a field in chart coordinates (upper index)."""

    components: tuple

    variance = "upper"

    @classmethod
    def parse(cls, strings: Sequence[str], dim, params=None):
        if len(strings) != dim:
            raise ValueError(f"expected {dim} components, got {len(strings)}")
        return cls(tuple(exprdsl.parse(str(s), dim, params) for s in strings))

    @classmethod
    def constant(cls, values):
        return cls(tuple(exprdsl.num(v) for v in values))

    @property
    def dim(self) -> int:
        return len(self.components)

    def at(self, x):
        return np.array([float(exprdsl.evaluate(e, [float(v) for v in x])) for e in self.components])

    def jets(self, x, order, space=None):
        return field_jets(self.components, x, order, space)

    def __add__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        return type(self)(
            tuple(exprdsl.fold_constants(exprdsl.add(a, b)) for a, b in zip(self.components, other.components))
        )

    def scaled(self, factor):
        f = exprdsl.num(factor)
        return type(self)(tuple(exprdsl.fold_constants(exprdsl.mul(f, c)) for c in self.components))


class CovectorField(VectorField):
    """Components with a lower index (1-forms)."""

    variance = "lower"


def _check_spd(H0):
    w = np.linalg.eigvalsh(0.5 * (H0 + H0.T))
    if not np.all(w > 0):
        raise NotPositiveDefiniteError(f"metric eigenvalues {w} not all positive")


def metric_at(h: RiemannMetric, x):
    """Return ``(matrix, inverse, sqrt(det))`` of ``h`` at ``x``."""
    H = h.at(x)
    _check_spd(H)
    Hinv = np.linalg.inv(H)
    return H, Hinv, float(np.sqrt(np.linalg.det(H)))


class _Local:
    """Jets of h, its inverse and the Christoffel symbols at one point."""

    def __init__(self, h: RiemannMetric, x, order: int):
        h.check_guard(x)
        self.n = h.dim
        self.x = np.asarray(x, dtype=float)
        self.space = jet_space(self.n, order)
        self.H = h.jets(self.x, order)
        _check_spd(self.H[..., 0])
        self.Hinv = self.space.inv(self.H)
        if order >= 1:
            lo = self.space.lower()
            dH = np.stack([self.space.diff(self.H, a) for a in range(self.n)])  # dH[a, i, j]
            # first-kind symbols: [jk, l] = 1/2 (d_j h_lk + d_k h_jl - d_l h_jk)
            first = 0.5 * (
                np.einsum("jlkp->ljkp", dH)
                + np.einsum("kjlp->ljkp", dH)
                - np.einsum("ljkp->ljkp", dH)
            )
            Hinv_lo = self.space.truncate(self.Hinv, order - 1)
            n = self.n
            gamma = lo.matmul(Hinv_lo, first.reshape(n, n * n, -1)).reshape(n, n, n, -1)
            self.lower_space = lo
            self.gamma = gamma


def christoffel_jets(h: RiemannMetric, x, order: int = 0):
    """Christoffel symbols as jets of the given order (shape (n, n, n, size))."""
    return _Local(h, x, order + 1).gamma


def christoffel(h: RiemannMetric, x):
    return christoffel_jets(h, x, 0)[..., 0]


def lowered(local_H, field_coeffs, space):
    """Lower an upper-index field given as jets: ``W_i = h_ij W^j``."""
    return space.matvec(local_H, field_coeffs)


def cov_deriv_jets(h: RiemannMetric, field, x, order: int = 0):
    """Jets of ``omega_{i|j}`` for a covector field (vector fields are lowered with h)."""
    loc = _Local(h, x, order + 1)
    sp = loc.space
    w = field.jets(x, order + 1)
    if field.variance == "upper":
        w = sp.matvec(loc.H, w)
    lo = loc.lower_space
    dw = np.stack([sp.diff(w, j) for j in range(loc.n)], axis=1)  # dw[i, j] = d_j w_i
    w_lo = sp.truncate(w, order)
    corr = np.einsum("kijp->ijkp", loc.gamma)
    corr = lo.mul(corr, w_lo[None, None, :, :]).sum(axis=2)
    return dw - corr


def cov_deriv_covector(h: RiemannMetric, omega, x):
    """Matrix ``omega_{i|j}`` at ``x``."""
    return cov_deriv_jets(h, omega, x, 0)[..., 0]


def _riemann_from_local(loc: _Local):
    lo = loc.lower_space  # order 1
    G = loc.gamma
    n = loc.n
    dG = np.stack([lo.diff(G, a) for a in range(n)])[..., 0]  # dG[a, i, j, k] = d_a gamma^i_jk
    G0 = G[..., 0]
    R = (
        np.einsum("kilj->ijkl", dG)
        - np.einsum("likj->ijkl", dG)
        + np.einsum("ikm,mlj->ijkl", G0, G0)
        - np.einsum("ilm,mkj->ijkl", G0, G0)
    )
    return R


def riemann_curvature_h(h: RiemannMetric, x):
    """``R^i_{jkl}`` at ``x``."""
    return _riemann_from_local(_Local(h, x, 2))


def ricci_h(h: RiemannMetric, x):
    R = riemann_curvature_h(h, x)
    return np.einsum("ijil->jl", R)


def _sectional(H, R, u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    uu, vv, uv = u @ H @ u, v @ H @ v, u @ H @ v
    gram = uu * vv - uv * uv
    if gram < 1e-12 * uu * vv:
        raise DegeneratePlaneError("plane vectors are (nearly) parallel")
    Rlow = np.einsum("im,mjkl->ijkl", H, R)
    num = np.einsum("ijkl,i,j,k,l->", Rlow, u, v, u, v)
    return float(num / gram)


def sectional_h(h: RiemannMetric, x, plane):
    """Sectional curvature of the plane spanned by ``plane = (u, v)``."""
    loc = _Local(h, x, 2)
    return _sectional(loc.H[..., 0], _riemann_from_local(loc), plane[0], plane[1])


def sample_planes(n: int, seed: int = 0, n_random: int = 10):
    """All coordinate planes plus ``n_random`` randomly rotated ones."""
    planes = []
    eye = np.eye(n)
    for i, j in itertools.combinations(range(n), 2):
        planes.append((eye[i], eye[j]))
    rng = np.random.Generator(np.random.Philox(seed))
    for _ in range(n_random):
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        planes.append((q[:, 0], q[:, 1]))
    return planes


def isotropy_residual(h: RiemannMetric, x, seed: int = 0, n_random: int = 10):
    """Mean sectional curvature over sampled planes and max deviation from it."""
    loc = _Local(h, x, 2)
    R = _riemann_from_local(loc)
    H = loc.H[..., 0]
    ks = np.array([_sectional(H, R, u, v) for u, v in sample_planes(h.dim, seed, n_random)])
    mean = float(ks.mean())
    return mean, float(np.abs(ks - mean).max())


def einstein_residual(h: RiemannMetric, x):
    """Best-fit ``mu`` with ``Ric = (n-1) mu h`` and the max-norm misfit."""
    loc = _Local(h, x, 2)
    H = loc.H[..., 0]
    n = h.dim
    ric = np.einsum("ijil->jl", _riemann_from_local(loc))
    if n < 2:
        return 0.0, 0.0
    mu = float(np.trace(np.linalg.solve(H, ric)) / (n * (n - 1)))
    return mu, float(np.abs(ric - (n - 1) * mu * H).max())


def _vec(field, x):
    if isinstance(field, VectorField):
        return field.at(x)
    return np.asarray(field, dtype=float)


def inner_h(h: RiemannMetric, u, v, x) -> float:
    H = h.at(x)
    return float(_vec(u, x) @ H @ _vec(v, x))


def norm_h(h: RiemannMetric, v, x) -> float:
    return float(np.sqrt(inner_h(h, v, v, x)))
