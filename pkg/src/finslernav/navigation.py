"""Zermelo navigation: implicit solve, closed forms, and composite winds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import exprdsl
from .errors import (
    ConeViolationError,
    DegenerateBetaError,
    MixedRegimeError,
    RegimeMismatchError,
    SpeedLimitError,
)
from .finsler import FinslerMetric, ImplicitNavigation, Kropina, Randers, solve_ray
from .riemann import CovectorField, RiemannMetric, VectorField

__all__ = [
    "REGIME_TOL",
    "NavigationData",
    "CompositeResult",
    "solve_implicit",
    "randers_from_data",
    "kropina_from_data",
    "kropina_to_data",
    "composite",
    "u_map",
    "h_inner_expr",
]

REGIME_TOL = 1e-9


def _regime_of(norms) -> str:
    norms = np.asarray(norms, dtype=float)
    if np.all(np.abs(norms - 1.0) < REGIME_TOL):
        return "critical"
    if np.all(norms < 1.0 - REGIME_TOL):
        return "subcritical"
    raise RegimeMismatchError(f"wind norms span [{norms.min():.12g}, {norms.max():.12g}]")


@dataclass(frozen=True)
class NavigationData:
    """Navigation data ``(h, W)`` with its regime, fixed by sampling."""

    h: RiemannMetric
    W: VectorField
    regime: str

    @classmethod
    def from_fields(cls, h: RiemannMetric, W: VectorField, points) -> "NavigationData":
        norms = [math.sqrt(float(W.at(x) @ h.at(x) @ W.at(x))) for x in points]
        return cls(h, W, _regime_of(norms))


def solve_implicit(phi: FinslerMetric, W: VectorField, x, y) -> float:
    """``t > 0`` with ``phi(x, y/t - W_x) = 1``."""
    phi.h.check_guard(x)
    data = phi.local(x)
    return solve_ray(phi, data, [float(v) for v in y], W.at(x))


def randers_from_data(data: NavigationData) -> Randers:
    if data.regime != "subcritical":
        raise RegimeMismatchError("Randers metric needs subcritical navigation data")
    return Randers(data.h, data.W)


def kropina_from_data(data: NavigationData, beta_norm=None) -> Kropina:
    if data.regime != "critical":
        raise RegimeMismatchError("Kropina metric needs critical navigation data")
    return Kropina(data.h, data.W, beta_norm)


def _sym_det(M):
    n = len(M)
    if n == 1:
        return M[0][0]
    terms, signs = [], []
    for j in range(n):
        minor = [[M[r][c] for c in range(n) if c != j] for r in range(1, n)]
        terms.append(exprdsl.mul(M[0][j], _sym_det(minor)))
        signs.append(1 if j % 2 == 0 else -1)
    return exprdsl.Sum(tuple(terms), tuple(signs))


def _sym_inverse(M):
    """Cofactor inverse of a symmetric matrix of expressions."""
    n = len(M)
    if n == 1:
        return [[exprdsl.div(exprdsl.num(1), M[0][0])]]
    d = exprdsl.simplify(_sym_det(M))
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[M[r][c] for c in range(n) if c != i] for r in range(n) if r != j]
            cof = _sym_det(minor)
            if (i + j) % 2:
                cof = exprdsl.neg(cof)
            out[i][j] = exprdsl.simplify(exprdsl.div(cof, d))
    return out


def h_inner_expr(h: RiemannMetric, U: VectorField, V: VectorField):
    """Expression for ``h(U, V)``."""
    n = h.dim
    terms = [
        exprdsl.mul(exprdsl.mul(h.components[i][j], U.components[i]), V.components[j])
        for i in range(n)
        for j in range(n)
    ]
    return exprdsl.simplify(exprdsl.add(*terms))


def kropina_to_data(alpha: RiemannMetric, beta: CovectorField, points) -> tuple[NavigationData, exprdsl.Expr]:
    """Navigation data of ``alpha^2 / beta``: ``h = (4/b^2) a``, ``W^i = b^i / 2``.

    Returns the data and the expression of ``b = ||beta||_alpha`` (which
    reproduces ``(alpha, beta)`` when passed back as ``beta_norm``).
    """
    n = alpha.dim
    ainv = _sym_inverse(alpha.components)
    b_up = [
        exprdsl.simplify(exprdsl.add(*[exprdsl.mul(ainv[i][j], beta.components[j]) for j in range(n)]))
        for i in range(n)
    ]
    b2 = exprdsl.simplify(exprdsl.add(*[exprdsl.mul(beta.components[i], b_up[i]) for i in range(n)]))
    for x in points:
        v = float(exprdsl.evaluate(b2, [float(t) for t in x]))
        if not v > 1e-18:
            raise DegenerateBetaError(f"||beta||_alpha = {math.sqrt(max(v, 0.0))} at x={[float(t) for t in x]}")
    scale = exprdsl.div(exprdsl.num(4), b2)
    rows = tuple(tuple(exprdsl.simplify(exprdsl.mul(scale, alpha.components[i][j])) for j in range(n)) for i in range(n))
    h = RiemannMetric(rows, alpha.guard)
    W = VectorField(tuple(exprdsl.simplify(exprdsl.mul(exprdsl.num(0.5), c)) for c in b_up))
    return NavigationData(h, W, "critical"), exprdsl.simplify(exprdsl.call("sqrt", b2))


@dataclass(frozen=True)
class CompositeResult:
    """Outcome of navigating a Kropina metric with an extra wind ``V``."""

    classification: str
    metric: FinslerMetric
    implicit: ImplicitNavigation
    lam: exprdsl.Expr
    wind: VectorField
    samples: list = field(default_factory=list)

    def to_dict(self):
        return {
            "classification": self.classification,
            "lambda": exprdsl.to_string(self.lam),
            "W": [exprdsl.to_string(c) for c in self.wind.components],
            "samples": self.samples,
        }


def composite(F: FinslerMetric, V: VectorField, points) -> CompositeResult:
    """Metric solving the navigation problem for ``(F, V)``, classified by sampling.

    At each sample ``x`` the wind must satisfy ``h(W, V) < 0`` (so ``-V`` lies in
    the cone) and ``F(x, -V) <= 1``.  The sign of ``||V||^2 + 2 h(W, V)`` decides
    Randers (negative) against Kropina (zero).
    """
    if not isinstance(F, Kropina):
        raise RegimeMismatchError("composite navigation starts from a Kropina metric")
    h = F.h
    samples, kinds = [], set()
    for x in points:
        H = h.at(x)
        w, v = F.W.at(x), V.at(x)
        wv = float(w @ H @ v)
        vv = float(v @ H @ v)
        if not wv < 0:
            raise ConeViolationError(f"h(W, V) = {wv} >= 0 at x={list(map(float, x))}: -V is outside the cone")
        speed = vv / (-2.0 * wv)
        if speed > 1.0 + REGIME_TOL:
            raise SpeedLimitError(f"F(x, -V) = {speed} > 1 at x={list(map(float, x))}")
        disc = vv + 2.0 * wv
        kind = "kropina" if abs(disc) < REGIME_TOL else "randers"
        kinds.add(kind)
        samples.append({"x": [float(t) for t in x], "F_minus_V": speed, "discriminant": disc})
    if len(kinds) > 1:
        raise MixedRegimeError("classification changes between samples (both Randers and Kropina points)")
    if not kinds:
        raise ValueError("composite needs at least one sample point")
    kind = kinds.pop()
    Wt = VectorField(tuple(exprdsl.simplify(c) for c in (F.W + V).components))
    lam = exprdsl.simplify(
        exprdsl.neg(
            exprdsl.add(h_inner_expr(h, V, V), exprdsl.mul(exprdsl.num(2), h_inner_expr(h, F.W, V)))
        )
    )
    metric = Randers(h, Wt) if kind == "randers" else Kropina(h, Wt)
    return CompositeResult(kind, metric, ImplicitNavigation(F, V), lam, Wt, samples)


def u_map(F: FinslerMetric, V: VectorField, x, y):
    """``u = y + F(x, y) V_x``, the vector whose new length equals the old length of ``y``."""
    f = F.value(x, y)
    return np.asarray(y, dtype=float) + f * V.at(x)
