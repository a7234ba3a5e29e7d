"""Finsler metrics built from navigation data and their curvature.

Every quantity is obtained by differentiating ``F^2`` with jets in the ``2n``
variables ``(x, y)``:

* fundamental tensor / Cartan torsion: y-jets of order 2 / 3;
* spray coefficients ``G^i``: (x, y)-jets of ``F^2`` truncated two orders
  above the jet wanted for ``G``;
* Riemann curvature ``R^i_k`` needs ``G`` to second order, hence ``F^2`` to
  fourth order;
* S-curvature needs ``G`` to first order plus the x-gradient of the
  Busemann-Hausdorff density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _linalg, exprdsl
from .errors import (
    DegenerateFlagError,
    DimensionTooSmallError,
    NoBracketError,
    NonConvergenceError,
    OutsideConeError,
    SingularFundamentalTensorError,
    ZeroVectorError,
)
from .jets import Jet, jet_space
from .jets import sqrt as _sqrt
from .riemann import CovectorField, RiemannMetric, VectorField

__all__ = [
    "EPS_CONE",
    "FinslerMetric",
    "Riemannian",
    "Randers",
    "Kropina",
    "ImplicitNavigation",
    "CurvatureReport",
    "solve_ray",
    "value",
    "fundamental_tensor",
    "angular_metric",
    "cartan_torsion",
    "mean_cartan",
    "c_reducibility_residual",
    "spray",
    "riemann_curvature",
    "ricci",
    "flag_curvature",
    "scalar_flag_residual",
    "bh_density",
    "bh_density_montecarlo",
    "s_curvature",
    "curvature_report",
]

EPS_CONE = 1e-6


def _const(v):
    return v.value if isinstance(v, Jet) else v


def _as_jets(arr, space):
    """ndarray (..., size) -> nested lists of Jet objects."""
    if arr.ndim == 1:
        return Jet(space, arr)
    return [_as_jets(a, space) for a in arr]


def _fields_at(exprs_owner, x, space):
    """Values (space is None) or Jet objects of a metric/field at x."""
    if space is None:
        return exprs_owner.jets(x, 0)[..., 0].tolist()
    return _as_jets(exprs_owner.jets(x, space.order, space), space)


class _Nav:
    """Pointwise navigation data ``(h, W)`` (floats or jets)."""

    __slots__ = ("h", "W", "extra")

    def __init__(self, h, W, extra=None):
        self.h = h
        self.W = W
        self.extra = extra

    def constant(self):
        h = [[_const(v) for v in row] for row in self.h]
        W = None if self.W is None else [_const(v) for v in self.W]
        extra = None if self.extra is None else _const(self.extra)
        return _Nav(h, W, extra)

    @property
    def W_low(self):
        return _linalg.matvec(self.h, self.W)


class FinslerMetric:
    """Common interface of the metric variants.

    Subclasses implement ``local`` (pointwise coefficient data, as floats or
    as jets embedded in a given space), ``F`` (the formula in terms of that
    data, generic over scalar type), ``cone_margin`` and ``density``.
    """

    kind = "abstract"

    def __init__(self, h: RiemannMetric):
        self.h = h

    @property
    def dim(self) -> int:
        return self.h.dim

    def local(self, x, space=None):
        raise NotImplementedError

    def F(self, data, y):
        raise NotImplementedError

    def F2(self, data, y):
        f = self.F(data, y)
        return f * f

    def cone_margin(self, data, y) -> float:
        return math.inf

    def density(self, data):
        raise NotImplementedError

    def unit_ball_box(self, data):
        raise NotImplementedError

    def check_point(self, x, y):
        """Validate ``(x, y)``; returns float data at x."""
        self.h.check_guard(x)
        y = np.asarray(y, dtype=float)
        if len(y) != self.dim:
            raise ValueError(f"direction has {len(y)} components, expected {self.dim}")
        if not np.any(y):
            raise ZeroVectorError("y must be non-zero")
        data = self.local(x)
        if not self.cone_margin(data, y) >= EPS_CONE:
            raise OutsideConeError(f"y={y.tolist()} is outside (or on the boundary of) the cone at x={[float(t) for t in x]}")
        return data

    def value(self, x, y) -> float:
        data = self.check_point(x, y)
        return float(self.F(data, [float(v) for v in y]))

    def __call__(self, x, y):
        return self.value(x, y)


class Riemannian(FinslerMetric):
    kind = "riemannian"

    def local(self, x, space=None):
        return _Nav(_fields_at(self.h, x, space), None)

    def F(self, data, y):
        return _sqrt(_linalg.quad(data.h, y))

    def F2(self, data, y):
        return _linalg.quad(data.h, y)

    def density(self, data):
        return _sqrt(_linalg.det(data.h))

    def unit_ball_box(self, data):
        H = np.array(data.h, dtype=float)
        return np.zeros(len(H)), np.sqrt(np.diag(np.linalg.inv(H)))


class _NavigationMetric(FinslerMetric):
    def __init__(self, h: RiemannMetric, W: VectorField):
        super().__init__(h)
        if W.dim != h.dim:
            raise ValueError("wind and metric dimensions differ")
        self.W = W

    def local(self, x, space=None):
        return _Nav(_fields_at(self.h, x, space), _fields_at(self.W, x, space))

    def wind_norm(self, x) -> float:
        data = self.local(x)
        return math.sqrt(_linalg.dot(data.W_low, data.W))

    def unit_ball_box(self, data):
        H = np.array(data.h, dtype=float)
        return np.array(data.W, dtype=float), np.sqrt(np.diag(np.linalg.inv(H)))


class Randers(_NavigationMetric):
    """Subcritical navigation: ``F = (sqrt(lam h^2 + W0^2) - W0) / lam``."""

    kind = "randers"

    def F(self, data, y):
        Wl = data.W_low
        lam = 1.0 - _linalg.dot(Wl, data.W)
        W0 = _linalg.dot(Wl, y)
        h2 = _linalg.quad(data.h, y)
        return (_sqrt(lam * h2 + W0 * W0) - W0) / lam

    def alpha_beta_local(self, data):
        """Pointwise ``(a_ij, b_i)`` of the equivalent ``alpha + beta`` form."""
        Wl = data.W_low
        lam = 1.0 - _linalg.dot(Wl, data.W)
        n = len(Wl)
        a = [[data.h[i][j] / lam + Wl[i] * Wl[j] / (lam * lam) for j in range(n)] for i in range(n)]
        b = [-w / lam for w in Wl]
        return a, b

    def density(self, data):
        a, b = self.alpha_beta_local(data)
        n = len(b)
        b2 = _linalg.quad(_linalg.inverse(a), b)
        return (1.0 - b2) ** ((n + 1) / 2) * _sqrt(_linalg.det(a))


class Kropina(_NavigationMetric):
    """Critical navigation: ``F = h^2 / (2 W0)`` on the half-space ``W0 > 0``.

    ``beta_norm`` is the function ``b = ||beta||_alpha`` selecting the
    ``(alpha, beta)`` representative: ``a = (b^2/4) h``, ``beta = (b^2/2) W0``.
    """

    kind = "kropina"

    def __init__(self, h, W, beta_norm: exprdsl.Expr | None = None):
        super().__init__(h, W)
        self.beta_norm = beta_norm if beta_norm is not None else exprdsl.num(2)

    def local(self, x, space=None):
        data = super().local(x, space)
        b = _fields_at(_ExprRow(self.beta_norm), x, space)[0]
        data.extra = b
        return data

    def F(self, data, y):
        return _linalg.quad(data.h, y) / (2.0 * _linalg.dot(data.W_low, y))

    def F2(self, data, y):
        h2 = _linalg.quad(data.h, y)
        W0 = _linalg.dot(data.W_low, y)
        return (h2 * h2) / (4.0 * (W0 * W0))

    def cone_margin(self, data, y):
        y = [float(v) for v in y]
        hy = math.sqrt(max(_linalg.quad(data.h, y), 0.0))
        if hy == 0.0:
            return 0.0
        # beta / alpha for the (alpha, beta) representative
        return float(data.extra) * _linalg.dot(data.W_low, y) / hy

    def density(self, data):
        b = data.extra
        n = len(data.h)
        a = [[(b * b / 4.0) * v for v in row] for row in data.h]
        return (2.0 / b) ** n * _sqrt(_linalg.det(a))

    def alpha_beta(self):
        """Expression form ``(alpha, beta)`` of this metric."""
        n = self.dim
        b2 = exprdsl.power(self.beta_norm, 2)
        a_scale = exprdsl.div(b2, exprdsl.num(4))
        b_scale = exprdsl.div(b2, exprdsl.num(2))
        rows = [[exprdsl.mul(a_scale, self.h.components[i][j]) for j in range(n)] for i in range(n)]
        a = RiemannMetric(tuple(tuple(r) for r in rows), self.h.guard)
        low = [
            exprdsl.add(*[exprdsl.mul(self.h.components[i][j], self.W.components[j]) for j in range(n)])
            for i in range(n)
        ]
        beta = CovectorField(tuple(exprdsl.mul(b_scale, w) for w in low))
        return a, beta


class _ExprRow:
    """Adapter giving a single expression the ``jets`` interface of a field."""

    def __init__(self, expr):
        self.components = (expr,)

    def jets(self, x, order, space=None):
        return VectorField(self.components).jets(x, order, space)


# implicit navigation


def solve_ray(phi, data, y, wind, t_min=1e-8, t_max=1e8, max_iter=200):
    """Unique ``t > 0`` with ``phi(y/t - wind) = 1`` (floats).

    ``phi`` is a FinslerMetric and ``data`` its float data at the base point.
    Points outside the conic domain of ``phi`` count as outside its unit ball.
    """
    y = np.asarray(y, dtype=float)
    wind = np.asarray(wind, dtype=float)

    def resid(t):
        v = y / t - wind
        if not np.any(v) or phi.cone_margin(data, v) <= 0.0:
            return math.inf
        return float(phi.F(data, v.tolist())) - 1.0

    def slope(t):
        tj = Jet.variable(0, t, 1, 1)
        inv = tj.reciprocal()
        v = [yi * inv - wi for yi, wi in zip(y, wind)]
        return phi.F(data, v).partial(0)

    t = 1.0
    r = resid(t)
    if r == 0.0:
        return t
    lo = hi = None
    if r > 0:
        lo = t
        while True:
            t *= 2.0
            if t > t_max:
                raise NoBracketError(f"no sign change of the navigation residual for y={y.tolist()}")
            r = resid(t)
            if r <= 0:
                hi = t
                break
            lo = t
    else:
        hi = t
        while True:
            t /= 2.0
            if t < t_min:
                raise NoBracketError(f"no sign change of the navigation residual for y={y.tolist()}")
            r = resid(t)
            if r >= 0:
                lo = t
                break
            hi = t
    if r == 0.0:
        return t
    r_lo, r_hi = resid(lo), resid(hi)
    t = hi if abs(r_hi) < abs(r_lo) else lo
    r = r_hi if t == hi else r_lo
    for _ in range(max_iter):
        if abs(r) < 1e-15:
            return t
        step_ok = False
        if math.isfinite(r):
            d = slope(t)
            if d < 0 and math.isfinite(d):
                cand = t - r / d
                if lo < cand < hi:
                    t, step_ok = cand, True
        if not step_ok:
            t = math.sqrt(lo * hi) if hi > 4 * lo else 0.5 * (lo + hi)
        r = resid(t)
        if r > 0:
            lo = t
        elif r < 0:
            hi = t
        else:
            return t
        if hi - lo <= 4e-16 * hi:
            break
    if abs(r) < 1e-12:
        return t
    raise NonConvergenceError(f"navigation solve did not converge (residual {r})")


class ImplicitNavigation(FinslerMetric):
    """Solution of ``base(x, y/F - wind) = 1``, evaluated by root finding.

    Jets of ``F`` are obtained from the implicit equation by a chord
    iteration ``t <- t - (base(x, y/t - wind) - 1) / r0`` started at the float
    root, with ``r0`` the t-derivative of the residual there; each sweep fixes
    one more Taylor order.
    """

    kind = "implicit"

    def __init__(self, base: FinslerMetric, wind: VectorField):
        super().__init__(base.h)
        self.base = base
        self.wind = wind

    def local(self, x, space=None):
        return (self.base.local(x, space), _fields_at(self.wind, x, space))

    @staticmethod
    def _constant(data):
        bdata, V = data
        return bdata.constant(), [_const(v) for v in V]

    def F(self, data, y):
        if any(isinstance(v, Jet) for v in y):
            return self._jet_F(data, y)
        bdata, V = data
        return solve_ray(self.base, bdata, y, V)

    def _jet_F(self, data, y):
        bdata, V = data
        cb, cV = self._constant(data)
        y0 = [_const(v) for v in y]
        t0 = solve_ray(self.base, cb, y0, cV)
        tj = Jet.variable(0, t0, 1, 1)
        inv = tj.reciprocal()
        r0 = self.base.F(cb, [yi * inv - wi for yi, wi in zip(y0, cV)]).partial(0)
        space = next(v.space for v in y if isinstance(v, Jet))
        t = Jet(space, space.constant(t0))
        for _ in range(space.order + 1):
            inv = t.reciprocal()
            v = [yi * inv - wi for yi, wi in zip(y, V)]
            t = t - (self.base.F(bdata, v) - 1.0) * (1.0 / r0)
        return t

    def cone_margin(self, data, y):
        bdata, V = self._constant(data)
        try:
            t = solve_ray(self.base, bdata, y, V)
        except (NoBracketError, NonConvergenceError):
            return 0.0
        v = np.asarray(y, dtype=float) / t - np.asarray(V)
        return self.base.cone_margin(bdata, v)

    def density(self, data):
        # the unit ball is a translate of the base unit ball
        return self.base.density(data[0])

    def unit_ball_box(self, data):
        c, half = self.base.unit_ball_box(data[0])
        return c + np.array([_const(v) for v in data[1]]), half


# jets of F and F^2


def _y_jet(F: FinslerMetric, data, y, order, square=True):
    n = F.dim
    sp = jet_space(n, order)
    yj = [Jet(sp, sp.variable(i, y[i])) for i in range(n)]
    return F.F2(data, yj) if square else F.F(data, yj)


def _xy_f2(F: FinslerMetric, x, y, order):
    n = F.dim
    sp = jet_space(2 * n, order)
    data = F.local(x, sp)
    yj = [Jet(sp, sp.variable(n + i, y[i])) for i in range(n)]
    return sp, F.F2(data, yj).coeffs


def _prep(F, x, y):
    data = F.check_point(x, y)
    return data, np.asarray(x, dtype=float), np.asarray(y, dtype=float)


def value(F: FinslerMetric, x, y) -> float:
    return F.value(x, y)


def fundamental_tensor(F: FinslerMetric, x, y):
    data, x, y = _prep(F, x, y)
    return 0.5 * _y_jet(F, data, y, 2).hessian()


def angular_metric(F: FinslerMetric, x, y):
    data, x, y = _prep(F, x, y)
    f = _y_jet(F, data, y, 2, square=False)
    return f.value * f.hessian()


def cartan_torsion(F: FinslerMetric, x, y):
    data, x, y = _prep(F, x, y)
    j = _y_jet(F, data, y, 3)
    return 0.25 * j.space.derivative_tensor(j.coeffs, 3)


def mean_cartan(F: FinslerMetric, x, y):
    g = fundamental_tensor(F, x, y)
    C = cartan_torsion(F, x, y)
    return np.einsum("jk,ijk->i", np.linalg.inv(g), C)


def c_reducibility_residual(F: FinslerMetric, x, y) -> float:
    """Max-norm of ``C_ijk - (I_i h_jk + I_j h_ik + I_k h_ij) / (n+1)``."""
    n = F.dim
    if n < 3:
        raise DimensionTooSmallError("C-reducibility needs dimension >= 3")
    data, x, y = _prep(F, x, y)
    f = _y_jet(F, data, y, 3, square=False)
    sp = f.space
    f2 = f * f
    g = 0.5 * f2.hessian()
    C = 0.25 * sp.derivative_tensor(f2.coeffs, 3)
    ang = f.value * f.hessian()
    I = np.einsum("jk,ijk->i", np.linalg.inv(g), C)
    pred = (
        np.einsum("i,jk->ijk", I, ang) + np.einsum("j,ik->ijk", I, ang) + np.einsum("k,ij->ijk", I, ang)
    ) / (n + 1)
    return float(np.abs(C - pred).max())


def _spray_jets(F: FinslerMetric, x, y, order):
    """Spray coefficients as (x, y)-jets of the given order, plus g at the point."""
    n = F.dim
    sp, J = _xy_f2(F, x, y, order + 2)
    sp1 = jet_space(2 * n, order + 1)
    lo = jet_space(2 * n, order)
    dy = [sp.diff(J, n + l) for l in range(n)]
    g = 0.5 * np.array([[sp1.diff(dy[i], n + j) for j in range(n)] for i in range(n)])
    g0 = g[..., 0]
    if abs(np.linalg.det(g0)) < 1e-14 * max(1.0, np.abs(g0).max()) ** n:
        raise SingularFundamentalTensorError("fundamental tensor is singular")
    T = []
    for l in range(n):
        acc = -lo.truncate(sp.diff(J, l), order)
        for m in range(n):
            acc = acc + lo.mul(lo.variable(n + m, y[m]), sp1.diff(dy[l], m))
        T.append(acc)
    G = 0.25 * lo.matvec(lo.inv(g), np.array(T))
    return lo, G, g0, J[0]


def spray(F: FinslerMetric, x, y):
    _prep(F, x, y)
    _, G, _, _ = _spray_jets(F, np.asarray(x, float), np.asarray(y, float), 0)
    return G[:, 0]


def _riemann_from_spray(lo, G, y, n):
    grad = lo.gradient(G)
    hess = lo.hessian(G)
    Gx = grad[:, :n]
    Gy = grad[:, n:]
    Gxy = hess[:, :n, n:]
    Gyy = hess[:, n:, n:]
    G0 = G[:, 0]
    return (
        2.0 * Gx
        - np.einsum("m,imk->ik", y, Gxy)
        + 2.0 * np.einsum("m,imk->ik", G0, Gyy)
        - Gy @ Gy
    )


def riemann_curvature(F: FinslerMetric, x, y):
    """``R^i_k`` at ``(x, y)`` as an (n, n) array indexed ``[i, k]``."""
    _, x, y = _prep(F, x, y)
    lo, G, _, _ = _spray_jets(F, x, y, 2)
    return _riemann_from_spray(lo, G, y, F.dim)


def ricci(F: FinslerMetric, x, y) -> float:
    return float(np.trace(riemann_curvature(F, x, y)))


def _flag(R, g, f2, y, v):
    v = np.asarray(v, dtype=float)
    gvv = v @ g @ v
    gyv = y @ g @ v
    den = f2 * gvv - gyv * gyv
    if not gvv > 0 or den < 1e-12 * f2 * gvv:
        raise DegenerateFlagError("transverse vector is (nearly) parallel to the flagpole")
    return float((g @ v) @ R @ v / den)


def flag_curvature(F: FinslerMetric, x, y, v) -> float:
    data, x, y = _prep(F, x, y)
    lo, G, g, f2 = _spray_jets(F, x, y, 2)
    R = _riemann_from_spray(lo, G, y, F.dim)
    return _flag(R, g, f2, y, v)


def _scalar_flag(R, g, f2, y, n):
    ric = float(np.trace(R))
    k_hat = ric / ((n - 1) * f2)
    pred = k_hat * (f2 * np.eye(n) - np.outer(y, g @ y))
    return float(np.abs(R - pred).max()), k_hat


def scalar_flag_residual(F: FinslerMetric, x, y) -> float:
    _, x, y = _prep(F, x, y)
    lo, G, g, f2 = _spray_jets(F, x, y, 2)
    R = _riemann_from_spray(lo, G, y, F.dim)
    return _scalar_flag(R, g, f2, y, F.dim)[0]


def bh_density(F: FinslerMetric, x) -> float:
    """Busemann-Hausdorff volume density (closed form per variant)."""
    F.h.check_guard(x)
    return float(F.density(F.local(x)))


def _log_density_gradient(F: FinslerMetric, x):
    n = F.dim
    sp = jet_space(n, 1)
    d = F.density(F.local(x, sp))
    return d.gradient() / d.value


def bh_density_montecarlo(F: FinslerMetric, x, samples: int = 1_000_000, seed: int = 0) -> float:
    """Monte-Carlo estimate of the BH density from the coordinate volume of ``{F < 1}``."""
    data = F.local(x)
    n = F.dim
    center, half = F.unit_ball_box(data)
    rng = np.random.Generator(np.random.Philox(seed))
    Y = center + half * (2.0 * rng.random((samples, n)) - 1.0)
    cols = [Y[:, i] for i in range(n)]
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.asarray(F.F(data, cols), dtype=float)
        if isinstance(F, Kropina):
            vals = np.where(np.asarray(_linalg.dot(data.W_low, cols)) > 0, vals, np.inf)
    inside = np.count_nonzero(vals < 1.0)
    volume = inside / samples * np.prod(2.0 * half)
    unit_ball = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
    return unit_ball / volume


def s_curvature(F: FinslerMetric, x, y) -> float:
    _, x, y = _prep(F, x, y)
    lo, G, _, _ = _spray_jets(F, x, y, 1)
    return _s_from_spray(F, lo, G, x, y)


def _s_from_spray(F, lo, G, x, y):
    n = F.dim
    grad = lo.gradient(G)
    div_y = float(np.trace(grad[:, n:]))
    return div_y - float(y @ _log_density_gradient(F, x))


@dataclass
class CurvatureReport:
    x: list
    y: list
    F: float
    g: list
    G: list
    R: list
    Ric: float
    K: list
    flags: list
    S: float
    residuals: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "x": self.x,
            "y": self.y,
            "F": self.F,
            "g": self.g,
            "G": self.G,
            "R": self.R,
            "Ric": self.Ric,
            "K": self.K,
            "flags": self.flags,
            "S": self.S,
            "residuals": dict(self.residuals),
        }


def curvature_report(F: FinslerMetric, x, y, flags=None) -> CurvatureReport:
    """All curvature data at one tangent vector.

    ``flags`` are transverse vectors; by default the coordinate axes that are
    not parallel to ``y`` are used.
    """
    data, x, y = _prep(F, x, y)
    n = F.dim
    lo, G, g, f2 = _spray_jets(F, x, y, 2)
    R = _riemann_from_spray(lo, G, y, n)
    if flags is None:
        flags = []
        for e in np.eye(n):
            cos2 = (y @ g @ e) ** 2 / (f2 * (e @ g @ e))
            if cos2 < 1 - 1e-6:
                flags.append(e)
    ks = [_flag(R, g, f2, y, v) for v in flags]
    f = math.sqrt(f2)
    s = _s_from_spray(F, lo, G, x, y)
    homog = abs(F.F(data, (2 * y).tolist()) - 2 * f) / f
    scalar = _scalar_flag(R, g, f2, y, n)[0] if n > 1 else 0.0
    return CurvatureReport(
        x=x.tolist(),
        y=y.tolist(),
        F=f,
        g=g.tolist(),
        G=G[:, 0].tolist(),
        R=R.tolist(),
        Ric=float(np.trace(R)),
        K=ks,
        flags=[np.asarray(v, dtype=float).tolist() for v in flags],
        S=s,
        residuals={
            "homogeneity": float(homog),
            "R_y": float(np.abs(R @ y).max()),
            "scalar_flag": scalar,
        },
    )
