"""Built-in model manifolds with re-verified certificates.

Every model carries a list of claimed properties (wind norm, Killing
residual, sectional curvature, conformal factor, ...).  They are recomputed
when the model is first requested and a failure raises
:class:`CertificateFailure`, so an unverified model never reaches the
verification harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import fields as fld
from .errors import CertificateFailure
from .riemann import isotropy_residual, norm_h
from .spec import ManifoldSpec

__all__ = [
    "Certificate",
    "ModelSpace",
    "euclidean_wind",
    "euclidean_conformal",
    "s3_hopf",
    "MODELS",
    "get_model",
    "model_names",
    "HOPF_WIND",
    "S3_FACTOR",
]

S3_FACTOR = "4/(1 + x1^2 + x2^2 + x3^2)^2"
# pushforward of (x1,x2,x3,x4) -> (-x2,x1,-x4,x3) under stereographic projection
HOPF_WIND = ("x1*x3 - x2", "x2*x3 + x1", "(1 - x1^2 - x2^2 + x3^2)/2")
S3_GUARD = "0.64 - x1^2 - x2^2 - x3^2"


@dataclass(frozen=True)
class Certificate:
    """A claimed property: ``measure(spec, x)`` must stay within ``tol`` of ``expected``."""

    name: str
    expected: float
    tol: float
    provenance: str
    measure: Callable = field(compare=False, repr=False)

    def verify(self, spec: ManifoldSpec, points) -> float:
        worst = 0.0
        for x in points:
            worst = max(worst, abs(float(self.measure(spec, x)) - self.expected))
        if not worst <= self.tol:
            raise CertificateFailure(
                f"{spec.name}: certificate {self.name!r} off by {worst:.3e} (tolerance {self.tol:g})"
            )
        return worst


@dataclass(frozen=True)
class ModelSpace:
    name: str
    parameters: dict
    spec: ManifoldSpec
    certificates: tuple
    description: str = ""

    def verify_certificates(self, count: int = 8) -> dict:
        pts = self.spec.quasi_points(count)
        return {c.name: c.verify(self.spec, pts) for c in self.certificates}


# certificate measures


def _wind_norm(spec, x):
    return norm_h(spec.metric(), spec.wind(), x)


def _wind_killing(spec, x):
    return fld.killing_residual(spec.metric(), spec.wind(), x)


def _sectional_mean(spec, x):
    mean, spread = isotropy_residual(spec.metric(), x)
    return mean + spread  # the spread must vanish too


def _v_conformal_factor(spec, x):
    return fld.conformal_factor_estimate(spec.metric(), spec.field_V(), x)


def _v_killing(spec, x):
    return fld.killing_residual(spec.metric(), spec.field_V(), x)


def _fmt(v: float) -> str:
    v = float(v)
    if v.is_integer():
        return str(int(v))
    return repr(v)


def _box(n, lo=-1.0, hi=1.0):
    return tuple((lo, hi) for _ in range(n))


def _identity(n):
    return tuple(tuple("1" if i == j else "0" for j in range(n)) for i in range(n))


def euclidean_wind(n: int, W, V=None, name=None, box=None) -> ModelSpace:
    """Flat metric with a constant wind; Kropina when ``|W| = 1``, else Randers."""
    W = [float(w) for w in W]
    norm = math.sqrt(sum(w * w for w in W))
    kind = "kropina" if abs(norm - 1.0) < 1e-12 else "randers"
    spec = ManifoldSpec(
        dim=n,
        h=_identity(n),
        W=tuple(_fmt(w) for w in W),
        V=None if V is None else tuple(_fmt(v) for v in V),
        metric_type=kind,
        sample_box=box or _box(n),
        name=name or f"euclidean-{kind}-{n}d",
    )
    certs = [
        Certificate("wind_norm", norm, 1e-12, "TRIVIAL", _wind_norm),
        Certificate("wind_killing", 0.0, 1e-12, "TRIVIAL", _wind_killing),
        Certificate("sectional_curvature", 0.0, 1e-12, "TRIVIAL", _sectional_mean),
    ]
    return ModelSpace(spec.name, {"n": n, "W": W, "V": V}, spec, tuple(certs), "flat space, constant wind")


def _conformal_box(n, c):
    if c == 0:
        return _box(n)
    s = 1.0 / abs(c)
    first = (-0.8 * s, -0.2 * s) if c > 0 else (0.2 * s, 0.8 * s)
    return (first,) + tuple((-0.3 * s, 0.3 * s) for _ in range(n - 1))


def euclidean_conformal(n: int, c: float, name=None) -> ModelSpace:
    """Flat Kropina metric (W = e_1) with the radial field ``V = c x``.

    ``V`` is conformal with factor ``c/2``.  The sample box lies inside the
    disk where ``h(W, V) < 0`` and ``F(x, -V) < 1``.
    """
    W = [1.0] + [0.0] * (n - 1)
    spec = ManifoldSpec(
        dim=n,
        h=_identity(n),
        W=tuple(_fmt(w) for w in W),
        V=tuple(f"{_fmt(c)}*x{i + 1}" for i in range(n)),
        metric_type="kropina",
        sample_box=_conformal_box(n, c),
        name=name or f"euclidean-conformal-{n}d-{_fmt(c)}",
    )
    certs = [
        Certificate("wind_norm", 1.0, 1e-12, "TRIVIAL", _wind_norm),
        Certificate("v_conformal_factor", c / 2.0, 1e-12, "TRIVIAL", _v_conformal_factor),
    ]
    return ModelSpace(spec.name, {"n": n, "c": c}, spec, tuple(certs), "flat Kropina with a radial conformal field")


def s3_hopf(scale: float = 1.0, v_scale: float | None = -0.5, name=None, metric_type=None) -> ModelSpace:
    """Round unit S^3 in stereographic coordinates with the Hopf wind.

    ``scale`` multiplies the unit Hopf field (1 gives a Kropina metric);
    ``v_scale`` sets the second wind ``V = v_scale * Hopf``.
    """
    n = 3
    h = tuple(tuple(S3_FACTOR if i == j else "0" for j in range(n)) for i in range(n))
    W = HOPF_WIND if scale == 1.0 else tuple(f"{_fmt(scale)}*({w})" for w in HOPF_WIND)
    V = None if v_scale is None else tuple(f"{_fmt(v_scale)}*({w})" for w in HOPF_WIND)
    kind = metric_type or ("kropina" if scale == 1.0 else "randers")
    spec = ManifoldSpec(
        dim=n,
        h=h,
        W=W,
        V=V,
        guard=S3_GUARD,
        metric_type=kind,
        sample_box=_box(n, -0.8, 0.8),
        name=name or "s3-hopf",
    )
    certs = [
        Certificate("wind_norm", abs(scale), 1e-9, "DERIVED", _wind_norm),
        Certificate("wind_killing", 0.0, 1e-8, "DERIVED", _wind_killing),
        Certificate("sectional_curvature", 1.0, 1e-6, "DERIVED", _sectional_mean),
    ]
    if V is not None:
        certs.append(Certificate("v_killing", 0.0, 1e-8, "DERIVED", _v_killing))
    return ModelSpace(spec.name, {"scale": scale, "v_scale": v_scale}, spec, tuple(certs), "round S^3, Hopf wind")


def _spec_model(spec: ManifoldSpec, certs, description) -> ModelSpace:
    return ModelSpace(spec.name, {}, spec, tuple(certs), description)


def _flat_kropina_nonkilling():
    r = "sqrt(x1^2 + x2^2)"
    spec = ManifoldSpec(
        dim=2,
        h=_identity(2),
        W=(f"x1/{r}", f"x2/{r}"),
        metric_type="kropina",
        sample_box=((0.5, 1.5), (-0.5, 0.5)),
        name="flat-kropina-nonkilling",
    )
    return _spec_model(spec, [Certificate("wind_norm", 1.0, 1e-12, "TRIVIAL", _wind_norm)], "unit radial wind (not Killing)")


def _flat_randers_nonconformal():
    spec = ManifoldSpec(
        dim=2,
        h=_identity(2),
        W=("0.4*x1^2", "0"),
        metric_type="randers",
        sample_box=_box(2),
        name="flat-randers-nonconformal",
    )
    return _spec_model(spec, [], "Randers wind violating the isotropic-S equation")


def _flat_randers_homothetic():
    spec = ManifoldSpec(
        dim=2,
        h=_identity(2),
        W=("-0.15*x1", "-0.15*x2"),
        metric_type="randers",
        sample_box=_box(2),
        name="flat-randers-homothetic",
    )
    return _spec_model(spec, [], "Randers wind W = -(0.3/2) x, homothetic with c = 0.075")


def _flat_kropina_badv():
    spec = ManifoldSpec(
        dim=2,
        h=_identity(2),
        W=("1", "0"),
        V=("-x2", "x1"),
        metric_type="kropina",
        sample_box=((-0.3, 0.3), (0.2, 0.8)),
        name="flat-kropina-badv",
    )
    certs = [Certificate("v_killing_for_h", 0.0, 1e-12, "TRIVIAL", _v_killing)]
    return _spec_model(spec, certs, "rotation field: Killing for h but not conformal for the Kropina metric")


def _s2xr(kind):
    f = "4/(1 + x1^2 + x2^2)^2"
    w = "1" if kind == "kropina" else "0.5"
    spec = ManifoldSpec(
        dim=3,
        h=((f, "0", "0"), ("0", f, "0"), ("0", "0", "1")),
        W=("0", "0", w),
        V=("0", "0", "-0.5") if kind == "kropina" else None,
        metric_type=kind,
        sample_box=_box(3, -0.8, 0.8),
        name=f"s2xr-{kind}",
    )
    certs = [
        Certificate("wind_norm", float(w), 1e-12, "TRIVIAL", _wind_norm),
        Certificate("wind_killing", 0.0, 1e-10, "TRIVIAL", _wind_killing),
    ]
    return _spec_model(spec, certs, "S^2 x R (not of isotropic sectional curvature), vertical wind")


def _v_speed(spec, x):
    """``F(x, -V) = ||V||^2 / (-2 h(W, V))`` for a Kropina spec."""
    H = spec.metric().at(x)
    w, v = spec.wind().at(x), spec.field_V().at(x)
    return float(v @ H @ v) / (-2.0 * float(w @ H @ v))


def _flat_kropina_fastv():
    spec = ManifoldSpec(
        dim=2,
        h=_identity(2),
        W=("1", "0"),
        V=("-3", "0"),
        metric_type="kropina",
        sample_box=_box(2),
        name="flat-kropina-fastv",
    )
    certs = [Certificate("v_speed", 1.5, 1e-12, "TRIVIAL", _v_speed)]
    return _spec_model(spec, certs, "second wind faster than the metric allows (F(x, -V) = 3/2)")


def _flat_kropina_critical_nonkilling():
    # V = -2 h(W, e) e for the unit field e = (cos t, sin t), t = 0.3 x2: F(x, -V) = 1 but V is not Killing
    spec = ManifoldSpec(
        dim=2,
        h=_identity(2),
        W=("1", "0"),
        V=("-1 - cos(0.6*x2)", "-sin(0.6*x2)"),
        metric_type="kropina",
        sample_box=_box(2),
        name="flat-kropina-critical-nonkilling",
    )
    certs = [Certificate("v_speed", 1.0, 1e-12, "TRIVIAL", _v_speed)]
    return _spec_model(spec, certs, "unit-speed second wind that is not Killing")


def _flat_kropina_gauge():
    spec = ManifoldSpec(
        dim=2,
        h=_identity(2),
        W=("1", "0"),
        V=("-1/2", "0"),
        metric_type="kropina",
        sample_box=_box(2),
        beta_norm="2 + x1^2",
        name="flat-kropina-gauge",
    )
    return _spec_model(spec, [Certificate("wind_norm", 1.0, 1e-12, "TRIVIAL", _wind_norm)], "flat Kropina with non-constant ||beta||_alpha")


def _registry():
    return {
        "flat-kropina": lambda: euclidean_wind(2, (1, 0), V=(-0.5, 0), name="flat-kropina"),
        "flat-kropina-3d": lambda: euclidean_wind(3, (0, 0, 1), V=(0, 0, -0.5), name="flat-kropina-3d"),
        "flat-randers": lambda: euclidean_wind(2, (0.5, 0), name="flat-randers"),
        "flat-randers-3d": lambda: euclidean_wind(3, (0, 0, 0.5), name="flat-randers-3d"),
        "flat-kropina-critical": lambda: euclidean_wind(2, (1, 0), V=(-2, 0), name="flat-kropina-critical"),
        "flat-kropina-conformal": lambda: euclidean_conformal(2, 1.0, name="flat-kropina-conformal"),
        "flat-kropina-conformal-3d": lambda: euclidean_conformal(3, 1.0, name="flat-kropina-conformal-3d"),
        "flat-randers-homothetic": _flat_randers_homothetic,
        "s3-hopf": lambda: s3_hopf(1.0, -0.5, name="s3-hopf"),
        "s3-hopf-critical": lambda: s3_hopf(1.0, -2.0, name="s3-hopf-critical"),
        "s3-randers": lambda: s3_hopf(0.5, None, name="s3-randers"),
        "flat-kropina-nonkilling": _flat_kropina_nonkilling,
        "flat-randers-nonconformal": _flat_randers_nonconformal,
        "flat-kropina-badv": _flat_kropina_badv,
        "s2xr-randers": lambda: _s2xr("randers"),
        "s2xr-kropina": lambda: _s2xr("kropina"),
        "flat-kropina-gauge": _flat_kropina_gauge,
        "flat-kropina-fastv": _flat_kropina_fastv,
        "flat-kropina-critical-nonkilling": _flat_kropina_critical_nonkilling,
    }


MODELS = _registry()
_CACHE: dict = {}


def model_names():
    return sorted(MODELS)


def get_model(name: str, verify: bool = True) -> ModelSpace:
    """Build a registered model; its certificates are checked on first use."""
    if name not in MODELS:
        raise KeyError(f"unknown model {name!r}; known: {', '.join(model_names())}")
    if not verify:
        return MODELS[name]()
    if name not in _CACHE:
        model = MODELS[name]()
        model.verify_certificates()
        _CACHE[name] = model
    return _CACHE[name]
