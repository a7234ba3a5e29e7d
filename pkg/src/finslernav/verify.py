"""Sampling harness turning the navigation and curvature results into checks.

Each check samples a ManifoldSpec, evaluates hypothesis residuals and
conclusion residuals, and reports a verdict:

``pass``
    the hypothesis holds and so does the conclusion (for equivalences: both
    sides hold);
``fail``
    a counterexample: hypothesis holds but the conclusion does not, or the
    two sides of an equivalence disagree;
``vacuous``
    the hypothesis fails (for equivalences: both sides fail), so the sample
    is evidence of nothing;
``skipped``
    the check does not apply to this kind of metric.

Field residuals (PDE residuals of winds) use ``tol_h``; curvature residuals
use ``tol_c``.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fields as fld
from .errors import (
    ConeViolationError,
    DegenerateFlagError,
    FinslerNavError,
    MixedRegimeError,
    OutsideConeError,
    SpeedLimitError,
)
from .finsler import Kropina, Randers, curvature_report
from .jets import jet_space
from .navigation import composite
from .riemann import VectorField, cov_deriv_jets, einstein_residual, isotropy_residual
from .spec import ManifoldSpec, make_rng

__all__ = [
    "TOL_H",
    "TOL_C",
    "SEPARATION",
    "CROSS_TOL",
    "CheckResult",
    "CHECKS",
    "run_check",
    "run_all",
    "results_json",
]

TOL_H = 1e-7
TOL_C = 1e-5
SEPARATION = 1e-4  # a genuinely violated identity sits above this
CROSS_TOL = 1e-8  # closed-form versus implicit metric


def _num(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_num(t) for t in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_num(t) for t in v]
    if isinstance(v, dict):
        return {str(k): _num(t) for k, t in v.items()}
    return v


@dataclass
class CheckResult:
    check: str
    spec: str
    samples: int
    seed: int
    tol_h: float
    tol_c: float
    verdict: str
    hypothesis_residual: float | None = None
    conclusion_residual: float | None = None
    constants: dict = field(default_factory=dict)
    parts: dict = field(default_factory=dict)
    worst: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self):
        return _num(
            {
                "check": self.check,
                "spec": self.spec,
                "samples": self.samples,
                "seed": self.seed,
                "tol_h": self.tol_h,
                "tol_c": self.tol_c,
                "verdict": self.verdict,
                "hypothesis_residual": self.hypothesis_residual,
                "conclusion_residual": self.conclusion_residual,
                "constants": self.constants,
                "parts": self.parts,
                "worst": self.worst,
                "notes": list(self.notes),
            }
        )


def results_json(results) -> str:
    return json.dumps([r.to_dict() for r in results], sort_keys=True, indent=2) + "\n"


# verdict algebra


def implication(hyp_ok: bool, concl_ok: bool) -> str:
    if not hyp_ok:
        return "vacuous"
    return "pass" if concl_ok else "fail"


def equivalence(left_ok: bool, right_ok: bool) -> str:
    if left_ok and right_ok:
        return "pass"
    if not left_ok and not right_ok:
        return "vacuous"
    return "fail"


def combine(verdicts) -> str:
    verdicts = list(verdicts)
    if "fail" in verdicts:
        return "fail"
    if "pass" in verdicts:
        return "pass"
    if "vacuous" in verdicts:
        return "vacuous"
    return "skipped"


class _Worst:
    """Running maximum of a residual with the sample that produced it."""

    def __init__(self):
        self.value = 0.0
        self.where = {}

    def add(self, value, **where):
        value = float(value)
        if math.isnan(value):
            value = math.inf
        if value > self.value or not self.where:
            self.value = max(value, self.value)
            self.where = {k: _num(np.asarray(v, dtype=float)) for k, v in where.items()}


# sampling helpers


class _Ctx:
    def __init__(self, spec: ManifoldSpec, samples: int, seed: int, tol_h: float, tol_c: float):
        self.spec = spec
        self.samples = samples
        self.seed = seed
        self.tol_h = tol_h
        self.tol_c = tol_c
        self.n = spec.dim
        self.h = spec.metric()
        self.points = spec.sample_points(samples, seed)
        self.rng = make_rng(seed + 1)
        self._F = None

    @property
    def F(self):
        if self._F is None:
            self._F = self.spec.finsler()
        return self._F

    def result(self, check, verdict, **kw):
        return CheckResult(
            check=check,
            spec=self.spec.name or "<spec>",
            samples=self.samples,
            seed=self.seed,
            tol_h=self.tol_h,
            tol_c=self.tol_c,
            verdict=verdict,
            **kw,
        )

    def directions(self, F, x, count):
        return self.spec.sample_directions(F, x, count, self.rng)

    def flag(self, y):
        for _ in range(100):
            v = self.rng.normal(size=self.n)
            if abs(v @ y) < 0.99 * np.linalg.norm(v) * np.linalg.norm(y):
                return v
        raise DegenerateFlagError("could not draw a transverse vector")


def _fit_weak(ys, fs, targets):
    """Least-squares fit ``target = 3 theta_m y^m / F + kappa``.

    Returns ``(theta, kappa, max misfit)``.
    """
    A = np.column_stack([np.asarray(ys) / np.asarray(fs)[:, None], np.ones(len(fs))])
    t = np.asarray(targets, dtype=float)
    coef, *_ = np.linalg.lstsq(A, t, rcond=None)
    misfit = float(np.abs(A @ coef - t).max())
    return coef[:-1] / 3.0, float(coef[-1]), misfit


def _s_isotropy(ctx, F, x, ys):
    """Fit ``S = (n+1) c F`` at one point; returns (c, residual, reports)."""
    reps = [curvature_report(F, x, y, flags=[ctx.flag(y)]) for y in ys]
    f = np.array([r.F for r in reps])
    s = np.array([r.S for r in reps])
    c = float(f @ s / (f @ f) / (ctx.n + 1))
    res = float(np.max(np.abs(s - (ctx.n + 1) * c * f) / (1 + np.abs(s))))
    return c, res, reps


def _c_jets(h, W, x):
    """``c`` with ``W_{i|j} + W_{j|i} = -4 c h_ij`` (trace fit) and its gradient."""
    j = fld.conformal_factor_jets(h, W, x, 1)
    return -float(j[0]), -np.asarray(j[1:], dtype=float)


def _tensor_c_residual(h, W, x):
    H = h.at(x)
    D = cov_deriv_jets(h, W, x, 0)[..., 0]
    S = D + D.T
    c = -float(np.trace(np.linalg.solve(H, S))) / (4 * h.dim)
    return c, float(np.abs(S + 4 * c * H).max())


# target metrics


def _randers_target(ctx):
    """Randers metric the Randers checks act on, or a reason to skip."""
    spec = ctx.spec
    if spec.metric_type == "riemannian":
        return None, None, "Riemannian spec"
    F = ctx.F
    if isinstance(F, Randers):
        return F, None, None
    V = spec.field_V()
    if V is None:
        return None, None, "Kropina spec without a second wind V"
    try:
        res = composite(F, V, ctx.points)
    except (ConeViolationError, SpeedLimitError, MixedRegimeError) as exc:
        return None, None, f"composite navigation not defined: {exc}"
    if res.classification != "randers":
        return None, None, "composite metric is Kropina"
    return res.metric, res, None


def _kropina_target(ctx):
    if ctx.spec.metric_type == "riemannian":
        return None, "Riemannian spec"
    F = ctx.F
    if not isinstance(F, Kropina):
        return None, "not a Kropina spec"
    return F, None


def _cross_pipeline(ctx, res, pairs):
    """Closed-form composite versus the implicit navigation metric."""
    worst = 0.0
    for x, y in pairs:
        a = curvature_report(res.metric, x, y)
        b = curvature_report(res.implicit, x, y, flags=[np.asarray(v) for v in a.flags])
        diffs = [abs(a.F - b.F), abs(a.S - b.S), abs(a.Ric - b.Ric)] + [abs(p - q) for p, q in zip(a.K, b.K)]
        worst = max(worst, max(diffs))
    return worst


# Randers checks


def check_randers_isotropic_s(spec, samples=10, seed=0, tol_h=TOL_H, tol_c=TOL_C, directions=3):
    """Isotropic S-curvature ``S = (n+1) c F`` versus ``W_{i|j}+W_{j|i} = -4 c h_ij``."""
    name = "randers-isotropic-s"
    ctx = _Ctx(spec, samples, seed, tol_h, tol_c)
    F, res, why = _randers_target(ctx)
    if F is None:
        return ctx.result(name, "skipped", notes=[why])
    tens, sres = _Worst(), _Worst()
    cs = []
    for x in ctx.points:
        c, tr = _tensor_c_residual(ctx.h, F.W, x)
        tens.add(tr, x=x)
        cs.append(c)
        for y in ctx.directions(F, x, directions):
            r = curvature_report(F, x, y, flags=[ctx.flag(y)])
            sres.add(abs(r.S - (ctx.n + 1) * c * r.F) / (1 + abs(r.S)), x=x, y=y)
    verdict = equivalence(tens.value < tol_h, sres.value < tol_c)
    notes = []
    if res is not None:
        cross = _cross_pipeline(ctx, res, [(ctx.points[0], ctx.directions(F, ctx.points[0], 1)[0])])
        notes.append(f"implicit-vs-closed-form max difference {cross:.3e}")
        if cross > CROSS_TOL:
            verdict = "fail"
    return ctx.result(
        name,
        verdict,
        hypothesis_residual=tens.value,
        conclusion_residual=sres.value,
        constants={"c": cs},
        worst=sres.where if sres.value >= tens.value else tens.where,
        notes=notes,
    )


def _randers_curvature_data(ctx, F, x, count):
    """Sample flags at x; returns lists of y, F, K, Ric and the S-isotropy fit."""
    ys = ctx.directions(F, x, count)
    reps = [curvature_report(F, x, y, flags=[ctx.flag(y), ctx.flag(y)]) for y in ys]
    f = np.array([r.F for r in reps])
    s = np.array([r.S for r in reps])
    c_fit = float(f @ s / (f @ f) / (ctx.n + 1))
    s_res = float(np.max(np.abs(s - (ctx.n + 1) * c_fit * f) / (1 + np.abs(s))))
    return ys, reps, s_res


def check_randers_weak_isotropic_flag(spec, samples=10, seed=0, tol_h=TOL_H, tol_c=TOL_C):
    """Isotropic S plus ``K_h = mu(x)`` gives ``K = 3 c_{x^m} y^m / F + sigma``."""
    name = "randers-weak-isotropic-flag"
    ctx = _Ctx(spec, samples, seed, tol_h, tol_c)
    F, res, why = _randers_target(ctx)
    if F is None:
        return ctx.result(name, "skipped", notes=[why])
    hyp, s_hyp, concl = _Worst(), _Worst(), _Worst()
    mus, sigmas = [], []
    for x in ctx.points:
        mu, iso = isotropy_residual(ctx.h, x, seed=ctx.seed)
        ys, reps, s_res = _randers_curvature_data(ctx, F, x, 2 * ctx.n)
        hyp.add(iso, x=x)
        s_hyp.add(s_res, x=x)
        c, cx = _c_jets(ctx.h, F.W, x)
        w = F.W.at(x)
        sigma = mu - c * c - 2 * float(cx @ w)
        mus.append(mu)
        sigmas.append(sigma)
        for y, r in zip(ys, reps):
            pred = 3 * float(cx @ y) / r.F + sigma
            for k in r.K:
                concl.add(abs(k - pred), x=x, y=y)
    verdict = implication(hyp.value < tol_h and s_hyp.value < tol_c, concl.value < tol_c)
    return ctx.result(
        name,
        verdict,
        hypothesis_residual=max(hyp.value, s_hyp.value),
        conclusion_residual=concl.value,
        constants={"mu": mus, "sigma": sigmas},
        parts={"h_isotropy": hyp.value, "isotropic_s": s_hyp.value},
        worst=concl.where or hyp.where,
    )


def check_randers_weak_einstein(spec, samples=10, seed=0, tol_h=TOL_H, tol_c=TOL_C):
    """Under isotropic S: F weak Einstein iff h Einstein, with matching constants."""
    name = "randers-weak-einstein"
    ctx = _Ctx(spec, samples, seed, tol_h, tol_c)
    F, res, why = _randers_target(ctx)
    if F is None:
        return ctx.result(name, "skipped", notes=[why])
    s_hyp, left, right, consts = _Worst(), _Worst(), _Worst(), _Worst()
    mus = []
    n = ctx.n
    for x in ctx.points:
        ys, reps, s_res = _randers_curvature_data(ctx, F, x, 4 * n)
        s_hyp.add(s_res, x=x)
        f = np.array([r.F for r in reps])
        ric = np.array([r.Ric for r in reps])
        theta, kappa, misfit = _fit_weak(ys, f, ric / ((n - 1) * f * f))
        left.add(misfit, x=x)
        mu, ein = einstein_residual(ctx.h, x)
        mus.append(mu)
        right.add(ein, x=x)
        c, cx = _c_jets(ctx.h, F.W, x)
        sigma = mu - c * c - 2 * float(cx @ F.W.at(x))
        consts.add(max(np.abs(theta - cx).max(), abs(kappa - sigma)), x=x)
    if s_hyp.value >= tol_c:
        verdict = "vacuous"
    else:
        verdict = equivalence(left.value < tol_c, right.value < tol_h)
        if verdict == "pass" and consts.value >= tol_c:
            verdict = "fail"
    return ctx.result(
        name,
        verdict,
        hypothesis_residual=s_hyp.value,
        conclusion_residual=max(left.value, consts.value if verdict != "vacuous" else 0.0),
        constants={"mu": mus},
        parts={
            "weak_einstein_fit": left.value,
            "einstein_h": right.value,
            "constants_mismatch": consts.value,
        },
        worst=left.where,
    )


# Kropina checks


def _kropina_residuals(ctx, F, directions=3):
    """The four S-curvature characterisations of a Kropina metric."""
    alpha, beta = F.alpha_beta()
    iso, s0, r00, kil = _Worst(), _Worst(), _Worst(), _Worst()
    for x in ctx.points:
        ys = ctx.directions(F, x, directions)
        c, res, reps = _s_isotropy(ctx, F, x, ys)
        iso.add(res, x=x)
        for y, r in zip(ys, reps):
            s0.add(abs(r.S), x=x, y=y)
        r00.add(fld.r_tensor(alpha, beta, x).residual, x=x)
        kil.add(fld.killing_residual(ctx.h, F.W, x), x=x)
    return iso, r00, s0, kil


def check_kropina_s_equivalence(spec, samples=10, seed=0, tol_h=TOL_H, tol_c=TOL_C):
    """Isotropic S, ``r_00 = sigma alpha^2``, ``S = 0`` and W Killing hold or fail together."""
    name = "kropina-s-equivalence"
    ctx = _Ctx(spec, samples, seed, tol_h, tol_c)
    F, why = _kropina_target(ctx)
    if F is None:
        return ctx.result(name, "skipped", notes=[why])
    iso, r00, s0, kil = _kropina_residuals(ctx, F)
    oks = [iso.value < tol_c, r00.value < tol_h, s0.value < tol_c, kil.value < tol_h]
    if all(oks):
        verdict = "pass"
    elif all(v > SEPARATION for v in (iso.value, r00.value, s0.value, kil.value)):
        verdict = "vacuous"
    else:
        verdict = "fail"
    return ctx.result(
        name,
        verdict,
        hypothesis_residual=max(r00.value, kil.value),
        conclusion_residual=max(iso.value, s0.value),
        parts={"isotropic_s": iso.value, "r00_conformal": r00.value, "s_zero": s0.value, "w_killing": kil.value},
        worst=s0.where,
    )


def check_kropina_r00_killing(spec, samples=10, seed=0, tol_h=TOL_H, tol_c=TOL_C):
    """``r_00 = sigma alpha^2`` for ``(alpha, beta)`` iff W is Killing for h."""
    name = "kropina-r00-killing"
    ctx = _Ctx(spec, samples, seed, tol_h, tol_c)
    F, why = _kropina_target(ctx)
    if F is None:
        return ctx.result(name, "skipped", notes=[why])
    alpha, beta = F.alpha_beta()
    r00, kil = _Worst(), _Worst()
    sig = []
    for x in ctx.points:
        rt = fld.r_tensor(alpha, beta, x)
        sig.append(rt.sigma)
        r00.add(rt.residual, x=x)
        kil.add(fld.killing_residual(ctx.h, F.W, x), x=x)
    verdict = equivalence(r00.value < tol_h, kil.value < tol_h)
    return ctx.result(
        name,
        verdict,
        hypothesis_residual=r00.value,
        conclusion_residual=kil.value,
        constants={"sigma": sig},
        worst=r00.where,
    )


def check_kropina_killing_s_zero(spec, samples=10, seed=0, tol_h=TOL_H, tol_c=TOL_C, directions=3):
    """A Killing wind gives vanishing S-curvature."""
    name = "kropina-killing-s-zero"
    ctx = _Ctx(spec, samples, seed, tol_h, tol_c)
    F, why = _kropina_target(ctx)
    if F is None:
        return ctx.result(name, "skipped", notes=[why])
    kil, s0 = _Worst(), _Worst()
    for x in ctx.points:
        kil.add(fld.killing_residual(ctx.h, F.W, x), x=x)
        for y in ctx.directions(F, x, directions):
            r = curvature_report(F, x, y, flags=[ctx.flag(y)])
            s0.add(abs(r.S), x=x, y=y)
    verdict = implication(kil.value < tol_h, s0.value < tol_c)
    return ctx.result(name, verdict, hypothesis_residual=kil.value, conclusion_residual=s0.value, worst=s0.where)


def _flag_fit(ctx, F, x, count, flags_per_dir=2):
    """Flag curvatures at x fitted to ``3 theta / F + kappa``."""
    ys = ctx.directions(F, x, count)
    Y, Fs, Ks, reps = [], [], [], []
    for y in ys:
        r = curvature_report(F, x, y, flags=[ctx.flag(y) for _ in range(flags_per_dir)])
        reps.append(r)
        for k in r.K:
            Y.append(y)
            Fs.append(r.F)
            Ks.append(k)
    theta, kappa, misfit = _fit_weak(Y, np.array(Fs), Ks)
    scalar = max(r.residuals["scalar_flag"] / max(1.0, r.F**2) for r in reps)
    return ys, reps, theta, kappa, max(misfit, scalar)


def _ric_fit(ctx, F, x, count):
    ys = ctx.directions(F, x, count)
    reps = [curvature_report(F, x, y, flags=[]) for y in ys]
    f = np.array([r.F for r in reps])
    ric = np.array([r.Ric for r in reps])
    theta, kappa, misfit = _fit_weak(ys, f, ric / ((ctx.n - 1) * f * f))
    return ys, reps, theta, kappa, misfit


def check_kropina_weak_isotropic_flag(spec, samples=10, seed=0, tol_h=TOL_H, tol_c=TOL_C):
    """K weakly isotropic iff ``K_h = mu >= 0`` and W Killing; then ``K = mu``, ``theta = 0``."""
    name = "kropina-weak-isotropic-flag"
    ctx = _Ctx(spec, samples, seed, tol_h, tol_c)
    F, why = _kropina_target(ctx)
    if F is None:
        return ctx.result(name, "skipped", notes=[why])
    if ctx.n < 2:
        return ctx.result(name, "skipped", notes=["dimension 1"])
    hyp, fit, extra = _Worst(), _Worst(), _Worst()
    mus, kappas = [], []
    for x in ctx.points:
        mu, iso = isotropy_residual(ctx.h, x, seed=ctx.seed)
        kil = fld.killing_residual(ctx.h, F.W, x)
        hyp.add(max(iso, kil, max(0.0, -mu)), x=x)
        ys, reps, theta, kappa, misfit = _flag_fit(ctx, F, x, 2 * ctx.n)
        fit.add(misfit, x=x)
        mus.append(mu)
        kappas.append(kappa)
        dev = [abs(kappa - mu), float(np.abs(theta).max())]
        for y, r in zip(ys[:2], reps[:2]):
            flags = [np.asarray(v) for v in r.flags]
            r2 = curvature_report(F, x, 2.0 * y, flags=flags)
            dev.append(max(abs(a - b) for a, b in zip(r.K, r2.K)))
            dev.extend(abs(k - mu) for k in r.K)
        extra.add(max(dev), x=x)
    verdict = equivalence(hyp.value < tol_h, fit.value < tol_c)
    if verdict == "pass" and extra.value >= tol_c:
        verdict = "fail"
    return ctx.result(
        name,
        verdict,
        hypothesis_residual=hyp.value,
        conclusion_residual=max(fit.value, extra.value) if verdict != "vacuous" else fit.value,
        constants={"mu": mus, "kappa": kappas},
        parts={"weak_isotropy_fit": fit.value, "k_equals_mu_and_theta_zero": extra.value},
        worst=extra.where if extra.value > fit.value else fit.where,
    )


def _beta_norm_constant(ctx, F):
    e = F.beta_norm
    if e.is_constant():
        return 0.0
    sp = jet_space(ctx.n, 1)
    worst = 0.0
    for x in ctx.points:
        j = VectorField((e,)).jets(x, 1, sp)[0]
        worst = max(worst, float(np.abs(j[1:]).max()))
    return worst


def check_kropina_weak_einstein_alpha_beta(spec, samples=6, seed=0, tol_h=TOL_H, tol_c=TOL_C):
    """With constant ``b``: F weak Einstein iff alpha Einstein and beta Killing,
    with ``kappa = (mu_alpha b^2 - 3 theta_i b^i) / 4``."""
    name = "kropina-weak-einstein-alpha-beta"
    ctx = _Ctx(spec, samples, seed, tol_h, tol_c)
    F, why = _kropina_target(ctx)
    if F is None:
        return ctx.result(name, "skipped", notes=[why])
    bconst = _beta_norm_constant(ctx, F)
    if bconst >= tol_h:
        return ctx.result(
            name,
            "vacuous",
            hypothesis_residual=bconst,
            notes=["hypothesis violated: b not constant"],
        )
    alpha, beta = F.alpha_beta()
    left, right, consts = _Worst(), _Worst(), _Worst()
    kappas, preds = [], []
    for x in ctx.points:
        mu_a, ein = einstein_residual(alpha, x)
        kil = fld.killing_residual(alpha, beta, x)
        right.add(max(ein, kil), x=x)
        ys, reps, theta, kappa, misfit = _ric_fit(ctx, F, x, 4 * ctx.n)
        left.add(misfit, x=x)
        A = alpha.at(x)
        b_low = beta.at(x)
        b_up = np.linalg.solve(A, b_low)
        b2 = float(b_low @ b_up)
        pred = 0.25 * (mu_a * b2 - 3 * float(theta @ b_up))
        # navigation form of the same constant
        pred_nav = einstein_residual(ctx.h, x)[0] - 1.5 * float(theta @ F.W.at(x))
        kappas.append(kappa)
        preds.append(pred)
        consts.add(max(abs(kappa - pred), abs(pred - pred_nav)), x=x)
    verdict = equivalence(right.value < tol_h, left.value < tol_c)
    if verdict == "pass" and consts.value >= tol_c:
        verdict = "fail"
    return ctx.result(
        name,
        verdict,
        hypothesis_residual=right.value,
        conclusion_residual=left.value,
        constants={"kappa": kappas, "kappa_predicted": preds},
        parts={"constants_mismatch": consts.value},
        worst=left.where,
    )


def check_kropina_weak_einstein(spec, samples=6, seed=0, tol_h=TOL_H, tol_c=TOL_C):
    """F weak Einstein iff h Einstein and W Killing, with ``kappa = mu - 3/2 theta_i W^i``."""
    name = "kropina-weak-einstein"
    ctx = _Ctx(spec, samples, seed, tol_h, tol_c)
    F, why = _kropina_target(ctx)
    if F is None:
        return ctx.result(name, "skipped", notes=[why])
    left, right, consts = _Worst(), _Worst(), _Worst()
    kappas, nonneg = [], True
    for x in ctx.points:
        mu, ein = einstein_residual(ctx.h, x)
        kil = fld.killing_residual(ctx.h, F.W, x)
        right.add(max(ein, kil), x=x)
        ys, reps, theta, kappa, misfit = _ric_fit(ctx, F, x, 4 * ctx.n)
        left.add(misfit, x=x)
        kappas.append(kappa)
        nonneg &= kappa >= -tol_c
        consts.add(abs(kappa - (mu - 1.5 * float(theta @ F.W.at(x)))), x=x)
    verdict = equivalence(right.value < tol_h, left.value < tol_c)
    if verdict == "pass" and consts.value >= tol_c:
        verdict = "fail"
    notes = [] if nonneg or verdict != "pass" else ["kappa is negative at some sample"]
    return ctx.result(
        name,
        verdict,
        hypothesis_residual=right.value,
        conclusion_residual=left.value,
        constants={"kappa": kappas, "kappa_nonnegative": bool(nonneg)},
        parts={"constants_mismatch": consts.value},
        worst=left.where,
        notes=notes,
    )


# composite navigation checks


def _composite_setup(ctx, name, branch):
    """Common preconditions; returns (F, V, CompositeResult) or a finished CheckResult."""
    F, why = _kropina_target(ctx)
    if F is None:
        return ctx.result(name, "skipped", notes=[why])
    V = ctx.spec.field_V()
    if V is None:
        return ctx.result(name, "skipped", notes=["spec has no second wind V"])
    try:
        res = composite(F, V, ctx.points)
    except (ConeViolationError, SpeedLimitError, MixedRegimeError) as exc:
        return ctx.result(name, "vacuous", notes=[f"precondition failed: {type(exc).__name__}: {exc}"])
    if branch is not None and res.classification != branch:
        return ctx.result(name, "skipped", notes=[f"composite metric is {res.classification}"])
    return F, V, res


def _u_samples(ctx, F, V, x, count):
    out = []
    for y in ctx.directions(F, x, count):
        f = F.value(x, y)
        out.append((y, y + f * V.at(x)))
    return out


def check_conformal_composite_randers(spec, samples=8, seed=0, tol_h=TOL_H, tol_c=TOL_C, directions=3):
    """Kropina metric navigated by a conformal V with ``F(x, -V) < 1``.

    The resulting Randers metric has ``S = -(n+1) rho F``; weak isotropic flag
    curvature and weak Einstein forms carry over with
    ``theta~ = -rho_{x^m} u^m`` and the displayed ``kappa~``.
    """
    name = "conformal-composite-randers"
    ctx = _Ctx(spec, samples, seed, tol_h, tol_c)
    setup = _composite_setup(ctx, name, "randers")
    if isinstance(setup, CheckResult):
        return setup
    F, V, res = setup
    Ft = res.metric
    n = ctx.n
    rep = fld.check_conformal_kropina(ctx.h, F.W, V, ctx.points)
    conf = max(rep.residual_c1, rep.residual_c2)
    if conf >= tol_h:
        return ctx.result(
            name,
            "vacuous",
            hypothesis_residual=conf,
            notes=["V is not a conformal field of the Kropina metric"],
        )
    s_h, s_c, k_h, k_c, r_h, r_c, side = (_Worst() for _ in range(7))
    rhos, ktildes = [], []
    for x in ctx.points:
        rj = fld.conformal_factor_jets(ctx.h, V, x, 1)
        rho, rho_x = float(rj[0]), np.asarray(rj[1:], dtype=float)
        rhos.append(rho)
        wv = F.W.at(x) + V.at(x)
        pairs = _u_samples(ctx, F, V, x, max(directions, 2 * n))
        ys = [p[0] for p in pairs]
        # base metric: S isotropy, weak isotropic flag and weak Einstein fits
        c, s_res, _ = _s_isotropy(ctx, F, x, ys[:directions])
        s_h.add(s_res, x=x)
        side.add(abs(c), x=x)
        _, _, theta_k, kappa_k, misfit_k = _flag_fit(ctx, F, x, 2 * n)
        k_h.add(misfit_k, x=x)
        _, _, theta_r, kappa_r, misfit_r = _ric_fit(ctx, F, x, 4 * n)
        r_h.add(misfit_r, x=x)
        kt_flag = kappa_k - rho * rho + 2 * float(rho_x @ wv)
        kt_ric = kappa_r + 1.5 * float(theta_r @ F.W.at(x)) - rho * rho + 2 * float(rho_x @ wv)
        ktildes.append(kt_flag)
        for y, u in pairs:
            r = curvature_report(Ft, x, u, flags=[ctx.flag(u), ctx.flag(u)])
            s_c.add(abs(r.S + (n + 1) * rho * r.F) / (1 + abs(r.S)), x=x, u=u)
            th = -float(rho_x @ u)
            pred_k = 3 * th / r.F + kt_flag
            for k in r.K:
                k_c.add(abs(k - pred_k), x=x, u=u)
            pred_r = (n - 1) * (3 * th / r.F + kt_ric) * r.F**2
            r_c.add(abs(r.Ric - pred_r) / (1 + abs(r.Ric)), x=x, u=u)
    parts = {
        "isotropic_s": {
            "hypothesis": s_h.value,
            "conclusion": max(s_c.value, side.value),
            "verdict": implication(s_h.value < tol_c, max(s_c.value, side.value) < tol_c),
        },
        "weak_isotropic_flag": {
            "hypothesis": k_h.value,
            "conclusion": k_c.value,
            "verdict": implication(k_h.value < tol_c, k_c.value < tol_c),
        },
        "weak_einstein": {
            "hypothesis": r_h.value,
            "conclusion": r_c.value,
            "verdict": implication(r_h.value < tol_c, r_c.value < tol_c),
        },
    }
    notes = []
    rho_arr = np.array(rhos)
    constants = {"rho": rhos, "kappa_tilde": ktildes}
    if rho_arr.std() < tol_h:
        # constant rho on a weakly isotropic base in dimension >= 3 (where mu is
        # constant) makes kappa~ = kappa - rho^2 constant
        spread = float(np.ptp(ktildes))
        constants["kappa_tilde_spread"] = spread
        parts["constant_rho"] = {
            "hypothesis": max(float(rho_arr.std()), k_h.value),
            "conclusion": spread,
            "verdict": implication(k_h.value < tol_c and n >= 3, spread < tol_c),
        }
    x0 = ctx.points[0]
    cross = _cross_pipeline(ctx, res, [(x0, _u_samples(ctx, F, V, x0, 1)[0][1])])
    notes.append(f"implicit-vs-closed-form max difference {cross:.3e}")
    parts["cross_pipeline"] = {"hypothesis": 0.0, "conclusion": cross, "verdict": implication(True, cross < CROSS_TOL)}
    verdict = combine(p["verdict"] for p in parts.values())
    return ctx.result(
        name,
        verdict,
        hypothesis_residual=conf,
        conclusion_residual=max(s_c.value, k_c.value, r_c.value),
        constants=constants,
        parts=parts,
        worst=s_c.where,
        notes=notes,
    )


def check_killing_composite_kropina(spec, samples=8, seed=0, tol_h=TOL_H, tol_c=TOL_C, directions=3):
    """Kropina metric navigated by a Killing V with ``F(x, -V) = 1``.

    The resulting Kropina metric has ``S = 0``; weak isotropic flag curvature
    passes over with ``theta = theta~ = 0`` and ``kappa~ = kappa``; the weak
    Einstein constants satisfy
    ``kappa~ = kappa + 3/2 ((theta - theta~)_m W^m - theta~_m V^m)``.
    """
    name = "killing-composite-kropina"
    ctx = _Ctx(spec, samples, seed, tol_h, tol_c)
    setup = _composite_setup(ctx, name, "kropina")
    if isinstance(setup, CheckResult):
        return setup
    F, V, res = setup
    Ft = res.metric
    n = ctx.n
    rep = fld.check_conformal_kropina(ctx.h, F.W, V, ctx.points)
    if rep.verdict != "Killing":
        return ctx.result(
            name,
            "vacuous",
            hypothesis_residual=max(rep.residual_c1, rep.residual_c2, max(abs(r) for r in rep.rho)),
            notes=["precondition failed: V is not a Killing field of the Kropina metric"],
        )
    s_h, s_c, k_h, k_c, r_h, r_c = (_Worst() for _ in range(6))
    kappas, thetas = [], []
    for x in ctx.points:
        pairs = _u_samples(ctx, F, V, x, max(directions, 4 * n))
        ys = [p[0] for p in pairs]
        us = np.array([p[1] for p in pairs])
        _, s_res, _ = _s_isotropy(ctx, F, x, ys[:directions])
        s_h.add(s_res, x=x)
        _, _, theta_k, kappa_k, misfit_k = _flag_fit(ctx, F, x, 2 * n)
        k_h.add(misfit_k, x=x)
        _, _, theta_r, kappa_r, misfit_r = _ric_fit(ctx, F, x, 4 * n)
        r_h.add(misfit_r, x=x)
        kappas.append(kappa_k)
        reps = []
        for u in us:
            r = curvature_report(Ft, x, u, flags=[ctx.flag(u), ctx.flag(u)])
            reps.append(r)
            s_c.add(abs(r.S), x=x, u=u)
            for k in r.K:
                k_c.add(abs(k - kappa_k), x=x, u=u)
        for u, r in zip(us[:2], reps[:2]):
            r2 = curvature_report(Ft, x, 2.0 * u, flags=[np.asarray(v) for v in r.flags])
            k_c.add(max(abs(a - b) for a, b in zip(r.K, r2.K)), x=x, u=u)
        f = np.array([r.F for r in reps])
        ric = np.array([r.Ric for r in reps])
        theta_t, kappa_t, misfit_t = _fit_weak(us, f, ric / ((n - 1) * f * f))
        thetas.append([float(t) for t in theta_t])
        w, v = F.W.at(x), V.at(x)
        pred = kappa_r + 1.5 * (float((theta_r - theta_t) @ w) - float(theta_t @ v))
        r_c.add(max(misfit_t, abs(kappa_t - pred)), x=x)
    parts = {
        "s_zero": {
            "hypothesis": s_h.value,
            "conclusion": s_c.value,
            "verdict": implication(s_h.value < tol_c, s_c.value < tol_c),
        },
        "weak_isotropic_flag": {
            "hypothesis": k_h.value,
            "conclusion": k_c.value,
            "verdict": implication(k_h.value < tol_c, k_c.value < tol_c),
        },
        "weak_einstein": {
            "hypothesis": r_h.value,
            "conclusion": r_c.value,
            "verdict": implication(r_h.value < tol_c, r_c.value < tol_c),
        },
    }
    x0 = ctx.points[0]
    cross = _cross_pipeline(ctx, res, [(x0, _u_samples(ctx, F, V, x0, 1)[0][1])])
    parts["cross_pipeline"] = {"hypothesis": 0.0, "conclusion": cross, "verdict": implication(True, cross < CROSS_TOL)}
    verdict = combine(p["verdict"] for p in parts.values())
    return ctx.result(
        name,
        verdict,
        hypothesis_residual=max(rep.residual_c1, rep.residual_c2),
        conclusion_residual=max(s_c.value, k_c.value, r_c.value),
        constants={"kappa": kappas, "theta_tilde": thetas},
        parts=parts,
        worst=k_c.where if k_c.value > s_c.value else s_c.where,
        notes=[f"implicit-vs-closed-form max difference {cross:.3e}"],
    )


def check_composite_length_identity(spec, samples=20, seed=0, tol_h=TOL_H, tol_c=TOL_C, directions=5):
    """``F~(x, y + F(x, y) V) = F(x, y)`` for closed-form and implicit composites."""
    name = "composite-length-identity"
    ctx = _Ctx(spec, samples, seed, tol_h, tol_c)
    setup = _composite_setup(ctx, name, None)
    if isinstance(setup, CheckResult):
        return setup
    F, V, res = setup
    worst = _Worst()
    for x in ctx.points:
        for y, u in _u_samples(ctx, F, V, x, directions):
            f = F.value(x, y)
            try:
                a = res.metric.value(x, u)
                b = res.implicit.value(x, u)
            except OutsideConeError:
                worst.add(math.inf, x=x, y=y)
                continue
            worst.add(max(abs(a - f), abs(b - f)), x=x, y=y)
    verdict = implication(True, worst.value < 1e-10)
    return ctx.result(
        name,
        verdict,
        hypothesis_residual=0.0,
        conclusion_residual=worst.value,
        constants={"classification": res.classification},
        worst=worst.where,
    )


CHECKS = {
    "randers-isotropic-s": check_randers_isotropic_s,
    "randers-weak-isotropic-flag": check_randers_weak_isotropic_flag,
    "randers-weak-einstein": check_randers_weak_einstein,
    "kropina-s-equivalence": check_kropina_s_equivalence,
    "kropina-r00-killing": check_kropina_r00_killing,
    "kropina-killing-s-zero": check_kropina_killing_s_zero,
    "kropina-weak-isotropic-flag": check_kropina_weak_isotropic_flag,
    "kropina-weak-einstein-alpha-beta": check_kropina_weak_einstein_alpha_beta,
    "kropina-weak-einstein": check_kropina_weak_einstein,
    "conformal-composite-randers": check_conformal_composite_randers,
    "killing-composite-kropina": check_killing_composite_kropina,
    "composite-length-identity": check_composite_length_identity,
}


def run_check(check_id: str, spec: ManifoldSpec, samples=None, seed=0, tol_h=TOL_H, tol_c=TOL_C) -> CheckResult:
    fn = CHECKS[check_id]
    kw = {"seed": seed, "tol_h": tol_h, "tol_c": tol_c}
    if samples is not None:
        kw["samples"] = samples
    try:
        return fn(spec, **kw)
    except FinslerNavError as exc:
        return CheckResult(
            check=check_id,
            spec=spec.name or "<spec>",
            samples=samples or 0,
            seed=seed,
            tol_h=tol_h,
            tol_c=tol_c,
            verdict="fail",
            notes=[f"{type(exc).__name__}: {exc}"],
        )


def thread_count() -> int:
    raw = os.environ.get("FINSLER_NAV_THREADS")
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        v = int(raw)
    except ValueError:
        raise ValueError(f"FINSLER_NAV_THREADS must be a positive integer, got {raw!r}") from None
    if v < 1:
        raise ValueError(f"FINSLER_NAV_THREADS must be a positive integer, got {raw!r}")
    return v


def run_all(spec: ManifoldSpec, checks=None, samples=None, seed=0, tol_h=TOL_H, tol_c=TOL_C, threads=None):
    """Run the selected checks; results come back sorted by check id."""
    ids = sorted(CHECKS) if checks is None else sorted(checks)
    for c in ids:
        if c not in CHECKS:
            raise KeyError(f"unknown check {c!r}")
    threads = thread_count() if threads is None else threads
    if threads <= 1:
        return [run_check(c, spec, samples, seed, tol_h, tol_c) for c in ids]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        futs = [ex.submit(run_check, c, spec, samples, seed, tol_h, tol_c) for c in ids]
        return [f.result() for f in futs]
