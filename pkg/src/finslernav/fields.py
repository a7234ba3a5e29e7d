"""Conformal and Killing analysis of vector fields.

For navigation data ``(h, W)`` of a Kropina metric, a field ``V`` is conformal
with factor ``rho`` exactly when

    V_{i|j} + V_{j|i} = 4 rho h_ij                    (c1)
    V^i W_{j|i} + W^i V_{i|j} = 2 rho W_j             (c2)

with ``|`` the Levi-Civita derivative of ``h``.  ``rho`` is recovered from the
trace of (c1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RegimeMismatchError
from .jets import jet_space
from .riemann import CovectorField, RiemannMetric, VectorField, cov_deriv_jets

__all__ = [
    "CONFORMAL_TOL",
    "KILLING_TOL",
    "FieldReport",
    "RTensor",
    "conformal_factor_estimate",
    "conformal_factor_jets",
    "killing_residual",
    "check_conformal_kropina",
    "r_tensor",
    "sharp",
]

CONFORMAL_TOL = 1e-7
KILLING_TOL = 1e-8


def _sym_deriv(h, V, x, order=0):
    D = cov_deriv_jets(h, V, x, order)
    return D + np.swapaxes(D, 0, 1)


def conformal_factor_jets(h: RiemannMetric, V, x, order: int = 1):
    """Jet of ``rho = h^{ij}(V_{i|j} + V_{j|i}) / (4n)`` at ``x``."""
    n = h.dim
    sp = jet_space(n, order)
    S = _sym_deriv(h, V, x, order)
    Hinv = sp.inv(h.jets(x, order))
    tr = sp.zeros()
    for i in range(n):
        for j in range(n):
            tr = tr + sp.mul(Hinv[i, j], S[i, j])
    return tr / (4.0 * n)


def conformal_factor_estimate(h: RiemannMetric, V, x) -> float:
    return float(conformal_factor_jets(h, V, x, 0)[0])


def killing_residual(h: RiemannMetric, V, x) -> float:
    """Max-norm of ``V_{i|j} + V_{j|i}``."""
    return float(np.abs(_sym_deriv(h, V, x)[..., 0]).max())


def _c_residuals(h, W, V, x, rho=None):
    H = h.at(x)
    Vd = cov_deriv_jets(h, V, x, 0)[..., 0]  # Vd[i, j] = V_{i|j}
    Wd = cov_deriv_jets(h, W, x, 0)[..., 0]
    Hinv = np.linalg.inv(H)
    S = Vd + Vd.T
    rho_hat = float(np.trace(Hinv @ S) / (4 * h.dim)) if rho is None else float(rho)
    c1 = float(np.abs(S - 4.0 * rho_hat * H).max())
    v, w = V.at(x), W.at(x)
    lhs = np.einsum("i,ji->j", v, Wd) + np.einsum("i,ij->j", w, Vd)
    c2 = float(np.abs(lhs - 2.0 * rho_hat * (H @ w)).max())
    return rho_hat, c1, c2, float(np.abs(S).max())


@dataclass
class FieldReport:
    """Outcome of the conformal-field test at a set of sample points."""

    rho: list
    residual_c1: float
    residual_c2: float
    residual_killing: float
    verdict: str
    rho_value: float | None = None
    points: list = field(default_factory=list)

    def to_dict(self):
        return {
            "rho": self.rho,
            "residual_c1": self.residual_c1,
            "residual_c2": self.residual_c2,
            "residual_killing": self.residual_killing,
            "verdict": self.verdict,
            "rho_value": self.rho_value,
            "points": self.points,
        }


def check_conformal_kropina(h: RiemannMetric, W: VectorField, V: VectorField, samples, rho=None) -> FieldReport:
    """Test (c1) and (c2) at the sample points.

    Verdicts: ``Conformal`` when both residuals are below 1e-7; refined to
    ``Killing`` when also ``max |rho| < 1e-8``, or ``Homothetic`` when the
    spread of ``rho`` is below 1e-8; otherwise ``None``.
    """
    pts = [np.asarray(x, dtype=float) for x in samples]
    for x in pts:
        H = h.at(x)
        w = W.at(x)
        nrm = math.sqrt(float(w @ H @ w))
        if abs(nrm - 1.0) > 1e-9:
            raise RegimeMismatchError(f"||W||_h = {nrm} at x={x.tolist()}; a unit wind is required")
    rhos, c1s, c2s, ks = [], [], [], []
    for x in pts:
        r, c1, c2, k = _c_residuals(h, W, V, x, rho)
        rhos.append(r)
        c1s.append(c1)
        c2s.append(c2)
        ks.append(k)
    c1, c2, kres = max(c1s), max(c2s), max(ks)
    rho_arr = np.array(rhos)
    verdict, value = "None", None
    if c1 < CONFORMAL_TOL and c2 < CONFORMAL_TOL:
        if np.abs(rho_arr).max() < KILLING_TOL:
            verdict, value = "Killing", 0.0
        elif rho_arr.std() < KILLING_TOL:
            verdict, value = "Homothetic", float(rho_arr.mean())
        else:
            verdict = "Conformal"
    return FieldReport(
        rho=[float(r) for r in rhos],
        residual_c1=c1,
        residual_c2=c2,
        residual_killing=kres,
        verdict=verdict,
        rho_value=value,
        points=[x.tolist() for x in pts],
    )


@dataclass
class RTensor:
    r: np.ndarray
    sigma: float
    residual: float


def r_tensor(alpha: RiemannMetric, beta: CovectorField, x) -> RTensor:
    """``r_ij = (b_{i;j} + b_{j;i}) / 2`` and its best isotropic fit ``sigma a_ij``."""
    A = alpha.at(x)
    r = 0.5 * _sym_deriv(alpha, beta, x)[..., 0]
    sigma = float(np.trace(np.linalg.solve(A, r)) / alpha.dim)
    return RTensor(r, sigma, float(np.abs(r - sigma * A).max()))


def sharp(alpha: RiemannMetric, beta: CovectorField, x):
    """``beta^#`` at ``x`` (index raised with alpha)."""
    return np.linalg.solve(alpha.at(x), beta.at(x))
