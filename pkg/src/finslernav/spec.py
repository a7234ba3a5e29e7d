"""ManifoldSpec: the JSON description of a chart, metric, winds and sample box.

Example::

    {
      "dim": 2,
      "h": [["1", "0"], ["0", "1"]],
      "W": ["1", "0"],
      "V": ["-1/2", "0"],
      "metric_type": "kropina",
      "sample_box": [[-1, 1], [-1, 1]]
    }

``h`` may give only the upper triangle (lower entries ``null`` or omitted);
it is stored as the full symmetric matrix.  ``guard`` restricts the chart to
``guard > 0``.  ``beta_norm`` (an extension) is the expression for
``b = ||beta||_alpha`` used to pick the ``(alpha, beta)`` form of a Kropina
metric; it defaults to the constant 2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import exprdsl
from .errors import (
    DomainError,
    EvaluationError,
    FinslerNavError,
    GuardViolatedError,
    RegimeMismatchError,
    SpecError,
)
from .finsler import Kropina, Randers, Riemannian
from .riemann import RiemannMetric, VectorField

__all__ = ["ManifoldSpec", "make_rng", "REGIME_TOL", "METRIC_TYPES"]

REGIME_TOL = 1e-9
METRIC_TYPES = ("riemannian", "randers", "kropina", "auto")


def make_rng(seed: int) -> np.random.Generator:
    """Seeded Philox (counter-based) generator used for every sample draw."""
    return np.random.Generator(np.random.Philox(int(seed)))


def _as_str(v) -> str:
    if isinstance(v, bool):
        raise SpecError(f"expected an expression, got {v!r}")
    if isinstance(v, (int, float)):
        return repr(v) if isinstance(v, float) and not float(v).is_integer() else str(int(v))
    if isinstance(v, str):
        return v
    raise SpecError(f"expected an expression string, got {v!r}")


@dataclass(frozen=True)
class ManifoldSpec:
    dim: int
    h: tuple
    W: tuple
    sample_box: tuple
    V: tuple | None = None
    guard: str | None = None
    metric_type: str = "auto"
    params: dict = field(default_factory=dict)
    beta_norm: str | None = None
    name: str | None = None

    # construction and IO

    @classmethod
    def from_dict(cls, d: dict) -> "ManifoldSpec":
        if not isinstance(d, dict):
            raise SpecError("spec must be a JSON object")
        try:
            n = d["dim"]
        except KeyError:
            raise SpecError("spec is missing 'dim'") from None
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise SpecError(f"'dim' must be a positive integer, got {n!r}")
        for key in ("h", "W"):
            if key not in d:
                raise SpecError(f"spec is missing {key!r}")
        rows = d["h"]
        if not isinstance(rows, list) or len(rows) != n:
            raise SpecError(f"'h' must have {n} rows")
        full = [[None] * n for _ in range(n)]
        for i in range(n):
            row = rows[i]
            if not isinstance(row, list) or len(row) not in (n, n - i):
                raise SpecError(f"row {i} of 'h' must have {n} entries (or {n - i} for an upper triangle)")
            upper = row if len(row) == n else [None] * i + row
            for j in range(i, n):
                if upper[j] is None:
                    raise SpecError(f"h[{i}][{j}] is required")
                full[i][j] = full[j][i] = _as_str(upper[j])
        W = d["W"]
        if not isinstance(W, list) or len(W) != n:
            raise SpecError(f"'W' must have {n} entries")
        V = d.get("V")
        if V is not None and (not isinstance(V, list) or len(V) != n):
            raise SpecError(f"'V' must have {n} entries")
        mt = d.get("metric_type", "auto")
        if mt not in METRIC_TYPES:
            raise SpecError(f"metric_type must be one of {METRIC_TYPES}, got {mt!r}")
        box = d.get("sample_box")
        if box is None:
            box = [[-1.0, 1.0]] * n
        if len(box) != n or any(len(b) != 2 or not float(b[0]) < float(b[1]) for b in box):
            raise SpecError("'sample_box' must list n intervals [lo, hi] with lo < hi")
        params = d.get("params") or {}
        if not isinstance(params, dict) or not all(isinstance(v, (int, float)) for v in params.values()):
            raise SpecError("'params' must map names to numbers")
        spec = cls(
            dim=n,
            h=tuple(tuple(r) for r in full),
            W=tuple(_as_str(w) for w in W),
            V=None if V is None else tuple(_as_str(v) for v in V),
            guard=None if d.get("guard") is None else _as_str(d["guard"]),
            metric_type=mt,
            sample_box=tuple((float(a), float(b)) for a, b in box),
            params={k: float(v) for k, v in sorted(params.items())},
            beta_norm=None if d.get("beta_norm") is None else _as_str(d["beta_norm"]),
            name=d.get("name"),
        )
        spec.metric()  # parse everything once so errors surface at load time
        spec.wind()
        spec.field_V()
        spec.beta_norm_expr()
        return spec

    def to_dict(self) -> dict:
        d = {
            "dim": self.dim,
            "h": [list(r) for r in self.h],
            "W": list(self.W),
            "metric_type": self.metric_type,
            "sample_box": [list(b) for b in self.sample_box],
        }
        if self.V is not None:
            d["V"] = list(self.V)
        if self.guard is not None:
            d["guard"] = self.guard
        if self.params:
            d["params"] = dict(self.params)
        if self.beta_norm is not None:
            d["beta_norm"] = self.beta_norm
        if self.name is not None:
            d["name"] = self.name
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ManifoldSpec":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(d)

    @classmethod
    def load(cls, path) -> "ManifoldSpec":
        return cls.from_json(Path(path).read_text())

    def dump(self, path) -> None:
        Path(path).write_text(self.to_json())

    def replace(self, **changes) -> "ManifoldSpec":
        return replace(self, **changes)

    # parsed objects

    def _parse(self, text):
        return exprdsl.parse(text, self.dim, self.params)

    def metric(self) -> RiemannMetric:
        return RiemannMetric.parse(self.h, self.dim, self.params, self.guard)

    def wind(self) -> VectorField:
        return VectorField.parse(self.W, self.dim, self.params)

    def field_V(self) -> VectorField | None:
        return None if self.V is None else VectorField.parse(self.V, self.dim, self.params)

    def beta_norm_expr(self):
        return None if self.beta_norm is None else self._parse(self.beta_norm)

    # sampling

    def in_domain(self, x) -> bool:
        try:
            self.metric().check_guard(x)
        except (GuardViolatedError, DomainError, EvaluationError):
            return False
        return True

    def sample_points(self, count: int, seed: int = 0, max_tries: int = 100):
        """``count`` uniform points of the sample box inside the guard region."""
        rng = make_rng(seed)
        lo = np.array([b[0] for b in self.sample_box])
        hi = np.array([b[1] for b in self.sample_box])
        h = self.metric()
        out = []
        for _ in range(max_tries * max(count, 1)):
            if len(out) == count:
                break
            x = lo + (hi - lo) * rng.random(self.dim)
            try:
                h.check_guard(x)
            except (GuardViolatedError, DomainError):
                continue
            out.append(x)
        if len(out) < count:
            raise SpecError("sample box has (almost) no points inside the guard region")
        return np.array(out)

    def quasi_points(self, count: int = 200):
        """Deterministic Halton points of the box inside the guard region."""
        from scipy.stats import qmc

        lo = np.array([b[0] for b in self.sample_box])
        hi = np.array([b[1] for b in self.sample_box])
        seq = qmc.Halton(d=self.dim, scramble=False)
        seq.fast_forward(1)  # skip the corner point 0
        h = self.metric()
        out = []
        for _ in range(100):
            for u in seq.random(count):
                x = lo + (hi - lo) * u
                try:
                    h.check_guard(x)
                except (GuardViolatedError, DomainError):
                    continue
                out.append(x)
                if len(out) == count:
                    return np.array(out)
        raise SpecError("sample box has (almost) no points inside the guard region")

    # metric construction

    def wind_norms(self, points, wind: VectorField | None = None):
        h = self.metric()
        W = self.wind() if wind is None else wind
        norms = []
        for x in points:
            H = h.at(x)
            w = W.at(x)
            norms.append(math.sqrt(float(w @ H @ w)))
        return np.array(norms)

    def regime(self, points=None) -> str:
        """``'subcritical'`` or ``'critical'`` from sampled wind norms."""
        pts = self.quasi_points() if points is None else points
        norms = self.wind_norms(pts)
        if np.all(np.abs(norms - 1.0) < REGIME_TOL):
            return "critical"
        if np.all(norms < 1.0 - REGIME_TOL):
            return "subcritical"
        raise RegimeMismatchError(
            f"wind norm ranges over [{norms.min():.12g}, {norms.max():.12g}]; neither < 1 nor = 1 throughout"
        )

    def finsler(self):
        """The Finsler metric this spec describes (regime checked by sampling)."""
        h = self.metric()
        if self.metric_type == "riemannian":
            return Riemannian(h)
        regime = self.regime()
        kind = self.metric_type
        if kind == "auto":
            kind = "kropina" if regime == "critical" else "randers"
        if kind == "kropina":
            if regime != "critical":
                raise RegimeMismatchError("metric_type 'kropina' needs a unit wind")
            return Kropina(h, self.wind(), self.beta_norm_expr())
        if regime != "subcritical":
            raise RegimeMismatchError("metric_type 'randers' needs a wind of norm < 1")
        return Randers(h, self.wind())

    def sample_directions(self, F, x, count: int, rng, wind=None, margin: float = 0.05):
        """Directions uniform on the coordinate sphere, restricted to the cone.

        For Kropina-type metrics directions with ``h(y, W) <= margin |y|_h ||W||_h``
        are rejected, keeping samples away from the cone boundary.
        """
        n = self.dim
        H = self.metric().at(x)
        w = None
        if wind is not None:
            w = np.asarray(wind, dtype=float)
        elif isinstance(F, Kropina):
            w = F.W.at(x)
        out = []
        for _ in range(1000 * count):
            if len(out) == count:
                break
            y = rng.normal(size=n)
            y /= np.linalg.norm(y)
            if w is not None:
                hy = math.sqrt(y @ H @ y)
                hw = math.sqrt(w @ H @ w)
                if y @ H @ w <= margin * hy * hw:
                    continue
            out.append(y)
        if len(out) < count:
            raise FinslerNavError("could not sample enough cone directions")
        return np.array(out)
