"""Truncated multivariate Taylor arithmetic.

A jet of order ``p`` in ``m`` variables stores the Taylor coefficients
``c[alpha] = f^(alpha)(x0) / alpha!`` for every multi-index of total degree
``<= p``.  Coefficients are laid out densely in graded-lexicographic order
(degree first, then descending lexicographic within a degree), so truncating
to a lower order is a prefix slice.

Two layers are provided:

* :class:`JetSpace` performs batched arithmetic on plain ``ndarray`` objects
  whose last axis is the coefficient axis.  The curvature code works here
  because it manipulates whole matrices of jets at once.
* :class:`Jet` wraps a single coefficient vector with operator overloading,
  which is what the expression evaluator and the closed-form metric formulas
  use.

A finite-difference oracle (:class:`FDOracle`) is included as an independent
check of the jet derivatives.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, EvaluationError

MAX_ORDER = 4

__all__ = [
    "MAX_ORDER",
    "JetSpace",
    "Jet",
    "jet_space",
    "sqrt",
    "exp",
    "log",
    "sin",
    "cos",
    "FDOracle",
    "fd_gradient",
    "fd_hessian",
]


def _degree_monomials(nvars, d):
    if nvars == 1:
        yield (d,)
        return
    for first in range(d, -1, -1):
        for rest in _degree_monomials(nvars - 1, d - first):
            yield (first,) + rest


class JetSpace:
    """Tables and batched operations for jets in ``nvars`` variables up to ``order``."""

    def __init__(self, nvars: int, order: int):
        if nvars < 1:
            raise ValueError("nvars must be positive")
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"order must lie in [0, {MAX_ORDER}]")
        self.nvars = nvars
        self.order = order
        monos = [m for d in range(order + 1) for m in _degree_monomials(nvars, d)]
        self.monomials = np.array(monos, dtype=np.int64).reshape(len(monos), nvars)
        self.size = len(monos)
        assert self.size == math.comb(nvars + order, order)
        self.degrees = self.monomials.sum(axis=1)
        self.index = {m: i for i, m in enumerate(monos)}
        self._build_product_table()
        self._diff_tables = {}
        self._tensor_tables = {}

    def __repr__(self):
        return f"JetSpace(nvars={self.nvars}, order={self.order})"

    def _build_product_table(self):
        base = self.order + 1
        weights = base ** np.arange(self.nvars)
        keys = self.monomials @ weights
        sorter = np.argsort(keys)
        sorted_keys = keys[sorter]
        ia, ib = [], []
        for i in range(self.size):
            room = self.order - self.degrees[i]
            count = math.comb(self.nvars + room, room)
            ia.append(np.full(count, i))
            ib.append(np.arange(count))
        ia = np.concatenate(ia)
        ib = np.concatenate(ib)
        sums = (self.monomials[ia] + self.monomials[ib]) @ weights
        ic = sorter[np.searchsorted(sorted_keys, sums)]
        perm = np.argsort(ic, kind="stable")
        self._ia = ia[perm]
        self._ib = ib[perm]
        self._ic = ic[perm]
        # each output coefficient receives at least the pair (gamma, 0)
        self._starts = np.searchsorted(self._ic, np.arange(self.size))

    @property
    def npairs(self) -> int:
        return len(self._ia)

    # construction

    def zeros(self, shape=()):
        return np.zeros(tuple(shape) + (self.size,))

    def constant(self, value):
        value = np.asarray(value, dtype=float)
        out = np.zeros(value.shape + (self.size,))
        out[..., 0] = value
        return out

    def variable(self, var: int, value: float):
        out = np.zeros(self.size)
        out[0] = value
        if self.order >= 1:
            out[1 + var] = 1.0
        return out

    def seeded(self, value: float, linear):
        """Jet ``value + sum_k linear[k] * t_k`` (a directional seed)."""
        out = np.zeros(self.size)
        out[0] = value
        if self.order >= 1:
            out[1 : 1 + self.nvars] = linear
        return out

    # arithmetic

    def mul(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.ndim == 1 and b.ndim == 1:
            return np.bincount(self._ic, weights=a[self._ia] * b[self._ib], minlength=self.size)
        prod = a[..., self._ia] * b[..., self._ib]
        return np.add.reduceat(prod, self._starts, axis=-1)

    def matmul(self, A, B):
        """Product of jet-valued matrices of shapes (..., n, m, c) and (..., m, k, c)."""
        prod = np.einsum("...ijp,...jkp->...ikp", A[..., self._ia], B[..., self._ib])
        return np.add.reduceat(prod, self._starts, axis=-1)

    def matvec(self, A, v):
        prod = np.einsum("...ijp,...jp->...ip", A[..., self._ia], v[..., self._ib])
        return np.add.reduceat(prod, self._starts, axis=-1)

    def compose(self, a, taylor):
        """Evaluate ``sum_k taylor[k] * (a - a0)^k`` (``taylor`` has order+1 entries)."""
        a = np.asarray(a, dtype=float)
        nil = a.copy()
        nil[..., 0] = 0.0
        out = self.constant(taylor[self.order])
        for k in range(self.order - 1, -1, -1):
            out = self.mul(out, nil)
            out[..., 0] += taylor[k]
        return out

    def recip(self, a):
        a0 = float(a[0])
        if a0 == 0.0:
            raise DomainError("division by a jet with zero constant term")
        return self.compose(a, [(-1.0) ** k * a0 ** (-1 - k) for k in range(self.order + 1)])

    def inv(self, A):
        """Inverse of a jet-valued square matrix (n, n, c)."""
        A = np.asarray(A, dtype=float)
        A0 = A[..., 0]
        A0inv = np.linalg.inv(A0)
        nil = A.copy()
        nil[..., 0] = 0.0
        M = -np.einsum("ij,jkp->ikp", A0inv, nil)
        base = self.constant(A0inv)
        X = base
        for _ in range(self.order):
            X = base + self.matmul(M, X)
        return X

    # calculus

    def diff(self, a, var: int):
        """Partial derivative along ``var``; the result lives in order-1."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        table = self._diff_tables.get(var)
        if table is None:
            lower = jet_space(self.nvars, self.order - 1)
            shifted = lower.monomials.copy()
            shifted[:, var] += 1
            src = np.array([self.index[tuple(m)] for m in shifted])
            fac = shifted[:, var].astype(float)
            table = (src, fac)
            self._diff_tables[var] = table
        src, fac = table
        return np.asarray(a)[..., src] * fac

    def lower(self, order=None):
        return jet_space(self.nvars, self.order - 1 if order is None else order)

    def truncate(self, a, order: int):
        return np.asarray(a)[..., : math.comb(self.nvars + order, order)]

    def coefficient(self, a, multi_index):
        return np.asarray(a)[..., self.index[tuple(multi_index)]]

    def derivative_tensor(self, a, k: int):
        """All k-th partial derivatives, shape (..., nvars, ..., nvars)."""
        if k > self.order:
            raise ValueError("derivative order exceeds jet order")
        table = self._tensor_tables.get(k)
        if table is None:
            idx, fac = [], []
            for combo in itertools.product(range(self.nvars), repeat=k):
                alpha = [0] * self.nvars
                for v in combo:
                    alpha[v] += 1
                idx.append(self.index[tuple(alpha)])
                fac.append(math.prod(math.factorial(e) for e in alpha))
            table = (np.array(idx, dtype=np.int64), np.array(fac, dtype=float))
            self._tensor_tables[k] = table
        idx, fac = table
        a = np.asarray(a)
        out = a[..., idx] * fac
        return out.reshape(a.shape[:-1] + (self.nvars,) * k)

    def gradient(self, a):
        return self.derivative_tensor(a, 1)

    def hessian(self, a):
        return self.derivative_tensor(a, 2)

    def embed_map(self, target: "JetSpace", offset: int = 0):
        """Indices placing this space's monomials into ``target`` (variables shifted by offset)."""
        if target.order < self.order:
            raise ValueError("target order too small")
        if offset + self.nvars > target.nvars:
            raise ValueError("target has too few variables")
        out = []
        for m in self.monomials:
            full = [0] * target.nvars
            full[offset : offset + self.nvars] = m
            out.append(target.index[tuple(full)])
        return np.array(out, dtype=np.int64)

    def embed(self, a, target: "JetSpace", offset: int = 0):
        idx = _embed_map(self.nvars, self.order, target.nvars, target.order, offset)
        a = np.asarray(a)
        out = np.zeros(a.shape[:-1] + (target.size,))
        out[..., idx] = a
        return out


@lru_cache(maxsize=None)
def jet_space(nvars: int, order: int) -> JetSpace:
    return JetSpace(nvars, order)


@lru_cache(maxsize=None)
def _embed_map(nvars, order, tnvars, torder, offset):
    return jet_space(nvars, order).embed_map(jet_space(tnvars, torder), offset)


def _binomial_series(a0, p, order):
    out, c = [], 1.0
    for k in range(order + 1):
        out.append(c * a0 ** (p - k))
        c *= (p - k) / (k + 1)
    return out


class Jet:
    """A single truncated Taylor expansion with arithmetic operators."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space: JetSpace, coeffs):
        self.space = space
        self.coeffs = np.asarray(coeffs, dtype=float)

    @classmethod
    def constant(cls, value, nvars, order):
        s = jet_space(nvars, order)
        return cls(s, s.constant(value))

    @classmethod
    def variable(cls, var, value, nvars, order):
        s = jet_space(nvars, order)
        return cls(s, s.variable(var, value))

    @classmethod
    def seeded(cls, value, linear, order):
        linear = np.asarray(linear, dtype=float)
        s = jet_space(len(linear), order)
        return cls(s, s.seeded(value, linear))

    @property
    def nvars(self):
        return self.space.nvars

    @property
    def order(self):
        return self.space.order

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def __repr__(self):
        return f"Jet(nvars={self.nvars}, order={self.order}, value={self.value!r})"

    def _lift(self, other):
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise ValueError(f"incompatible jets: {self.space} vs {other.space}")
            return other.coeffs
        return None

    def __add__(self, other):
        c = self._lift(other)
        if c is None:
            out = self.coeffs.copy()
            out[0] += other
            return Jet(self.space, out)
        return Jet(self.space, self.coeffs + c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.coeffs)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        c = self._lift(other)
        if c is None:
            return Jet(self.space, self.coeffs * other)
        return Jet(self.space, self.space.mul(self.coeffs, c))

    __rmul__ = __mul__

    def reciprocal(self):
        return Jet(self.space, self.space.recip(self.coeffs))

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        if other == 0:
            raise DomainError("division by zero")
        return Jet(self.space, self.coeffs / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def _compose(self, taylor):
        return Jet(self.space, self.space.compose(self.coeffs, taylor))

    def __pow__(self, p):
        if isinstance(p, Jet):
            raise TypeError("jet exponents are not supported")
        p = float(p)
        if p.is_integer():
            k = int(p)
            if k < 0:
                return self.reciprocal() ** (-k)
            out, base = Jet.constant(1.0, self.nvars, self.order), self
            while k:
                if k & 1:
                    out = out * base
                k >>= 1
                if k:
                    base = base * base
            return out
        a0 = self.value
        if a0 <= 0.0:
            if a0 == 0.0 and self.order == 0 and p > 0:
                return Jet.constant(0.0, self.nvars, 0)
            raise DomainError(f"non-integer power {p} of non-positive value {a0}")
        return self._compose(_binomial_series(a0, p, self.order))

    def sqrt(self):
        a0 = self.value
        if a0 < 0.0 or (a0 == 0.0 and self.order > 0):
            raise DomainError(f"sqrt of {a0}")
        if a0 == 0.0:
            return Jet.constant(0.0, self.nvars, 0)
        return self._compose(_binomial_series(a0, 0.5, self.order))

    def exp(self):
        e = math.exp(self.value)
        return self._compose([e / math.factorial(k) for k in range(self.order + 1)])

    def log(self):
        a0 = self.value
        if a0 <= 0.0:
            raise DomainError(f"ln of non-positive value {a0}")
        taylor = [math.log(a0)] + [(-1.0) ** (k + 1) / (k * a0**k) for k in range(1, self.order + 1)]
        return self._compose(taylor)

    def sin(self):
        a0 = self.value
        return self._compose(
            [math.sin(a0 + k * math.pi / 2) / math.factorial(k) for k in range(self.order + 1)]
        )

    def cos(self):
        a0 = self.value
        return self._compose(
            [math.cos(a0 + k * math.pi / 2) / math.factorial(k) for k in range(self.order + 1)]
        )

    def __abs__(self):
        a0 = self.value
        if a0 > 0:
            return self
        if a0 < 0:
            return -self
        if self.order == 0:
            return self
        raise DomainError("abs is not differentiable at 0")

    # derivative access

    def diff(self, var):
        return Jet(self.space.lower(), self.space.diff(self.coeffs, var))

    def truncate(self, order):
        return Jet(jet_space(self.nvars, order), self.space.truncate(self.coeffs, order))

    def embed(self, nvars, offset=0, order=None):
        target = jet_space(nvars, self.order if order is None else order)
        return Jet(target, self.space.embed(self.coeffs, target, offset))

    def coefficient(self, multi_index):
        return float(self.space.coefficient(self.coeffs, multi_index))

    def partial(self, *variables):
        """Value of the mixed partial derivative along the listed variables."""
        alpha = [0] * self.nvars
        for v in variables:
            alpha[v] += 1
        if sum(alpha) > self.order:
            raise ValueError("derivative order exceeds jet order")
        fac = math.prod(math.factorial(e) for e in alpha)
        return fac * self.coefficient(alpha)

    def gradient(self):
        return self.space.gradient(self.coeffs)

    def hessian(self):
        return self.space.hessian(self.coeffs)


# dispatching elementary functions (floats, ndarrays and jets)


def sqrt(z):
    if isinstance(z, Jet):
        return z.sqrt()
    if np.any(np.asarray(z) < 0):
        raise DomainError("sqrt of negative value")
    return np.sqrt(z) if isinstance(z, np.ndarray) else math.sqrt(z)


def exp(z):
    if isinstance(z, Jet):
        return z.exp()
    return np.exp(z) if isinstance(z, np.ndarray) else math.exp(z)


def log(z):
    if isinstance(z, Jet):
        return z.log()
    if np.any(np.asarray(z) <= 0):
        raise DomainError("ln of non-positive value")
    return np.log(z) if isinstance(z, np.ndarray) else math.log(z)


def sin(z):
    if isinstance(z, Jet):
        return z.sin()
    return np.sin(z) if isinstance(z, np.ndarray) else math.sin(z)


def cos(z):
    if isinstance(z, Jet):
        return z.cos()
    return np.cos(z) if isinstance(z, np.ndarray) else math.cos(z)


# finite-difference oracle


@dataclass(frozen=True)
class FDOracle:
    """Central differences, second order accurate, optional Richardson step."""

    step: float = 1e-4
    richardson: bool = False

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")

    def _call(self, f, x):
        try:
            return float(f(x))
        except Exception as exc:  # noqa: BLE001 - re-raised with context
            raise EvaluationError(f"function evaluation failed at {x!r}: {exc}") from exc

    def _grad(self, f, x, h):
        x = np.asarray(x, dtype=float)
        g = np.empty(len(x))
        for i in range(len(x)):
            e = np.zeros(len(x))
            e[i] = h
            g[i] = (self._call(f, x + e) - self._call(f, x - e)) / (2 * h)
        return g

    def _hess(self, f, x, h):
        x = np.asarray(x, dtype=float)
        m = len(x)
        H = np.empty((m, m))
        f0 = self._call(f, x)
        for i in range(m):
            ei = np.zeros(m)
            ei[i] = h
            H[i, i] = (self._call(f, x + ei) - 2 * f0 + self._call(f, x - ei)) / h**2
            for j in range(i):
                ej = np.zeros(m)
                ej[j] = h
                H[i, j] = H[j, i] = (
                    self._call(f, x + ei + ej)
                    - self._call(f, x + ei - ej)
                    - self._call(f, x - ei + ej)
                    + self._call(f, x - ei - ej)
                ) / (4 * h * h)
        return H

    def gradient(self, f, x):
        g = self._grad(f, x, self.step)
        if self.richardson:
            g = (4 * self._grad(f, x, self.step / 2) - g) / 3
        return g

    def hessian(self, f, x):
        H = self._hess(f, x, self.step)
        if self.richardson:
            H = (4 * self._hess(f, x, self.step / 2) - H) / 3
        return H


def fd_gradient(f, x, oracle: FDOracle | None = None):
    return (oracle or FDOracle()).gradient(f, x)


def fd_hessian(f, x, oracle: FDOracle | None = None):
    return (oracle or FDOracle()).hessian(f, x)
