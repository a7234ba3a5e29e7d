"""Scalar chart functions given as text.

Grammar (standard infix, ``^`` right associative and binding tighter than
unary minus)::

    expr   := unary (('+' | '-') term)*        (n-ary Sum node)
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | x<k> | PARAM | FUNC '(' expr ')' | '(' expr ')'

Exponents must be constant.  A non-constant exponent over a literal positive
base is rewritten as ``exp(b*ln(a))``; anything else is rejected so that no
branch cut is ever crossed silently.

Evaluation is generic over the numeric type: floats give values, :class:`Jet`
arguments give truncated Taylor expansions.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

from . import jets
from .errors import (
    DimensionOutOfRangeError,
    DomainError,
    ExprSyntaxError,
    UnknownIdentifierError,
)

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Param",
    "Sum",
    "BinOp",
    "Neg",
    "Call",
    "FUNCTIONS",
    "parse",
    "to_string",
    "evaluate",
    "eval_jet",
    "fold_constants",
    "simplify",
    "num",
    "var",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "power",
    "call",
]

FUNCTIONS = ("sqrt", "exp", "ln", "sin", "cos", "abs")

_PREC_SUM, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


class Expr:
    """Base AST node.  Nodes are immutable and compare structurally."""

    __slots__ = ()

    def __str__(self):
        return to_string(self)

    def depth(self) -> int:
        kids = self.children()
        return 1 + max(k.depth() for k in kids) if kids else 0

    def children(self) -> tuple:
        return ()

    def variables(self) -> set:
        out = set()
        for k in self.children():
            out |= k.variables()
        return out

    def is_constant(self) -> bool:
        return not self.variables()


@dataclass(frozen=True)
class Num(Expr):
    value: float

    def _eval(self, point):
        return self.value

    def _prec(self):
        return _PREC_NEG if self.value < 0 else _PREC_ATOM


@dataclass(frozen=True)
class Var(Expr):
    index: int  # 1-based

    def variables(self):
        return {self.index}

    def _eval(self, point):
        return point[self.index - 1]

    def _prec(self):
        return _PREC_ATOM


@dataclass(frozen=True)
class Param(Expr):
    name: str
    value: float

    def _eval(self, point):
        return self.value

    def _prec(self):
        return _PREC_ATOM


@dataclass(frozen=True)
class Sum(Expr):
    terms: tuple
    signs: tuple  # +1 / -1 per term; the first is always +1

    def children(self):
        return self.terms

    def _eval(self, point):
        acc = self.terms[0]._eval(point)
        for t, s in zip(self.terms[1:], self.signs[1:]):
            v = t._eval(point)
            acc = acc + v if s > 0 else acc - v
        return acc

    def _prec(self):
        return _PREC_SUM


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # '*', '/', '^'
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)

    def _eval(self, point):
        a = self.left._eval(point)
        if self.op == "^":
            p = self.right._eval(point)
            if isinstance(p, jets.Jet):
                raise DomainError("exponent must be constant")
            return _power(a, float(p))
        b = self.right._eval(point)
        if self.op == "*":
            return a * b
        if not isinstance(b, jets.Jet) and b == 0:
            raise DomainError("division by zero")
        return a / b

    def _prec(self):
        return _PREC_POW if self.op == "^" else _PREC_MUL


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr

    def children(self):
        return (self.operand,)

    def _eval(self, point):
        return -self.operand._eval(point)

    def _prec(self):
        return _PREC_NEG


@dataclass(frozen=True)
class Call(Expr):
    name: str
    arg: Expr

    def children(self):
        return (self.arg,)

    def _eval(self, point):
        v = self.arg._eval(point)
        if self.name == "sqrt":
            return jets.sqrt(v)
        if self.name == "exp":
            return jets.exp(v)
        if self.name == "ln":
            return jets.log(v)
        if self.name == "sin":
            return jets.sin(v)
        if self.name == "cos":
            return jets.cos(v)
        return abs(v)

    def _prec(self):
        return _PREC_ATOM


def _power(a, p: float):
    if isinstance(a, jets.Jet):
        return a**p
    if p.is_integer():
        if a == 0 and p < 0:
            raise DomainError("zero raised to a negative power")
        return a ** int(p)
    if a <= 0:
        if a == 0 and p > 0:
            return 0.0
        raise DomainError(f"non-integer power {p} of non-positive value {a}")
    return a**p


# construction helpers


def num(v) -> Num:
    return Num(float(v))


def var(i: int) -> Var:
    return Var(int(i))


def add(*terms) -> Expr:
    terms = [t for t in terms]
    if len(terms) == 1:
        return terms[0]
    return Sum(tuple(terms), (1,) * len(terms))


def sub(a, b) -> Expr:
    return Sum((a, b), (1, -1))


def mul(a, b) -> Expr:
    return BinOp("*", a, b)


def div(a, b) -> Expr:
    return BinOp("/", a, b)


def neg(a) -> Expr:
    return Neg(a)


def power(a, p) -> Expr:
    return BinOp("^", a, p if isinstance(p, Expr) else num(p))


def call(name, a) -> Expr:
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    return Call(name, a)


# printing


def _fmt_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _wrap(e: Expr, min_prec: int) -> str:
    s = to_string(e)
    return f"({s})" if e._prec() < min_prec else s


def to_string(e: Expr) -> str:
    """Render ``e`` with the minimal parentheses that re-parse to the same tree."""
    if isinstance(e, Num):
        return _fmt_number(e.value)
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Param):
        return e.name
    if isinstance(e, Sum):
        parts = [_wrap(e.terms[0], _PREC_SUM + 1)]
        for t, s in zip(e.terms[1:], e.signs[1:]):
            parts.append(("+ " if s > 0 else "- ") + _wrap(t, _PREC_SUM + 1))
        return " ".join(parts)
    if isinstance(e, BinOp):
        if e.op == "^":
            return f"{_wrap(e.left, _PREC_ATOM)}^{_wrap(e.right, _PREC_NEG)}"
        return f"{_wrap(e.left, _PREC_MUL)}{e.op}{_wrap(e.right, _PREC_NEG)}"
    if isinstance(e, Neg):
        inner = e.operand
        if isinstance(inner, Neg) or (isinstance(inner, Num) and inner.value < 0):
            return f"-({to_string(inner)})"
        return "-" + _wrap(inner, _PREC_NEG)
    if isinstance(e, Call):
        return f"{e.name}({to_string(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)
_VARNAME = re.compile(r"x(\d+)$")


class _Parser:
    def __init__(self, text, dim, params):
        self.text = text
        self.dim = dim
        self.params = dict(params or {})
        self.tokens = self._tokenize()
        self.pos = 0

    def _offset(self, char_index):
        return len(self.text[:char_index].encode("utf-8"))

    def _tokenize(self):
        out = []
        i, n = 0, len(self.text)
        while i < n:
            if self.text[i].isspace():
                i += 1
                continue
            m = _TOKEN.match(self.text, i)
            if m is None or m.end() == i:
                raise ExprSyntaxError(self._offset(i), f"unexpected character {self.text[i]!r}", self.text)
            kind = m.lastgroup
            start = m.start(kind)
            out.append((kind, m.group(kind), start))
            i = m.end()
        out.append(("end", "", len(self.text)))
        return out

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, tok, message, cls=ExprSyntaxError):
        return cls(self._offset(tok[2]), message, self.text)

    def expect(self, value):
        tok = self.take()
        if tok[1] != value or tok[0] == "end":
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise self.error(tok, f"expected {value!r}, found {what}")
        return tok

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise self.error(tok, f"unexpected token {tok[1]!r}")
        return e

    def expr(self):
        terms, signs = [self.term_rest(self.unary())], [1]
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            signs.append(1 if self.take()[1] == "+" else -1)
            terms.append(self.term_rest(self.unary()))
        if len(terms) == 1:
            return terms[0]
        return Sum(tuple(terms), tuple(signs))

    def term_rest(self, left):
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            left = BinOp(op, left, self.unary())
        return left

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return Neg(self.unary())
        if tok[0] == "op" and tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.take()
            exponent = self.unary()
            if exponent.is_constant():
                return BinOp("^", base, exponent)
            if isinstance(base, Num) and base.value > 0:
                return Call("exp", BinOp("*", exponent, Call("ln", base)))
            raise self.error(tok, "exponent must be constant unless the base is a positive literal")
        return base

    def atom(self):
        tok = self.take()
        kind, text, _ = tok
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if text not in FUNCTIONS:
                    raise self.error(tok, f"unknown function {text!r}", UnknownIdentifierError)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            m = _VARNAME.match(text)
            if m:
                k = int(m.group(1))
                if not 1 <= k <= self.dim:
                    raise self.error(
                        tok, f"variable {text} outside dimension {self.dim}", DimensionOutOfRangeError
                    )
                return Var(k)
            if text in self.params:
                return Param(text, float(self.params[text]))
            if text in FUNCTIONS:
                raise self.error(tok, f"function {text!r} requires an argument")
            raise self.error(tok, f"unknown identifier {text!r}", UnknownIdentifierError)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        what = "end of input" if kind == "end" else repr(text)
        raise self.error(tok, f"expected an operand, found {what}")


def parse(text: str, dim: int, params: Mapping[str, float] | None = None) -> Expr:
    """Parse ``text`` into an expression over the coordinates ``x1..x{dim}``."""
    if not isinstance(text, str) or not text.strip():
        raise ExprSyntaxError(0, "empty expression", text)
    if dim < 1:
        raise ValueError("dim must be positive")
    return _Parser(text, dim, params).parse()


def evaluate(e: Expr, point: Sequence):
    """Evaluate at a coordinate assignment (floats or jets, one per variable)."""
    return e._eval(point)


def eval_jet(e: Expr, point: Sequence[jets.Jet]) -> jets.Jet:
    """Truncated Taylor expansion of ``e`` at a jet-valued point."""
    if not point:
        raise ValueError("empty point")
    space = point[0].space
    if any(p.space is not space for p in point):
        raise ValueError("all coordinate jets must share order and variable count")
    out = e._eval(point)
    if not isinstance(out, jets.Jet):
        out = jets.Jet(space, space.constant(out))
    return out


def fold_constants(e: Expr) -> Expr:
    """Replace variable-free subtrees by their numeric value."""
    if isinstance(e, (Num, Var)):
        return e
    if e.is_constant():
        try:
            v = float(e._eval(()))
        except DomainError:
            pass
        else:
            if math.isfinite(v):
                return Num(v)
    if isinstance(e, Sum):
        return Sum(tuple(fold_constants(t) for t in e.terms), e.signs)
    if isinstance(e, BinOp):
        return BinOp(e.op, fold_constants(e.left), fold_constants(e.right))
    if isinstance(e, Neg):
        return Neg(fold_constants(e.operand))
    if isinstance(e, Call):
        return Call(e.name, fold_constants(e.arg))
    return e


def _is_num(e, v=None):
    return isinstance(e, Num) and (v is None or e.value == v)


def simplify(e: Expr) -> Expr:
    """Constant folding plus removal of zero terms and unit factors."""
    e = fold_constants(e)
    if isinstance(e, Sum):
        terms, signs = [], []
        for t, s in zip(e.terms, e.signs):
            t = simplify(t)
            if _is_num(t, 0.0):
                continue
            terms.append(t)
            signs.append(s)
        if not terms:
            return Num(0.0)
        if len(terms) == 1:
            return terms[0] if signs[0] > 0 else simplify(Neg(terms[0]))
        return Sum(tuple(terms), tuple(signs))
    if isinstance(e, BinOp):
        a, b = simplify(e.left), simplify(e.right)
        if e.op == "*":
            if _is_num(a, 0.0) or _is_num(b, 0.0):
                return Num(0.0)
            if _is_num(a, 1.0):
                return b
            if _is_num(b, 1.0):
                return a
        elif e.op == "/":
            if _is_num(a, 0.0):
                return Num(0.0)
            if _is_num(b, 1.0):
                return a
        elif e.op == "^" and _is_num(b, 1.0):
            return a
        return fold_constants(BinOp(e.op, a, b))
    if isinstance(e, Neg):
        a = simplify(e.operand)
        if isinstance(a, Num):
            return Num(-a.value)
        if isinstance(a, Neg):
            return a.operand
        return Neg(a)
    if isinstance(e, Call):
        return fold_constants(Call(e.name, simplify(e.arg)))
    return e
