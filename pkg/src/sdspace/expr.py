"""A tiny expression language for functions of ``x1, ..., xn``.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | atom ("^" ["-"] integer)?
    atom   := number | "pi" | var | call | "(" expr ")"
    var    := "x" integer                      (1-based)
    call   := ident "(" expr ("," expr)* ")"

Builtins: ``sin cos exp sqrt abs`` (one argument), ``indicator(x, a, b)``,
``bump(x, c, e)``, ``hk_osc(x)``, plus two names that symbolic
differentiation produces and that therefore must round-trip:
``dbump(x, c, e, j)`` (j-th derivative of ``bump`` in ``x``) and
``hk_anti(x)`` (``x^2 sin(x^-2)``, an antiderivative of ``hk_osc``).

Expressions are immutable trees; :func:`evaluate` works on numpy arrays and
:func:`diff` differentiates symbolically.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Expr", "Num", "Pi", "Var", "Neg", "BinOp", "Pow", "Call",
    "ParseError", "ExprSyntaxError", "UnknownIdentifierError", "VariableIndexError",
    "NotDifferentiableError",
    "parse_expr", "to_text", "evaluate", "diff", "variables", "max_index",
    "const_value", "is_constant", "product_factors", "breakpoints",
    "bump_profile", "bump_profile_derivative",
]


class ParseError(ValueError):
    """Expression text could not be turned into a tree.  ``offset`` is a byte offset."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class ExprSyntaxError(ParseError):
    pass


class UnknownIdentifierError(ParseError):
    pass


class VariableIndexError(ParseError):
    pass


class NotDifferentiableError(ValueError):
    """Symbolic derivative requested through a non-smooth node."""


class Expr:
    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Pi(Expr):
    pass


@dataclass(frozen=True)
class Var(Expr):
    index: int


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: tuple


ARITY = {
    "sin": 1, "cos": 1, "exp": 1, "sqrt": 1, "abs": 1,
    "hk_osc": 1, "hk_anti": 1,
    "indicator": 3, "bump": 3, "dbump": 4,
}

ZERO = Num(0.0)
ONE = Num(1.0)


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str):
    pos = 0
    toks = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            off = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[off]!r}", off)
        kind = m.lastgroup
        toks.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, order: int | None):
        self.text = text
        self.order = order
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, off = self.take()
        if val != value or kind != "op":
            got = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, got {got}", off)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", off)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.factor())
        return e

    def factor(self) -> Expr:
        if self.peek() [:2] == ("op", "-"):
            self.take()
            arg = self.factor()
            if isinstance(arg, Num):
                return Num(-arg.value)
            return Neg(arg)
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            sign = 1
            if self.peek()[:2] == ("op", "-"):
                self.take()
                sign = -1
            kind, val, off = self.take()
            if kind != "num" or not re.fullmatch(r"\d+", val):
                raise ExprSyntaxError("exponent must be an integer", off)
            return Pow(base, sign * int(val))
        return base

    def atom(self) -> Expr:
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "ident":
            if val == "pi":
                return Pi()
            m = re.fullmatch(r"x(\d+)", val)
            if m:
                idx = int(m.group(1))
                if idx < 1 or (self.order is not None and idx > self.order):
                    raise VariableIndexError(
                        f"variable {val} out of range for order {self.order}", off)
                return Var(idx)
            if val not in ARITY:
                raise UnknownIdentifierError(f"unknown identifier {val!r}", off)
            self.expect("(")
            args = [self.expr()]
            while self.peek()[:2] == ("op", ","):
                self.take()
                args.append(self.expr())
            close_off = self.peek()[2]
            self.expect(")")
            if len(args) != ARITY[val]:
                raise ExprSyntaxError(
                    f"{val} takes {ARITY[val]} argument(s), got {len(args)}", close_off)
            for a in args[1:]:
                if not is_constant(a):
                    raise ExprSyntaxError(f"parameters of {val} must be constants", off)
            if val == "dbump":
                j = const_value(args[3])
                if j < 0 or j != int(j):
                    raise ExprSyntaxError("dbump order must be a nonnegative integer", off)
            return Call(val, tuple(args))
        got = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {got}", off)


def parse_expr(text: str, order: int | None = None) -> Expr:
    """Parse ``text``; with ``order`` given, every ``xi`` must satisfy ``i <= order``."""
    return _Parser(text, order).parse()


# ---------------------------------------------------------------- printing

def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return 1 if e.op in "+-" else 2
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Num) and (e.value < 0 or math.copysign(1.0, e.value) < 0):
        return 3
    if isinstance(e, Pow):
        return 4
    return 5


def _wrap(e: Expr, need: int) -> str:
    s = to_text(e)
    return f"({s})" if _prec(e) < need else s


def to_text(e: Expr) -> str:
    """Render ``e`` so that ``parse_expr(to_text(e)) == e``."""
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, Pi):
        return "pi"
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, 3)
    if isinstance(e, BinOp):
        p = 1 if e.op in "+-" else 2
        return f"{_wrap(e.left, p)}{e.op}{_wrap(e.right, p + 1)}"
    if isinstance(e, Pow):
        return f"{_wrap(e.base, 5)}^{e.exponent}"
    if isinstance(e, Call):
        return f"{e.name}({','.join(to_text(a) for a in e.args)})"
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------- queries

def variables(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset((e.index,))
    if isinstance(e, Neg):
        return variables(e.arg)
    if isinstance(e, BinOp):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Pow):
        return variables(e.base)
    if isinstance(e, Call):
        out = frozenset()
        for a in e.args:
            out |= variables(a)
        return out
    return frozenset()


def max_index(e: Expr) -> int:
    return max(variables(e), default=0)


def is_constant(e: Expr) -> bool:
    return not variables(e)


def const_value(e: Expr) -> float:
    if not is_constant(e):
        raise ValueError(f"{to_text(e)} is not constant")
    return float(evaluate(e, np.zeros((1, 0)))[0])


def product_factors(e: Expr) -> list:
    """Flatten a top-level product into its factors (a leading ``Neg`` becomes ``-1``)."""
    if isinstance(e, BinOp) and e.op == "*":
        return product_factors(e.left) + product_factors(e.right)
    if isinstance(e, Neg):
        return [Num(-1.0)] + product_factors(e.arg)
    return [e]


def breakpoints(e: Expr) -> dict:
    """Per-variable points where the integrand may be non-smooth.

    Collected from indicator edges, bump support edges and the origin of
    ``hk_osc``/``hk_anti``/``sqrt`` when applied directly to a variable.
    """
    out: dict = {}

    def add(idx, *pts):
        out.setdefault(idx, set()).update(float(p) for p in pts)

    def walk(node):
        if isinstance(node, Call):
            x = node.args[0]
            if isinstance(x, Var):
                if node.name == "indicator":
                    add(x.index, const_value(node.args[1]), const_value(node.args[2]))
                elif node.name in ("bump", "dbump"):
                    c, w = const_value(node.args[1]), const_value(node.args[2])
                    add(x.index, c - w / 2, c + w / 2)
                elif node.name in ("hk_osc", "hk_anti", "sqrt", "abs"):
                    add(x.index, 0.0)
            for a in node.args:
                walk(a)
        elif isinstance(node, Neg):
            walk(node.arg)
        elif isinstance(node, BinOp):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, Pow):
            walk(node.base)

    walk(e)
    return out


# ---------------------------------------------------------------- evaluation

@lru_cache(maxsize=None)
def _bump_poly(j: int) -> np.polynomial.Polynomial:
    # b^(j)(t) = b(t) * P_j(t) / (1 - t^2)^(2j)
    P = np.polynomial.Polynomial([1.0])
    s = np.polynomial.Polynomial([1.0, 0.0, -1.0])
    t = np.polynomial.Polynomial([0.0, 1.0])
    for i in range(j):
        P = P.deriv() * s * s + 4 * i * t * s * P - 2 * t * P
    return P


def bump_profile(t):
    """``exp(1 - 1/(1 - t^2))`` on ``|t| < 1``, zero elsewhere; peak value 1 at 0."""
    return bump_profile_derivative(t, 0)


def bump_profile_derivative(t, j: int):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    s = 1.0 - ti * ti
    with np.errstate(over="ignore", under="ignore", divide="ignore"):
        if j == 0:
            out[inside] = np.exp(1.0 - 1.0 / s)
        else:
            out[inside] = np.exp(1.0 - 1.0 / s - 2 * j * np.log(s)) * _bump_poly(j)(ti)
    return out


def _hk_osc(x):
    with np.errstate(all="ignore"):
        u = 1.0 / (x * x)
        out = 2.0 * x * np.sin(u) - 2.0 * np.cos(u) / x
    out[x == 0] = 0.0
    return out


def _hk_anti(x):
    with np.errstate(all="ignore"):
        out = x * x * np.sin(1.0 / (x * x))
    out[x == 0] = 0.0
    return out


def evaluate(e: Expr, X) -> np.ndarray:
    """Evaluate on the rows of ``X`` (shape ``(N, n)``); returns shape ``(N,)``.

    No domain checks: division by zero or ``sqrt`` of a negative yields
    ``inf``/``nan`` which callers inspect.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    with np.errstate(all="ignore"):
        return np.broadcast_to(_ev(e, X), (X.shape[0],)).astype(float, copy=True)


def _ev(e: Expr, X):
    if isinstance(e, Num):
        return np.float64(e.value)
    if isinstance(e, Pi):
        return np.float64(math.pi)
    if isinstance(e, Var):
        if e.index > X.shape[1]:
            raise ValueError(f"x{e.index} evaluated on {X.shape[1]}-dimensional points")
        return X[:, e.index - 1]
    if isinstance(e, Neg):
        return -_ev(e.arg, X)
    if isinstance(e, BinOp):
        a, b = _ev(e.left, X), _ev(e.right, X)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        return a / b
    if isinstance(e, Pow):
        b = _ev(e.base, X)
        if e.exponent < 0:
            return 1.0 / b ** (-e.exponent)
        return b ** e.exponent
    if isinstance(e, Call):
        x = np.asarray(_ev(e.args[0], X), dtype=float)
        name = e.name
        if name == "sin":
            return np.sin(x)
        if name == "cos":
            return np.cos(x)
        if name == "exp":
            return np.exp(x)
        if name == "sqrt":
            return np.sqrt(x)
        if name == "abs":
            return np.abs(x)
        if name == "hk_osc":
            return _hk_osc(np.atleast_1d(x).astype(float))
        if name == "hk_anti":
            return _hk_anti(np.atleast_1d(x).astype(float))
        p = [const_value(a) for a in e.args[1:]]
        if name == "indicator":
            return ((x >= p[0]) & (x <= p[1])).astype(float)
        c, w = p[0], p[1]
        j = int(p[2]) if name == "dbump" else 0
        t = 2.0 * (x - c) / w
        return (2.0 / w) ** j * bump_profile_derivative(np.atleast_1d(t), j)
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------- symbolic calculus

def _add(a, b):
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return BinOp("+", a, b)


def _sub(a, b):
    if b == ZERO:
        return a
    if a == ZERO:
        return _neg(b)
    return BinOp("-", a, b)


def _neg(a):
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _mul(a, b):
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    if isinstance(b, Num) and not isinstance(a, Num):
        a, b = b, a
    return BinOp("*", a, b)


def _div(a, b):
    if a == ZERO:
        return ZERO
    if b == ONE:
        return a
    return BinOp("/", a, b)


def _pow(a, k):
    if k == 0:
        return ONE
    if k == 1:
        return a
    return Pow(a, k)


def diff(e: Expr, i: int) -> Expr:
    """Symbolic partial derivative with respect to ``x_i``.

    Raises :class:`NotDifferentiableError` when the variable passes through
    ``abs``, ``indicator`` or ``hk_osc``.
    """
    if isinstance(e, (Num, Pi)):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == i else ZERO
    if i not in variables(e):
        return ZERO
    if isinstance(e, Neg):
        return _neg(diff(e.arg, i))
    if isinstance(e, BinOp):
        da, db = diff(e.left, i), diff(e.right, i)
        if e.op == "+":
            return _add(da, db)
        if e.op == "-":
            return _sub(da, db)
        if e.op == "*":
            return _add(_mul(da, e.right), _mul(e.left, db))
        num = _sub(_mul(da, e.right), _mul(e.left, db))
        return _div(num, _pow(e.right, 2))
    if isinstance(e, Pow):
        k = e.exponent
        return _mul(_mul(Num(float(k)), _pow(e.base, k - 1)), diff(e.base, i))
    if isinstance(e, Call):
        u = e.args[0]
        du = diff(u, i)
        name = e.name
        if name == "sin":
            outer = Call("cos", (u,))
        elif name == "cos":
            outer = _neg(Call("sin", (u,)))
        elif name == "exp":
            outer = e
        elif name == "sqrt":
            outer = _div(Num(0.5), e)
        elif name == "hk_anti":
            outer = Call("hk_osc", (u,))
        elif name == "bump":
            outer = Call("dbump", e.args + (ONE,))
        elif name == "dbump":
            j = const_value(e.args[3])
            outer = Call("dbump", e.args[:3] + (Num(j + 1.0),))
        else:
            raise NotDifferentiableError(
                f"{name} is not differentiable in x{i} (non-smooth node)")
        return _mul(outer, du)
    raise TypeError(f"not an expression: {e!r}")
