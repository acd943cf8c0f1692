"""Tame functions: order-n sections ``f^n(x_bar) * chi_{I_n}(x_hat)``.

A :class:`TameFunction` is an expression (or an opaque vectorized
evaluator) on R^n together with a bounded support box set; outside the
support it is zero and beyond coordinate n the tail indicator is implicit.
Singular points are declared as ``(variable, value)`` hyperplanes so they
survive promotion to higher order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Callable, Iterable, Mapping

import numpy as np

from . import expr as ex
from .measure import BoxSet, TAIL_INTERVAL, lambda_inf, promote_order
from .quadrature import IntegralResult, NonConvergenceError, quad_nd

SMOOTHNESS = ("smooth_compact", "smooth", "piecewise", "pathological")
FD_STEP = 1e-5


class SingularPointError(ValueError):
    """Evaluation requested exactly on a declared singular hyperplane."""


class SmoothnessError(ValueError):
    """Derivative requested beyond what the smoothness tag allows."""


class LimitModeError(ValueError):
    pass


@dataclass(frozen=True)
class MultiIndex:
    """Finite multi-index; ``entries`` are ``(dimension, count)`` pairs with count > 0.

    Accepts a mapping, a sequence of pairs, or (via :meth:`dense`) a plain
    tuple of counts starting at dimension 1.
    """

    entries: tuple = ()

    def __post_init__(self):
        raw = self.entries.items() if isinstance(self.entries, Mapping) else self.entries
        acc: dict = {}
        for dim, cnt in raw:
            dim, cnt = int(dim), int(cnt)
            if dim < 1 or cnt < 0:
                raise ValueError(f"invalid multi-index entry ({dim}, {cnt})")
            if cnt:
                acc[dim] = acc.get(dim, 0) + cnt
        object.__setattr__(self, "entries", tuple(sorted(acc.items())))

    @classmethod
    def dense(cls, *counts: int) -> "MultiIndex":
        return cls(tuple((i + 1, c) for i, c in enumerate(counts)))

    @property
    def size(self) -> int:
        """``|alpha|``."""
        return sum(c for _, c in self.entries)

    @property
    def max_dim(self) -> int:
        return max((d for d, _ in self.entries), default=0)

    def steps(self) -> list:
        """Dimensions in the order partial derivatives are taken."""
        return [d for d, c in self.entries for _ in range(c)]

    def __str__(self) -> str:
        if not self.entries:
            return "0"
        return ",".join(f"x{d}^{c}" if c > 1 else f"x{d}" for d, c in self.entries)


def multi_indices_upto(order: int, m: int) -> list:
    """All multi-indices on dimensions ``1..order`` with ``|beta| <= m``, by size then lexicographically."""
    out = []
    for counts in product(range(m + 1), repeat=order):
        if sum(counts) <= m:
            out.append(MultiIndex.dense(*counts))
    return sorted(out, key=lambda a: (a.size, a.entries))


@dataclass(frozen=True)
class TameFunction:
    """Order-``n`` section of a function on R_I^infinity.

    ``expr`` or ``evaluator`` (an ``(N, n) -> (N,)`` callable) gives values
    on the support base; everything outside ``support`` is zero.
    ``sup_norm`` is an optional declared bound on ``|f|`` and
    ``lq_infinite`` lists exponents ``q`` for which ``||f||_q`` diverges.
    ``tol_floor`` is the tightest quadrature tolerance worth requesting for
    this function.
    """

    order: int
    support: BoxSet
    expr: ex.Expr | None = None
    evaluator: Callable | None = None
    smoothness: str = "smooth"
    singular: tuple = ()
    name: str = ""
    sup_norm: float | None = None
    antiderivative: ex.Expr | None = None
    analytic_derivatives: tuple = ()
    approximate: bool = False
    lq_infinite: frozenset = frozenset()
    tol_floor: float = 0.0

    def __post_init__(self):
        if self.support.order != self.order:
            raise ValueError(f"support has order {self.support.order}, function has order {self.order}")
        if (self.expr is None) == (self.evaluator is None):
            raise ValueError("give exactly one of expr or evaluator")
        if self.expr is not None and ex.max_index(self.expr) > self.order:
            raise ex.VariableIndexError(
                f"variable x{ex.max_index(self.expr)} exceeds order {self.order}", 0)
        if self.smoothness not in SMOOTHNESS:
            raise ValueError(f"unknown smoothness tag {self.smoothness!r}")
        sing = tuple(sorted((int(v), float(x)) for v, x in self.singular))
        object.__setattr__(self, "singular", sing)
        if isinstance(self.analytic_derivatives, Mapping):
            object.__setattr__(self, "analytic_derivatives", tuple(self.analytic_derivatives.items()))
        object.__setattr__(self, "lq_infinite", frozenset(float(q) for q in self.lq_infinite))

    @classmethod
    def from_text(cls, text: str, order: int, support, **kw) -> "TameFunction":
        if not isinstance(support, BoxSet):
            support = BoxSet.box(*support)
        return cls(order, support, expr=ex.parse_expr(text, order), **kw)

    @property
    def text(self) -> str:
        return ex.to_text(self.expr) if self.expr is not None else "<opaque>"

    def raw(self, X) -> np.ndarray:
        """Expression values without support clipping or singular checks."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.expr is not None:
            return ex.evaluate(self.expr, X)
        return np.asarray(self.evaluator(X), dtype=float)

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.order:
            raise ValueError(f"points have dimension {X.shape[1]}, expected {self.order}")
        inside = self.support.contains(X)
        for var, val in self.singular:
            hit = inside & (X[:, var - 1] == val)
            if hit.any():
                raise SingularPointError(f"{self.name or self.text} is singular at x{var} = {val!r}")
        out = np.zeros(X.shape[0])
        if inside.any():
            out[inside] = self.raw(X[inside])
        return out

    def eval(self, point) -> float:
        """Value at a single point of R^order."""
        p = np.asarray(point, dtype=float).ravel()
        if p.size != self.order:
            raise ValueError(f"point has length {p.size}, expected {self.order}")
        return float(self(p[None, :])[0])

    def integral(self, tol: float = 1e-10) -> IntegralResult:
        return quad_nd(self, max(tol, self.tol_floor))

    def scaled(self, c: float) -> "TameFunction":
        return combine([(c, self)])


def _tail_indicators(n: int, m: int) -> ex.Expr | None:
    lo, hi = TAIL_INTERVAL
    fac = None
    for j in range(n + 1, m + 1):
        ind = ex.Call("indicator", (ex.Var(j), ex.Num(lo), ex.Num(hi)))
        fac = ind if fac is None else ex.BinOp("*", fac, ind)
    return fac


def promote(f: TameFunction, m: int) -> TameFunction:
    """Same function viewed at order ``m``: times the indicator of ``[-1/2, 1/2]^(m-n)``."""
    if m < f.order:
        raise ValueError(f"cannot promote order {f.order} down to {m}")
    if m == f.order:
        return f
    n = f.order
    fac = _tail_indicators(n, m)
    if f.expr is not None:
        new_expr, new_eval = ex.BinOp("*", f.expr, fac), None
    else:
        inner = f.evaluator

        def new_eval(X, inner=inner, n=n):
            X = np.atleast_2d(X)
            tail = np.all(np.abs(X[:, n:]) <= 0.5, axis=1)
            return np.where(tail, inner(X[:, :n]), 0.0)
        new_expr = None
    return replace(f, order=m, support=promote_order(f.support, m), expr=new_expr,
                   evaluator=new_eval, analytic_derivatives=(), antiderivative=None)


def combine(terms: Iterable) -> TameFunction:
    """Linear combination ``sum c_i f_i`` of same-order tame functions.

    Supports are merged into their common bounding box so the result stays
    a single box (every term is zero outside its own support, which the
    expression route enforces with indicator factors).
    """
    terms = [(float(c), f) for c, f in terms]
    if not terms:
        raise ValueError("empty combination")
    n = terms[0][1].order
    if any(f.order != n for _, f in terms):
        raise ValueError("all terms must share one order")
    boxes = [f.support.bounding_box() for _, f in terms if not f.support.is_empty]
    if not boxes:
        return replace(terms[0][1], expr=ex.ZERO, evaluator=None, name="0")
    hull = BoxSet.box(*[(min(b[d].lo for b in boxes), max(b[d].hi for b in boxes)) for d in range(n)])
    singular = tuple(sorted({s for _, f in terms for s in f.singular}))
    smooth = max((f.smoothness for _, f in terms), key=SMOOTHNESS.index)
    if all(f.expr is not None for _, f in terms):
        total = None
        for c, f in terms:
            t = f.expr if f.support == hull else _clip_expr(f)
            t = ex.BinOp("*", ex.Num(c), t) if c != 1.0 else t
            total = t if total is None else ex.BinOp("+", total, t)
        if len(terms) == 1 and terms[0][1].support == hull:
            c, f = terms[0]
            return replace(f, expr=total, name=f"{c:g}*{f.name}" if c != 1.0 else f.name,
                           sup_norm=None if f.sup_norm is None else abs(c) * f.sup_norm,
                           analytic_derivatives=(),
                           antiderivative=None if f.antiderivative is None
                           else ex.BinOp("*", ex.Num(c), f.antiderivative))
        return TameFunction(n, hull, expr=total, smoothness=smooth, singular=singular,
                            name="+".join(f"{c:g}*{f.name}" for c, f in terms),
                            tol_floor=max(f.tol_floor for _, f in terms),
                            lq_infinite=frozenset().union(*[f.lq_infinite for _, f in terms]))

    def evaluator(X):
        X = np.atleast_2d(X)
        out = np.zeros(X.shape[0])
        for c, f in terms:
            inside = f.support.contains(X)
            if inside.any():
                out[inside] += c * f.raw(X[inside])
        return out

    return TameFunction(n, hull, evaluator=evaluator, smoothness=smooth, singular=singular,
                        name="+".join(f"{c:g}*{f.name}" for c, f in terms),
                        approximate=any(f.approximate for _, f in terms),
                        tol_floor=max(f.tol_floor for _, f in terms))


def _clip_expr(f: TameFunction) -> ex.Expr:
    """``f.expr`` times indicators of its (single-box) support."""
    if len(f.support.boxes) != 1:
        raise ValueError("expression clipping needs a single-box support")
    out = f.expr
    for d, iv in enumerate(f.support.boxes[0], start=1):
        ind = ex.Call("indicator", (ex.Var(d), ex.Num(iv.lo), ex.Num(iv.hi)))
        out = ex.BinOp("*", out, ind)
    return out


def _fd_evaluator(fn: Callable, dim: int, h: float) -> Callable:
    def d(X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Xp, Xm = X.copy(), X.copy()
        Xp[:, dim - 1] += h
        Xm[:, dim - 1] -= h
        return (fn(Xp) - fn(Xm)) / (2.0 * h)
    return d


def derivative(f: TameFunction, alpha: MultiIndex, *, h: float = FD_STEP) -> TameFunction:
    """``D^alpha f`` on the support base.

    Uses a declared analytic derivative when present, else symbolic
    differentiation of the expression, else nested central differences
    with step ``h`` (result flagged ``approximate``).  Piecewise and
    pathological functions have no classical derivative on their support
    and raise :class:`SmoothnessError` for ``|alpha| >= 1``.
    """
    if not isinstance(alpha, MultiIndex):
        alpha = MultiIndex(alpha)
    if alpha.size == 0:
        return f
    if alpha.max_dim > f.order:
        raise ValueError(f"multi-index uses x{alpha.max_dim} but order is {f.order}")
    if f.smoothness in ("piecewise", "pathological"):
        raise SmoothnessError(f"{f.name or f.text} is {f.smoothness}; D^{alpha} is not available")
    label = f"D[{alpha}]{f.name}"
    for a, e in f.analytic_derivatives:
        if a == alpha:
            return replace(f, expr=e, evaluator=None, name=label, sup_norm=None,
                           analytic_derivatives=(), antiderivative=None)
    if f.expr is not None:
        e = f.expr
        for d in alpha.steps():
            try:
                e = ex.diff(e, d)
            except ex.NotDifferentiableError as err:
                raise SmoothnessError(str(err)) from err
        return replace(f, expr=e, name=label, sup_norm=None, analytic_derivatives=(),
                       antiderivative=None)
    fn = f.raw
    for d in alpha.steps():
        fn = _fd_evaluator(fn, d, h)
    return replace(f, evaluator=fn, name=label, sup_norm=None, analytic_derivatives=(),
                   antiderivative=None, approximate=True)


@dataclass(frozen=True)
class ScaledDerivative:
    """``D_alpha = prod (1/(2 pi i) d/dx_k)^alpha_k f`` as a real magnitude times a phase.

    ``magnitude`` is ``(2 pi)^-|alpha| D^alpha f`` and ``phase`` is
    ``(-i)^|alpha|``; the value of the scaled derivative is their product.
    """

    magnitude: TameFunction
    phase: complex

    def __call__(self, X) -> np.ndarray:
        return self.phase * self.magnitude(X)


def scaled_derivative(f: TameFunction, alpha: MultiIndex) -> ScaledDerivative:
    if not isinstance(alpha, MultiIndex):
        alpha = MultiIndex(alpha)
    d = derivative(f, alpha)
    k = alpha.size
    phase = (1, -1j, -1, 1j)[k % 4]
    if k == 0:
        return ScaledDerivative(d, complex(phase))
    mag = combine([((2.0 * math.pi) ** -k, d)])
    return ScaledDerivative(mag, complex(phase))


@dataclass(frozen=True)
class FunctionSequence:
    """``m -> f_m`` (``m >= 1``) with a declared convergence mode."""

    generator: Callable
    declared_mode: str = "l1_cauchy"

    def __post_init__(self):
        if self.declared_mode not in ("pointwise_ae", "l1_cauchy"):
            raise ValueError(f"unknown mode {self.declared_mode!r}")

    def __getitem__(self, m: int) -> TameFunction:
        return self.generator(m)


def limit_integral(seq: FunctionSequence, depth: int, tol: float = 1e-10) -> IntegralResult:
    """``lim_m int f_m`` from the first ``depth`` terms.

    Two estimates are tracked: the plain last value ``I_M`` and the
    Richardson value ``M I_M - (M-1) I_{M-1}`` (exact when ``I_m = I - c/m``).
    The one whose last step moved less is returned, with that step plus the
    quadrature error as the error estimate.  Increments that fail to shrink
    mean no Cauchy behaviour within ``depth``.
    """
    if seq.declared_mode != "l1_cauchy":
        raise LimitModeError("only l1_cauchy sequences have a computable limit integral")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    vals, errs, nev = [], [], 0
    prev_order = 0
    for m in range(1, depth + 1):
        f = seq[m]
        if f.order < prev_order:
            raise ValueError("sequence orders must be nondecreasing")
        prev_order = f.order
        r = quad_nd(f, max(tol, f.tol_floor))
        vals.append(r.value)
        errs.append(r.error_estimate)
        nev += r.evaluations
    qerr = max(errs)
    if depth == 1:
        return IntegralResult(vals[0], qerr, "adaptive_quad", nev)
    incs = [abs(vals[i] - vals[i - 1]) for i in range(1, depth)]
    noise = 10 * qerr + 1e-14 * max(abs(v) for v in vals)
    if len(incs) >= 2 and incs[-1] > noise and incs[-1] >= incs[0]:
        raise NonConvergenceError(
            f"increments do not shrink within depth {depth}: {incs[0]:.3g} -> {incs[-1]:.3g}",
            IntegralResult(vals[-1], float("inf"), "adaptive_quad", nev))
    M = depth
    plain_step = incs[-1]
    best, step = vals[-1], plain_step
    if M >= 3:
        rich = [m * vals[m - 1] - (m - 1) * vals[m - 2] for m in (M - 1, M)]
        rich_step = abs(rich[1] - rich[0])
        if rich_step < plain_step:
            best, step = rich[1], rich_step
    return IntegralResult(best, step + qerr, "adaptive_quad", nev)


def lq_norm(f: TameFunction, q: float, tol: float = 1e-9) -> float:
    """``||f||_q`` over the support base (``inf`` when declared divergent)."""
    if q in f.lq_infinite:
        return math.inf
    if math.isinf(q):
        if f.sup_norm is not None:
            return float(f.sup_norm)
        raise ValueError(f"{f.name}: no declared sup norm")
    if f.expr is not None and float(q).is_integer():
        # |prod f_i|^q = prod |f_i|^q keeps separable products separable
        e = None
        for fac in ex.product_factors(f.expr):
            t = fac if q % 2 == 0 else ex.Call("abs", (fac,))
            t = ex.Pow(t, int(q)) if q > 1 else t
            e = t if e is None else ex.BinOp("*", e, t)
        g = replace(f, expr=e)
    else:
        g = TameFunction(f.order, f.support, evaluator=lambda X: np.abs(f.raw(X)) ** q,
                         singular=f.singular)
    r = quad_nd(g, max(tol, f.tol_floor))
    return max(r.value, 0.0) ** (1.0 / q)
