"""Adaptive quadrature: vectorized 1-D Gauss-Kronrod, improper limits, and ``quad_nd``.

The 1-D engine (:func:`gk_many`) refines all panels of all requested
integrals in one numpy batch per level, which keeps strongly oscillatory
integrands such as ``hk_osc`` near the origin affordable.  Endpoint
singularities are handled by Hake's theorem: the integral over ``[s, r]`` is
the limit of integrals over ``[s + eps, r]`` as ``eps -> 0``, which is exactly
how non-absolutely integrable functions are integrated in the HK sense.

``quad_nd`` integrates a tame function over its bounded support.  It splits
sums, pulls out constants and integrates products of factors in disjoint
variables separately, so tensor-product integrands (test bumps, promoted
tails) reduce to 1-D work.  Genuinely coupled groups of two or more variables
go to :func:`scipy.integrate.cubature`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy import integrate as _sci

from . import expr as ex

# 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
_XGK = np.array([
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0,
])
_WGK = np.array([
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077715262005195, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(21)
GAUSS_WEIGHTS[1:10:2] = _WG
GAUSS_WEIGHTS[11:20:2] = _WG[::-1]

_EPS = np.finfo(float).eps


class NonConvergenceError(RuntimeError):
    """Numeric procedure gave up; ``partial`` holds the best estimate so far."""

    def __init__(self, message: str, partial: "IntegralResult | None" = None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error_estimate: float
    method: str
    evaluations: int = 0

    def __post_init__(self):
        if not self.error_estimate >= 0:
            raise ValueError("error_estimate must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)


def _checked(fn, x: np.ndarray) -> np.ndarray:
    y = np.asarray(fn(x), dtype=float)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape)
    if not np.all(np.isfinite(y)):
        bad = x[~np.isfinite(y)][0]
        raise ValueError(f"integrand is not finite at x={bad!r}")
    return y


def gk_many(fn, lo, hi, tol, *, rel_tol: float = 0.0, max_panels: int = 4_000_000,
            min_width: float = 0.0):
    """Adaptive G10/K21 quadrature of ``fn`` over many intervals at once.

    ``fn`` maps a 1-D array of abscissae to values.  Returns ``(values,
    errors, evaluations)``; each integral ``i`` aims at
    ``errors[i] <= max(tol, rel_tol * |values[i]|)``.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    n = lo.size
    tol = np.broadcast_to(np.asarray(tol, dtype=float), (n,)).copy()
    total_w = np.abs(hi - lo)
    vals = np.zeros(n)
    errs = np.zeros(n)
    nevals = 0

    owner = np.arange(n)
    a, b = lo.copy(), hi.copy()
    keep = a != b
    owner, a, b = owner[keep], a[keep], b[keep]
    while owner.size:
        if owner.size > max_panels:
            partial_v = vals.copy()
            raise NonConvergenceError(
                f"panel budget of {max_panels} exceeded",
                IntegralResult(float(partial_v.sum()), float(errs.sum()), "adaptive_quad", nevals))
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        x = mid[:, None] + half[:, None] * KRONROD_NODES[None, :]
        y = _checked(fn, x.ravel()).reshape(x.shape)
        nevals += y.size
        k = (y @ KRONROD_WEIGHTS) * half
        g = (y @ GAUSS_WEIGHTS) * half
        mean = k / np.where(half != 0, 2 * half, 1.0)
        resasc = (np.abs(y - mean[:, None]) @ KRONROD_WEIGHTS) * np.abs(half)
        resabs = (np.abs(y) @ KRONROD_WEIGHTS) * np.abs(half)
        raw = np.abs(k - g)
        with np.errstate(divide="ignore", invalid="ignore"):
            scaled = np.where(resasc > 0,
                              resasc * np.minimum(1.0, (200.0 * raw / np.where(resasc > 0, resasc, 1.0)) ** 1.5),
                              raw)
        floor = 50 * _EPS * resabs
        err = np.maximum(scaled, floor)

        # Local budget proportional to panel width.
        w = np.abs(b - a)
        frac = w / np.where(total_w[owner] > 0, total_w[owner], 1.0)
        tol_loc = np.maximum(tol[owner], rel_tol * np.abs(vals[owner] + k)) * frac
        # panels already at rounding level gain nothing from bisection; their
        # floor-sized error is kept in the estimate
        done = (err <= tol_loc) | (scaled <= floor) | (w <= min_width) | (w <= 8 * _EPS * np.maximum(np.abs(a), np.abs(b)))

        # Integrals whose whole remaining error already fits the budget finish now.
        pend_err = np.bincount(owner, weights=err, minlength=n)
        pend_val = np.bincount(owner, weights=k, minlength=n)
        budget = np.maximum(tol, rel_tol * np.abs(vals + pend_val))
        finished = (errs + pend_err) <= budget
        done |= finished[owner]

        vals += np.bincount(owner[done], weights=k[done], minlength=n)
        errs += np.bincount(owner[done], weights=err[done], minlength=n)
        rest = ~done
        owner, a, b, mid = owner[rest], a[rest], b[rest], mid[rest]
        owner = np.repeat(owner, 2)
        a, b = np.stack([a, mid], 1).ravel(), np.stack([mid, b], 1).ravel()
    return vals, errs, nevals


def _segments(a: float, b: float, pts) -> list:
    inner = sorted({float(p) for p in pts if a < p < b})
    edges = [a] + inner + [b]
    return [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]


def gk_adaptive(fn, a: float, b: float, tol: float = 1e-10, breakpoints=(), *,
                rel_tol: float = 0.0, initial_panels: int = 1) -> IntegralResult:
    """Adaptive Gauss-Kronrod on ``[a, b]``, pre-split at ``breakpoints``."""
    if a == b:
        return IntegralResult(0.0, 0.0, "adaptive_quad", 0)
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0
    segs = _segments(a, b, breakpoints)
    if initial_panels > 1:
        segs = [(u + (v - u) * i / initial_panels, u + (v - u) * (i + 1) / initial_panels)
                for u, v in segs for i in range(initial_panels)]
    lo = np.array([s[0] for s in segs])
    hi = np.array([s[1] for s in segs])
    tols = tol * (hi - lo) / (b - a)
    vals, errs, nev = gk_many(fn, lo, hi, tols, rel_tol=rel_tol)
    return IntegralResult(sign * float(np.sum(vals)), float(np.sum(errs)), "adaptive_quad", nev)


def _tail_bound(incs: list, window: int | None = None):
    """Bound on the sum of future increments from the upper envelope of past ones.

    Fits ``log max(|d_i|, |d_{i-1}|)`` linearly over the last ``window``
    rounds, shifts the line up until it dominates every point, and sums the
    geometric continuation.  Returns ``None`` while the envelope is not
    shrinking by at least 5% per round.
    """
    window = window or WINDOW
    m = [max(incs[i], incs[i - 1]) for i in range(1, len(incs))][-window:]
    if len(m) < window:
        return None
    if max(m) == 0.0:
        return 0.0
    y = np.log(np.maximum(m, 1e-300))
    x = np.arange(window, dtype=float)
    slope = float(np.polyfit(x, y, 1)[0])
    rho = math.exp(slope)
    if rho >= 0.95:
        return None
    top = float(np.max(y - slope * x))
    env = math.exp(top + slope * x[-1])
    return SAFETY * env * rho / (1.0 - rho)


def _aitken_tail(signed: list):
    """Tail of a same-sign geometric run of increments, with an error bound."""
    if len(signed) < 4:
        return None
    d = signed[-4:]
    if not (all(v > 0 for v in d) or all(v < 0 for v in d)):
        return None
    r = [d[i] / d[i - 1] for i in range(1, 4)]
    if not all(0.0 < q < 0.95 for q in r):
        return None
    spread = max(r) - min(r)
    if spread > 0.02 * r[-1]:
        return None
    q = r[-1]
    corr = d[-1] * q / (1.0 - q)
    err = abs(d[-1]) * spread / (1.0 - max(r)) ** 2 + 1e-9 * abs(corr)
    return corr, err


# halving schedule and six-round envelope window; finer ratios were tried and
# under-reported errors on log x and x^2 sin(x^-2)-type tails
RATIO = 0.5
WINDOW = 6
SAFETY = 1.0


def improper_from(fn, s: float, r: float, tol: float, breakpoints=(), *,
                  max_rounds: int = 60) -> IntegralResult:
    """``lim_{eps->0} int_{s+eps}^{r} fn`` (integral oriented from ``s`` to ``r``).

    The distance to ``s`` shrinks by ``RATIO`` every round and each round adds the
    integral over the newly exposed piece.  The remaining tail is bounded by
    the shrinking envelope of the pieces (:func:`_tail_bound`), or summed in
    closed form when they form a geometric run of one sign.  Raises
    :class:`NonConvergenceError` if the pieces stop shrinking.
    """
    L = r - s
    if L == 0:
        return IntegralResult(0.0, 0.0, "improper_limit", 0)
    piece_tol = tol / 16.0
    total = 0.0
    err_sum = 0.0
    nev = 0
    signed: list = []
    eps_prev = L
    for j in range(1, max_rounds + 1):
        eps = L * RATIO ** j
        u, v = s + eps, s + eps_prev
        if u == s or abs(eps) <= 4 * _EPS * abs(s):
            break
        res = gk_adaptive(fn, u, v, piece_tol, breakpoints)
        total += res.value
        err_sum += res.error_estimate
        nev += res.evaluations
        signed.append(res.value)
        eps_prev = eps
        ait = _aitken_tail(signed)
        if ait is not None and ait[1] + err_sum <= tol:
            return IntegralResult(total + ait[0], ait[1] + err_sum, "improper_limit", nev)
        tail = _tail_bound([abs(v) for v in signed])
        if tail is not None and tail + err_sum <= tol:
            return IntegralResult(total, tail + err_sum, "improper_limit", nev)
    raise NonConvergenceError(
        f"improper limit at {s} did not settle within {max_rounds} rounds",
        IntegralResult(total, float("inf"), "improper_limit", nev))


def integrate_1d(fn, a: float, b: float, tol: float = 1e-10, singular=(), breakpoints=()) -> IntegralResult:
    """Integral over ``[a, b]`` with improper limits at points in ``singular``."""
    if a == b:
        return IntegralResult(0.0, 0.0, "adaptive_quad", 0)
    if a > b:
        r = integrate_1d(fn, b, a, tol, singular, breakpoints)
        return IntegralResult(-r.value, r.error_estimate, r.method, r.evaluations)
    sing = sorted({float(p) for p in singular if a <= p <= b})
    if not sing:
        return gk_adaptive(fn, a, b, tol, breakpoints)
    cuts = sorted(set(sing) | {a, b})
    pieces = []
    for u, v in zip(cuts[:-1], cuts[1:]):
        su, sv = u in sing, v in sing
        if su and sv:
            m = 0.5 * (u + v)
            pieces += [("imp", u, m), ("imp", v, m)]
        elif su:
            pieces.append(("imp", u, v))
        elif sv:
            pieces.append(("imp", v, u))
        else:
            pieces.append(("reg", u, v))
    ptol = tol / len(pieces)
    val = err = 0.0
    nev = 0
    for kind, p, q in pieces:
        if kind == "reg":
            r = gk_adaptive(fn, p, q, ptol, breakpoints)
            val += r.value
        else:
            r = improper_from(fn, p, q, ptol, breakpoints)
            val += r.value if q > p else -r.value
        err += r.error_estimate
        nev += r.evaluations
    return IntegralResult(val, err, "improper_limit", nev)


# ---------------------------------------------------------------- n-dimensional

def _expr_fn(e, var_order):
    """Callable on ``(N, len(var_order))`` arrays evaluating ``e`` in the listed variables."""
    mapping = {v: i for i, v in enumerate(var_order)}

    def rename(node):
        if isinstance(node, ex.Var):
            return ex.Var(mapping[node.index] + 1)
        if isinstance(node, ex.Neg):
            return ex.Neg(rename(node.arg))
        if isinstance(node, ex.BinOp):
            return ex.BinOp(node.op, rename(node.left), rename(node.right))
        if isinstance(node, ex.Pow):
            return ex.Pow(rename(node.base), node.exponent)
        if isinstance(node, ex.Call):
            return ex.Call(node.name, tuple(rename(a) for a in node.args))
        return node

    local = rename(e)
    return lambda X: ex.evaluate(local, X)


def _group_factors(factors):
    """Split factors into a constant and groups with pairwise disjoint variable sets."""
    const = 1.0
    groups: list = []  # [vars(set), [factors]]
    for fac in factors:
        vs = ex.variables(fac)
        if not vs:
            const *= ex.const_value(fac)
            continue
        merged = [set(vs), [fac]]
        rest = []
        for g in groups:
            if g[0] & merged[0]:
                merged[0] |= g[0]
                merged[1] += g[1]
            else:
                rest.append(g)
        groups = rest + [merged]
    groups.sort(key=lambda g: min(g[0]))
    return const, groups


def _product(facs):
    out = facs[0]
    for f in facs[1:]:
        out = ex.BinOp("*", out, f)
    return out


def _integrate_group(e, box, dims, tol, singular):
    dims = sorted(dims)
    if len(dims) == 1:
        d = dims[0]
        lo, hi = box[d - 1]
        fn1 = _expr_fn(e, [d])
        bps = ex.breakpoints(e).get(d, set())
        return integrate_1d(lambda x: fn1(x[:, None]), lo, hi, tol,
                            singular.get(d, ()), bps)
    return _cubature(_expr_fn(e, dims), [box[d - 1] for d in dims], tol,
                     {i: ex.breakpoints(e).get(d, set()) for i, d in enumerate(dims)})


def _cubature(fn, ranges, tol, bps=None) -> IntegralResult:
    """scipy cubature over the box, pre-split on a grid of breakpoints."""
    ndim = len(ranges)
    axes = []
    for i, (lo, hi) in enumerate(ranges):
        pts = sorted({lo, hi} | {p for p in (bps or {}).get(i, ()) if lo < p < hi})
        axes.append(list(zip(pts[:-1], pts[1:])))
    cells = [[]]
    for ax in axes:
        cells = [c + [seg] for c in cells for seg in ax]
    rule = "gk21" if ndim <= 3 else "genz-malik"
    val = err = 0.0
    nev = 0
    for cell in cells:
        a = np.array([s[0] for s in cell])
        b = np.array([s[1] for s in cell])
        if np.any(a == b):
            continue
        counter = {"n": 0}

        def f(X):
            counter["n"] += X.shape[0]
            return fn(X)

        res = _sci.cubature(f, a, b, rule=rule, atol=tol / len(cells), rtol=0.0,
                            max_subdivisions=20000)
        if res.status != "converged":
            raise NonConvergenceError(
                "cubature subdivision budget exceeded",
                IntegralResult(val + float(res.estimate), float("inf"), "adaptive_quad", nev))
        val += float(res.estimate)
        err += float(res.error)
        nev += counter["n"]
    return IntegralResult(val, err, "adaptive_quad", nev)


def _integrate_expr(e, box, tol, singular) -> IntegralResult:
    order = len(box)
    if isinstance(e, ex.BinOp) and e.op in "+-":
        r1 = _integrate_expr(e.left, box, tol / 2, singular)
        r2 = _integrate_expr(e.right, box, tol / 2, singular)
        v = r1.value + r2.value if e.op == "+" else r1.value - r2.value
        return IntegralResult(v, r1.error_estimate + r2.error_estimate, "adaptive_quad",
                              r1.evaluations + r2.evaluations)
    const, groups = _group_factors(ex.product_factors(e))
    used = set().union(*[g[0] for g in groups]) if groups else set()
    width = 1.0
    for d in range(1, order + 1):
        if d not in used:
            width *= box[d - 1][1] - box[d - 1][0]
    const *= width
    if const == 0.0:
        return IntegralResult(0.0, 0.0, "adaptive_quad", 0)
    if not groups:
        return IntegralResult(const, 0.0, "adaptive_quad", 0)
    # regular groups converge fast, so they get a sliver of the budget and
    # the (expensive) groups touching singular hyperplanes get the rest
    hard = [i for i, g in enumerate(groups) if any(d in singular for d in g[0])]
    base_tol = tol / (abs(const) * len(groups))
    results: list = [None] * len(groups)
    scale = abs(const)
    for i, g in enumerate(groups):
        if i not in hard:
            results[i] = _integrate_group(_product(g[1]), box, g[0],
                                          base_tol * (1e-3 if hard else 1.0), singular)
            scale *= abs(results[i].value) + results[i].error_estimate
    for i in hard:
        t = 0.9 * tol / (max(scale, 1e-300) * len(hard)) if len(hard) == 1 else base_tol
        results[i] = _integrate_group(_product(groups[i][1]), box, groups[i][0], t, singular)
    value = const
    for r in results:
        value *= r.value
    # first-order error propagation through the product
    err = 0.0
    for i, r in enumerate(results):
        others = abs(const)
        for j, q in enumerate(results):
            if j != i:
                others *= abs(q.value) + q.error_estimate
        err += others * r.error_estimate
    method = "improper_limit" if any(r.method == "improper_limit" for r in results) else "adaptive_quad"
    return IntegralResult(value, err, method, sum(r.evaluations for r in results))


def quad_nd(f, tol: float = 1e-10, max_order: int = 6) -> IntegralResult:
    """Integral of a tame function over its support base (its ``lambda_inf`` integral).

    ``f`` needs ``order``, ``support`` (bounded ``BoxSet``) and either an
    ``expr`` or an opaque ``evaluator``; ``f.singular`` lists
    ``(variable, value)`` hyperplanes to approach by improper limits.
    """
    if f.order > max_order:
        raise ValueError(f"quad_nd supports order <= {max_order}, got {f.order}")
    if not f.support.is_bounded:
        raise ValueError("quad_nd needs a bounded support")
    singular: dict = {}
    for var, val in getattr(f, "singular", ()):
        singular.setdefault(var, set()).add(val)
    boxes = f.support.boxes
    if not boxes:
        return IntegralResult(0.0, 0.0, "adaptive_quad", 0)
    total = err = 0.0
    nev = 0
    methods = set()
    for box in boxes:
        box = tuple((iv.lo, iv.hi) for iv in box)
        if f.expr is not None:
            r = _integrate_expr(f.expr, box, tol / len(boxes), singular)
        elif f.order == 1:
            r = integrate_1d(lambda x: f.evaluator(x[:, None]), box[0][0], box[0][1],
                             tol / len(boxes), singular.get(1, ()))
        else:
            r = _cubature(f.evaluator, list(box), tol / len(boxes))
        total += r.value
        err += r.error_estimate
        nev += r.evaluations
        methods.add(r.method)
    method = "improper_limit" if "improper_limit" in methods else "adaptive_quad"
    return IntegralResult(total, err, method, nev)
