"""Vitali variation, BV_{v,0} membership and the HK-in-SD^2 containment check.

The Vitali variation of an order-``n`` function on a box is
``int |d^n f / dx_1 ... dx_n|``.  Unbounded boxes and singular hyperplanes
are handled by a nested sequence of regions: region ``j`` is the box cut
to ``[-2^j, 2^j]^n`` with a slab of half-width ``eps_j`` (halving each
stage) removed around every singular hyperplane.  Only the increments
between consecutive regions are integrated.

Deciding divergence from finitely many partial sums is a heuristic; the
partial sums are reported so the caller can judge.  For the
antiderivative ``x^2 sin(x^-2)`` of ``hk_osc`` a closed-form lower bound
certifies divergence independently (:func:`hk_anti_certificate`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .functions import MultiIndex, SmoothnessError, TameFunction, _fd_evaluator
from .gauge import alexiewicz_norm
from .jones import SDConfig, TestFunctionFamily, sd_norm_result
from .measure import BoxSet, box_difference, box_intersect
from .quadrature import quad_nd
from .report import ReportEntry

# successive increments of the partial sums may shrink this little and still count as growth;
# log-divergent sums such as int |hk_osc| have increments creeping down to a positive constant
GROWTH_SLACK = 0.02
GROWTH_RUN = 5
DECAY_TOL = 1e-6


@dataclass(frozen=True)
class VariationResult:
    """``value`` is ``inf`` when ``divergent``; ``partial_sums`` are the stage-wise values."""

    value: float
    partial_sums: tuple
    converged: bool
    divergent: bool = False
    error_estimate: float = 0.0

    def to_dict(self) -> dict:
        return {"value": self.value, "partial_sums": list(self.partial_sums),
                "converged": self.converged, "divergent": self.divergent}


def _mixed_partial(f: TameFunction) -> TameFunction:
    """``d^n f / dx_1 ... dx_n`` on the support base, whatever the smoothness tag says."""
    alpha = MultiIndex.dense(*([1] * f.order))
    if f.expr is not None:
        e = f.expr
        try:
            for d in alpha.steps():
                e = ex.diff(e, d)
        except ex.NotDifferentiableError as err:
            raise SmoothnessError(f"{f.name or f.text}: mixed partial unavailable ({err})") from err
        factors = ex.product_factors(e)
        g = ex.Call("abs", (factors[0],))
        for fac in factors[1:]:
            g = ex.BinOp("*", g, ex.Call("abs", (fac,)))
        return TameFunction(f.order, f.support, expr=g, singular=f.singular, name=f"|D{f.name}|")
    fn = f.raw
    for d in alpha.steps():
        fn = _fd_evaluator(fn, d, 1e-4)
    return TameFunction(f.order, f.support, evaluator=lambda X: np.abs(fn(X)),
                        singular=f.singular, name=f"|D{f.name}|", approximate=True)


def _stage_region(region: BoxSet, singular, j: int, scale: float) -> BoxSet:
    n = region.order
    if region.is_bounded:
        cut = region
    else:
        R = 2.0 ** j
        cut = box_intersect(region, BoxSet.box(*[(-R, R)] * n))
    if singular:
        eps = scale * 2.0 ** -(j + 1)
        for var, s in singular:
            slab = [(-math.inf, math.inf)] * n
            slab[var - 1] = (s - eps, s + eps)
            cut = box_difference(cut, BoxSet.box(*slab))
    return cut


def _integrate_abs(g: TameFunction, piece: BoxSet, tol: float) -> tuple:
    if piece.is_empty:
        return 0.0, 0.0
    h = TameFunction(g.order, piece, expr=g.expr, evaluator=g.evaluator, singular=())
    r = quad_nd(h, tol)
    return r.value, r.error_estimate


def vitali_variation(f: TameFunction, box: BoxSet | None = None, *, tol: float = 1e-9,
                     max_stages: int = 12) -> VariationResult:
    """``int |d^n f / dx_1..dx_n|`` over ``box`` (default: the support of ``f``).

    A bounded box without singular hyperplanes takes a single stage.
    Otherwise stages continue until the increments fall below ``tol``
    (converged), or for ``GROWTH_RUN`` consecutive stages fail to shrink by
    more than ``GROWTH_SLACK`` (divergent, ``value = inf``), or
    ``max_stages`` is reached (neither; ``value`` is the last partial sum,
    a lower bound).
    """
    region = f.support if box is None else box_intersect(box, f.support)
    g = _mixed_partial(f)
    if region.is_empty:
        return VariationResult(0.0, (0.0,), True)
    lo_hi = region.bounding_box()
    singular = [(v, s) for v, s in f.singular if lo_hi[v - 1][0] <= s <= lo_hi[v - 1][1]]
    if region.is_bounded and not singular:
        v, e = _integrate_abs(g, region, tol)
        return VariationResult(v, (v,), True, error_estimate=e)
    widths = [hi - lo for lo, hi in lo_hi if math.isfinite(hi - lo)]
    scale = min(widths) if widths else 1.0
    prev = BoxSet.empty(region.order)
    total = err = 0.0
    sums, incs = [], []
    for j in range(max_stages):
        cur = _stage_region(region, singular, j, scale)
        inc = ie = 0.0
        for b in box_difference(cur, prev).boxes:
            piece = BoxSet.box(*[(iv.lo, iv.hi) for iv in b])
            v, e = _integrate_abs(g, piece, tol)
            inc += v
            ie += e
        prev = cur
        total += inc
        err += ie
        sums.append(total)
        incs.append(inc)
        if j >= 1 and inc <= tol:
            return VariationResult(total, tuple(sums), True, error_estimate=err)
        if len(incs) > GROWTH_RUN:
            recent = incs[-GROWTH_RUN - 1:]
            if all(b >= (1 - GROWTH_SLACK) * a > 0 for a, b in zip(recent[:-1], recent[1:])):
                return VariationResult(math.inf, tuple(sums), False, divergent=True,
                                       error_estimate=err)
    return VariationResult(total, tuple(sums), False, error_estimate=err)


def hk_anti_certificate(eps: float) -> float:
    """Closed-form lower bound for the variation of ``x^2 sin(x^-2)`` on ``[eps, 1]``.

    With ``u = x^-2`` the function has ``|F| = 1/u`` at ``u = (k + 1/2) pi``
    and a zero at ``u = (k + 1) pi`` between consecutive such peaks, so the
    path peak, zero, peak contributes at least ``|F(peak_k)| + |F(peak_k+1)|``.
    The bound grows like ``(2/pi) log(1/eps^2)``, which certifies divergence
    as ``eps -> 0``.
    """
    kmax = math.floor(eps ** -2 / math.pi - 0.5)
    if kmax < 2:
        return 0.0
    k = np.arange(1, kmax)
    return float(np.sum(1.0 / ((k + 0.5) * math.pi) + 1.0 / ((k + 1.5) * math.pi)))


def _directions(n: int, count: int = 64) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]])
    rng = np.random.default_rng(0)
    d = rng.standard_normal((count, n))
    axes = np.vstack([np.eye(n), -np.eye(n)])
    d = np.vstack([axes, d])
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def sphere_maxima(f: TameFunction, radii) -> list:
    """``max |f|`` over deterministic samples of each sphere ``|x| = r``."""
    dirs = _directions(f.order)
    out = []
    for r in radii:
        X = r * dirs
        keep = np.ones(len(X), dtype=bool)
        for var, s in f.singular:
            keep &= X[:, var - 1] != s
        out.append(float(np.max(np.abs(f(X[keep])))) if keep.any() else 0.0)
    return out


def bv0_check(f: TameFunction, box: BoxSet | None = None, decay_radii=None) -> ReportEntry:
    """Finite Vitali variation and decay of ``f`` at infinity (``BV_{v,0}``).

    Decay means the sampled sphere maxima are nonincreasing in the radius
    and end below ``DECAY_TOL``.
    """
    radii = list(decay_radii) if decay_radii is not None else [2.0 ** j for j in range(1, 11)]
    try:
        var = vitali_variation(f, box)
        finite = var.converged and math.isfinite(var.value)
        vval = var.value
    except SmoothnessError:
        finite, vval = False, math.nan
    maxima = sphere_maxima(f, radii)
    decays = all(b <= a for a, b in zip(maxima[:-1], maxima[1:])) and maxima[-1] < DECAY_TOL
    ok = finite and decays
    return ReportEntry("bv0", {"f": f.name or f.text}, {"variation": vval, "sphere_max": maxima[-1]},
                       DECAY_TOL, DECAY_TOL - maxima[-1], bool(ok),
                       "" if finite else "variation not finite")


def sup_test_variation(order: int, K: int, tol: float = 1e-10) -> float:
    """``max_{k<=K} V(E_k)``."""
    fam = TestFunctionFamily(order)
    return max(vitali_variation(fam[k], tol=tol).value for k in range(1, K + 1))


def hk_in_sd_check(f: TameFunction, cfg: SDConfig = SDConfig(), *, hk_tol: float = 1e-5) -> ReportEntry:
    """``||f||_SD2^2 <= ||f||_A^2 (sup_k V(E_k))^2`` with ``||.||_A`` the Alexiewicz norm.

    ``hk_tol`` bounds the error of the Alexiewicz sup (from below, so the
    slack allowance is ``2 ||f||_A hk_tol (sup V)^2`` plus the quadrature
    error of the SD side).
    """
    if f.order != 1:
        raise ValueError("the containment check is one-dimensional")
    cfg2 = cfg.with_(p=2.0, m=0)
    nr = sd_norm_result(f, cfg2)
    lhs = nr.value ** 2
    (a, b), = f.support.bounding_box()
    tol = max(hk_tol, f.tol_floor)
    A = alexiewicz_norm(lambda t: f.raw(np.asarray(t, dtype=float).reshape(-1, 1)), a, b, [s for _, s in f.singular], tol,
                        breakpoints=sorted(ex.breakpoints(f.expr).get(1, ())) if f.expr is not None else ())
    V = sup_test_variation(1, cfg.K)
    rhs = A * A * V * V
    allowance = 2 * (A + tol) * tol * V * V + 10 * cfg.quad_tol
    slack = rhs - lhs
    return ReportEntry("hk_sd", {"f": f.name, "K": cfg.K},
                       lhs, {"alexiewicz": A, "sup_variation": V, "bound": rhs}, slack,
                       bool(math.isfinite(lhs) and slack >= -allowance),
                       "non-L1 input" if 1.0 in f.lq_infinite else "")


__all__ = ["VariationResult", "vitali_variation", "hk_anti_certificate", "sphere_maxima",
           "bv0_check", "sup_test_variation", "hk_in_sd_check"]
