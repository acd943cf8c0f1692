"""Verification suites: each returns report entries for one family of checks.

Randomized suites draw from ``numpy.random.default_rng((seed, suite_index))``
so a suite's inputs do not depend on which other suites ran before it.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .catalog import builtin_catalog
from .functions import TameFunction, combine, multi_indices_upto, promote
from .gauge import Gauge, build_delta_fine_partition, is_delta_fine
from .jones import (
    KuelbsSpace,
    SDConfig,
    TestFunctionFamily,
    clarkson_check,
    derivative_pairing,
    duality_map,
    embedding_check,
    functional_vector,
    norm_from_vector,
    sd_infty_bound,
    sd_norm_result,
    weak_strong_demo,
)
from .measure import BoxSet, box_difference, box_intersect, box_union, lambda_inf, promote_order, translate
from .report import ReportEntry
from .variation import bv0_check, hk_in_sd_check, vitali_variation

SUITES = ("embedding", "clarkson", "duality", "pairing", "hk-sd", "measure",
          "kuelbs", "weakstrong", "partition", "tails")


def _catalog(cat: dict | None) -> dict:
    return builtin_catalog() if cat is None else cat


def _nonzero(cat: dict, order: int | None = None, tame_only: bool = False) -> list:
    out = []
    for name in sorted(cat):
        f = cat[name]
        if name == "zero" or (order is not None and f.order != order):
            continue
        if tame_only and f.smoothness == "pathological":
            continue
        out.append(f)
    return out


def _random_combo(rng: np.random.Generator, pool: list) -> TameFunction:
    i, j = rng.choice(len(pool), size=2, replace=False)
    a, b = rng.uniform(-2, 2, size=2)
    f = combine([(round(float(a), 6), pool[i]), (round(float(b), 6), pool[j])])
    return f


def _pair_pool(cat: dict) -> dict:
    by_order: dict = {}
    for f in _nonzero(cat):
        by_order.setdefault(f.order, []).append(f)
    return {n: fs for n, fs in by_order.items() if len(fs) >= 2}


# ---------------------------------------------------------------- suites


def suite_embedding(cfg: SDConfig, rng, cat) -> list:
    out = []
    for name in sorted(cat):
        for q in (1.0, 2.0, math.inf):
            out.append(embedding_check(cat[name], q, cfg))
        for p in (1.0, 2.0, 4.0):
            out.append(sd_infty_bound(cat[name], p, cfg))
    return out


def suite_clarkson(cfg: SDConfig, rng, cat, ps=(2.0, 3.0, 4.0), pairs: int = 50) -> list:
    pool = _pair_pool(cat)
    orders = sorted(pool)
    out = []
    for p in ps:
        for _ in range(pairs):
            n = orders[rng.integers(len(orders))]
            fs = pool[n]
            i, j = rng.choice(len(fs), size=2, replace=False)
            c = round(float(rng.uniform(0.25, 4.0)), 6)
            out.append(clarkson_check(fs[i], fs[j], p, cfg, scale=c))
    return _dedupe(out)


def suite_duality(cfg: SDConfig, rng, cat, ps=(1.5, 2.0, 3.0), count: int = 20) -> list:
    base = _nonzero(cat)
    tame = _nonzero(cat, order=1, tame_only=True)
    gs = list(base)
    while len(gs) < count:
        gs.append(_random_combo(rng, tame))
    gs = gs[:count]
    out = []
    for p in ps:
        c = cfg.with_(p=p, m=0)
        for g in gs:
            norm = sd_norm_result(g, c).value
            lg = duality_map(g, g, c)
            rel = abs(lg - norm ** 2) / max(norm ** 2, 1e-300)
            out.append(ReportEntry("duality.identity", {"g": g.name, "p": p}, lg, norm ** 2,
                                   -rel, rel <= 1e-8))
            partner = gs[int(rng.integers(len(gs)))]
            if partner.order != g.order:
                continue
            lf = duality_map(g, partner, c)
            bound = norm * sd_norm_result(partner, c).value * (1 + 1e-8)
            out.append(ReportEntry("duality.bounded", {"g": g.name, "f": partner.name, "p": p},
                                   abs(lf), bound, bound - abs(lf), abs(lf) <= bound))
    return _dedupe(out)


def suite_pairing(cfg: SDConfig, rng, cat, cubes: int = 10, tol: float = 1e-7) -> list:
    out = []
    for name in sorted(cat):
        f = cat[name]
        if f.smoothness not in ("smooth", "smooth_compact"):
            continue
        fam = TestFunctionFamily(f.order)
        ks = []
        k = 1
        while len(ks) < cubes and k <= 200:
            cube_set = fam.cubes.box(k)
            meets = not box_intersect(cube_set, f.support).is_empty
            inside = box_intersect(cube_set, f.support) == cube_set
            if meets and (f.smoothness == "smooth_compact" or inside):
                ks.append(k)
            k += 1
        for alpha in multi_indices_upto(f.order, 2):
            for k in ks:
                lhs, rhs = derivative_pairing(f, k, alpha)
                d = abs(lhs - rhs)
                out.append(ReportEntry("pairing", {"f": name, "k": k, "alpha": str(alpha)},
                                       lhs, rhs, tol - d, d <= tol))
    return out


def suite_hk_sd(cfg: SDConfig, rng, cat) -> list:
    out = []
    for name in sorted(cat):
        f = cat[name]
        if f.order == 1:
            out.append(hk_in_sd_check(f, cfg))
    for n in (1, 2, 3):
        fam = TestFunctionFamily(n)
        for k in (1, 2, 3, 5, 8, 13, 21, 30):
            v = vitali_variation(fam[k]).value
            out.append(ReportEntry("variation.test_function", {"n": n, "k": k}, v, 2.0 ** n,
                                   -abs(v - 2.0 ** n), abs(v - 2.0 ** n) <= 1e-8))
            if n == 1:
                out.append(bv0_check(fam[k]))
    anti = TameFunction.from_text("hk_anti(x1)", 1, [(0.0, 1.0)], singular=((1, 0.0),),
                                  smoothness="pathological", name="hk_anti")
    r = vitali_variation(anti)
    out.append(ReportEntry("variation.divergent", {"f": "hk_anti"}, r.value, math.inf, 0.0,
                           r.divergent, "partial sums " + ", ".join(f"{s:.6g}" for s in r.partial_sums)))
    return out


def _random_boxset(rng, n: int) -> BoxSet:
    grid = np.round(rng.uniform(-3, 3, size=8), 3)
    boxes = []
    for _ in range(int(rng.integers(1, 4))):
        b = []
        for _ in range(n):
            lo, hi = sorted(rng.choice(grid, size=2, replace=False))
            b.append((float(lo), float(hi)))
        boxes.append(tuple(b))
    return BoxSet(n, tuple(boxes))


def suite_measure(cfg: SDConfig, rng, cat, configs: int = 1000, tol: float = 1e-9) -> list:
    worst = {"additivity": 0.0, "difference": 0.0, "translation": 0.0, "promotion": 0.0}
    for _ in range(configs):
        n = int(rng.integers(1, 4))
        A = _random_boxset(rng, n)
        B = _random_boxset(rng, n)
        lu, li = lambda_inf(box_union(A, B)), lambda_inf(box_intersect(A, B))
        la, lb = lambda_inf(A), lambda_inf(B)
        worst["additivity"] = max(worst["additivity"], abs(lu + li - la - lb))
        worst["difference"] = max(worst["difference"], abs(lambda_inf(box_difference(A, B)) + li - la))
        shift = np.round(rng.uniform(-5, 5, size=n), 3)
        worst["translation"] = max(worst["translation"], abs(lambda_inf(translate(A, shift)) - la))
        m = int(rng.integers(n, 6))
        worst["promotion"] = max(worst["promotion"], abs(lambda_inf(promote_order(A, m)) - la))
    out = [ReportEntry(f"measure.{k}", {"configs": configs}, v, tol, tol - v, v <= tol)
           for k, v in sorted(worst.items())]
    for name in sorted(cat):
        f = cat[name]
        if f.smoothness == "pathological":
            continue
        base = f.integral(1e-11).value
        for m in range(f.order + 1, 6):
            v = promote(f, m).integral(1e-11).value
            d = abs(v - base)
            out.append(ReportEntry("measure.promote_integral", {"f": name, "m": m}, v, base,
                                   1e-8 - d, d <= 1e-8))
    return out


def suite_kuelbs(cfg: SDConfig, rng, cat, vectors: int = 100) -> list:
    space = KuelbsSpace(cfg.K)
    out = []
    for i in range(vectors):
        scale = 10.0 ** rng.uniform(-3, 3)
        u = rng.standard_normal(cfg.K) * scale
        if i % 4 == 1:
            u *= rng.random(cfg.K) < 0.2
        h, b = space.norm_H(u), space.norm_B(u)
        out.append(ReportEntry("kuelbs", {"vector": i}, h, b, b - h, h <= b))
    return out


def suite_weakstrong(cfg: SDConfig, rng, cat) -> list:
    return weak_strong_demo(64, cfg)


def _random_gauge(rng, i: int) -> tuple:
    kind = i % 5
    c = float(10.0 ** rng.uniform(-3, 0))
    s = float(rng.uniform(0, 1))
    if kind == 0:
        return f"constant({c:.4g})", lambda t: c + 0 * t
    if kind == 1:
        fl = float(10.0 ** rng.uniform(-6, -3))
        return f"linear({c:.4g},{s:.4g})", lambda t: np.maximum(c * np.abs(t - s), fl)
    if kind == 2:
        fl = float(10.0 ** rng.uniform(-6, -3))
        return f"quadratic({c:.4g},{s:.4g})", lambda t: np.maximum(c * (t - s) ** 2, fl)
    if kind == 3:
        w = float(rng.uniform(1, 50))
        return f"wave({c:.4g},{w:.4g})", lambda t: c * (1.05 + np.sin(w * t))
    fl = float(10.0 ** rng.uniform(-5, -2))
    return f"halfdist({fl:.4g})", lambda t: np.maximum(0.5 * t, fl)


def suite_partition(cfg: SDConfig, rng, cat, gauges: int = 50) -> list:
    out = []
    for i in range(gauges):
        label, fn = _random_gauge(rng, i)
        g = Gauge(fn)
        p = build_delta_fine_partition(g, 0.0, 1.0)
        ok = is_delta_fine(p, g, 0.0, 1.0)
        out.append(ReportEntry("partition", {"gauge": label, "index": i}, len(p), 0,
                               0.0, ok))
    return out


def suite_tails(cfg: SDConfig, rng, cat, K0: int = 10, K1: int = 30) -> list:
    out = []
    for name in sorted(cat):
        f = cat[name]
        for p in (1.0, 2.0, 3.0):
            short = functional_vector(f, cfg.with_(p=p, K=K0, m=0))
            if short.tail_bound is None:
                continue
            long = functional_vector(f, cfg.with_(p=p, K=K1, m=0))
            lhs = norm_from_vector(short.values, p) ** p + short.tail_bound
            rhs = norm_from_vector(long.values, p) ** p
            out.append(ReportEntry("tails", {"f": name, "p": p, "K0": K0, "K1": K1},
                                   rhs, lhs, lhs - rhs, lhs >= rhs))
    return out


def _dedupe(entries: list) -> list:
    seen = set()
    out = []
    for e in entries:
        key = e.sort_key()
        if key in seen:
            continue
        seen.add(key)
        out.append(e)
    return out


_RUNNERS: dict = {
    "embedding": suite_embedding,
    "clarkson": suite_clarkson,
    "duality": suite_duality,
    "pairing": suite_pairing,
    "hk-sd": suite_hk_sd,
    "measure": suite_measure,
    "kuelbs": suite_kuelbs,
    "weakstrong": suite_weakstrong,
    "partition": suite_partition,
    "tails": suite_tails,
}


def run_suite(name: str, cfg: SDConfig = SDConfig(), seed: int = 0, catalog: dict | None = None,
              p: float | None = None) -> list:
    """Entries of one suite, or of every suite for ``name == "all"``.

    ``p`` restricts the p-dependent suites (clarkson, duality) to that exponent.
    """
    names = SUITES if name == "all" else (name,)
    cat = _catalog(catalog)
    out = []
    for s in names:
        if s not in _RUNNERS:
            raise KeyError(f"unknown suite {s!r}; choose from {', '.join(SUITES)} or all")
        rng = np.random.default_rng((seed, SUITES.index(s)))
        run: Callable = _RUNNERS[s]
        if p is not None and s in ("clarkson", "duality"):
            out.extend(run(cfg, rng, cat, ps=(p,)))
        else:
            out.extend(run(cfg, rng, cat))
    return out
