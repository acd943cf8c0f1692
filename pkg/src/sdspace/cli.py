"""``sdspace`` command-line driver.

Exit codes: 0 success, 1 usage or parse error, 2 numerical non-convergence,
3 a verification check failed (the report is still written).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import expr as ex
from .catalog import CatalogError, builtin_catalog, load_catalog
from .functions import SmoothnessError, TameFunction
from .gauge import absolute_integrability_probe, hk_integrate
from .jones import SDConfig, sd_norm_result
from .measure import BoxSet
from .quadrature import NonConvergenceError
from .report import Report, ReportEntry
from .verify import SUITES, run_suite

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_FAILED = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _real(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return math.inf
    if t == "-inf":
        return -math.inf
    try:
        e = ex.parse_expr(text)
    except ex.ParseError as err:
        raise argparse.ArgumentTypeError(str(err)) from None
    if not ex.is_constant(e):
        raise argparse.ArgumentTypeError(f"{text!r} is not a constant")
    return ex.const_value(e)


def _points(text: str) -> list:
    return [_real(t) for t in text.split(",") if t.strip()]


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=_real, default=None, help="SD^p exponent (default 2; 'inf' allowed)")
    common.add_argument("--m", type=int, default=0, help="derivative order (default 0)")
    common.add_argument("--K", type=int, default=30, help="truncation depth (default 30)")
    common.add_argument("--tol", type=float, default=None, help="quadrature tolerance")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    common.add_argument("--out", type=Path, default=None, help="write the JSON-lines report here")
    common.add_argument("--catalog", type=Path, default=None, help="extra catalog file")

    ap = argparse.ArgumentParser(prog="sdspace", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"sdspace {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("integrate", parents=[common],
                       help="HK integral of a 1-D expression or catalog function")
    p.add_argument("function", help="catalog name or expression in x1")
    p.add_argument("a", type=_real)
    p.add_argument("b", type=_real)
    p.add_argument("--sing", type=_points, default=None, help="comma-separated singular points")
    p.add_argument("--method", choices=("auto", "gauge"), default="auto")
    p.add_argument("--probe", action="store_true", help="also probe integrability of |f|")

    p = sub.add_parser("sdnorm", parents=[common], help="truncated SD^p norm")
    p.add_argument("function", help="catalog name or expression")
    p.add_argument("--support", default=None, help="box for inline expressions, e.g. '0,1;0,1'")
    p.add_argument("--sing", default=None, help="singular hyperplanes, e.g. 'x1:0'")

    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("suite", choices=SUITES + ("all",))
    return ap


def _catalog(args) -> dict:
    cat = builtin_catalog()
    if args.catalog is not None:
        try:
            cat.update(load_catalog(args.catalog))
        except OSError as err:
            raise UsageError(f"cannot read catalog: {err}") from err
        except CatalogError as err:
            raise UsageError(f"bad catalog: {err}") from err
    return cat


def _config(args, **kw) -> dict:
    d = {"command": args.command, "p": args.p, "m": args.m, "K": args.K, "tol": args.tol,
         "seed": args.seed, "catalog": None if args.catalog is None else str(args.catalog)}
    d.update(kw)
    return d


def _emit(report: Report, out: Path | None) -> None:
    if out is not None:
        out.write_text(report.text())


def _inline(text: str, support: str | None, sing: str | None) -> TameFunction:
    e = ex.parse_expr(text)
    n = max(ex.max_index(e), 1)
    if support is None:
        box = BoxSet.box(*[(-0.5, 0.5)] * n)
    else:
        rows = [r for r in support.split(";")]
        if len(rows) != n:
            raise UsageError(f"--support has {len(rows)} intervals for an order-{n} expression")
        box = BoxSet.box(*[tuple(_real(x) for x in r.split(",")) for r in rows])
    singular = ()
    if sing:
        singular = tuple((int(v.strip().lstrip("x")), _real(x))
                         for v, x in (item.split(":") for item in sing.split(";")))
    return TameFunction(n, box, expr=e, singular=singular, name=text,
                        smoothness="piecewise")


def cmd_integrate(args) -> int:
    cat = _catalog(args)
    if args.function in cat:
        f = cat[args.function]
        if f.order != 1:
            raise UsageError(f"{args.function} has order {f.order}; integrate is one-dimensional")
        sing = [s for _, s in f.singular]
        floor = f.tol_floor
    else:
        f = TameFunction(1, BoxSet.box((-math.inf, math.inf)), expr=ex.parse_expr(args.function, 1),
                         name=args.function)
        sing, floor = [], 0.0
    if args.sing is not None:
        sing = sorted(set(sing) | set(args.sing))
    tol = max(args.tol if args.tol is not None else 1e-6, floor)
    expr = f.expr
    fn = lambda t: ex.evaluate(expr, np.asarray(t, dtype=float).reshape(-1, 1))  # noqa: E731
    bps = sorted(ex.breakpoints(expr).get(1, ()))
    report = Report(_config(args, function=args.function, a=args.a, b=args.b, sing=sing,
                            tol=tol, method=args.method))
    try:
        r = hk_integrate(fn, args.a, args.b, sing, tol, method=args.method, breakpoints=bps)
    except NonConvergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        report.entries.append(ReportEntry("integrate", {"function": args.function}, None,
                                          None, math.nan, False, str(err)))
        _emit(report, args.out)
        return EXIT_NUMERIC
    print(f"{r.value:.10g} ± {r.error_estimate:.2g}  ({r.method}, {r.evaluations} evaluations)")
    report.entries.append(ReportEntry("integrate", {"function": args.function}, r.to_dict(),
                                      tol, tol - r.error_estimate, True))
    if args.probe:
        pr = absolute_integrability_probe(fn, args.a, args.b, sing)
        verdict = "exceed" if pr.exceeded else "stay below"
        print(f"|f| partial sums {verdict} {pr.threshold:g}: "
              + ", ".join(f"{s:.4g}" for s in pr.partial_sums))
        report.entries.append(ReportEntry("abs_probe", {"function": args.function},
                                          list(pr.partial_sums), pr.threshold,
                                          pr.threshold - max(pr.partial_sums), True,
                                          "not absolutely integrable" if pr.exceeded else ""))
    _emit(report, args.out)
    return EXIT_OK


def cmd_sdnorm(args) -> int:
    cat = _catalog(args)
    if args.function in cat:
        f = cat[args.function]
    else:
        try:
            f = _inline(args.function, args.support, args.sing)
        except ex.ParseError as err:
            raise UsageError(f"unknown function {args.function!r} (not in the catalog and not "
                             f"an expression: {err})") from err
    cfg = SDConfig(p=2.0 if args.p is None else args.p, m=args.m, K=args.K,
                   quad_tol=args.tol if args.tol is not None else 1e-9)
    try:
        nr = sd_norm_result(f, cfg)
    except SmoothnessError as err:
        raise UsageError(str(err)) from err
    except NonConvergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    notes = []
    if 1.0 in f.lq_infinite:
        notes.append("non-L1 input")
    if nr.certified:
        cert = f"tail <= {nr.tail_bound:.3g}, norm <= {nr.upper:.10g}"
    else:
        cert = "truncated, uncertified"
    print(f"||{f.name}||_SD^{cfg.p:g} (K={cfg.K}, m={cfg.m}) = {nr.value:.10g}  [{cert}]"
          + (f"  ({'; '.join(notes)})" if notes else ""))
    report = Report(_config(args, function=args.function, p=cfg.p, tol=cfg.quad_tol))
    report.entries.append(ReportEntry("sdnorm", {"function": args.function}, nr.to_dict(),
                                      nr.upper, 0.0 if nr.upper is None else nr.upper - nr.value,
                                      True, "; ".join(notes)))
    _emit(report, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    cat = _catalog(args)
    cfg = SDConfig(K=args.K, m=0, quad_tol=args.tol if args.tol is not None else 1e-9)
    report = Report(_config(args, suite=args.suite, tol=cfg.quad_tol))
    try:
        report.extend(run_suite(args.suite, cfg, args.seed, cat, p=args.p))
    except NonConvergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.out is None:
        sys.stdout.write(report.text())
    else:
        _emit(report, args.out)
        print(f"{args.suite}: {report.passed} passed, {report.failed} failed -> {args.out}")
    return EXIT_OK if report.failed == 0 else EXIT_FAILED


COMMANDS = {"integrate": cmd_integrate, "sdnorm": cmd_sdnorm, "verify": cmd_verify}


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as err:
        return EXIT_OK if err.code == 0 else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ex.ParseError, ValueError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
