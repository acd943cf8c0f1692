"""Built-in function catalog and the catalog file format.

Catalog files hold one definition per line::

    name = <expr> @ order=<n> support=[lo,hi;lo,hi] [singular=x1:0] [sup=1]
           [smoothness=smooth] [anti=<expr>] [not_in=1,2,inf] [tol_floor=1e-6]

Bounds may be any constant expression (``pi``, ``-pi/2``).  Blank lines and
lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import math
import re
from pathlib import Path

from . import expr as ex
from .functions import TameFunction
from .measure import BoxSet

# hk_osc needs ~4x the work for every halving of the tolerance; 1e-6 costs about a second
PATHOLOGICAL_TOL = 1e-6

BUILTIN_TEXT = """\
zero        = 0                            @ order=1 support=[0,1] sup=0 smoothness=smooth_compact anti=0
indicator_01 = indicator(x1,0,1)           @ order=1 support=[0,1] sup=1 smoothness=piecewise anti=x1
x           = x1                           @ order=1 support=[0,1] sup=1 smoothness=piecewise anti=x1^2/2
x_sq        = x1^2                         @ order=1 support=[0,1] sup=1 smoothness=piecewise anti=x1^3/3
cubic       = x1^3 - x1                    @ order=1 support=[-1,1] sup=0.3849001794597505 smoothness=piecewise anti=x1^4/4 - x1^2/2
sin_pi      = sin(x1)                      @ order=1 support=[0,pi] sup=1 smoothness=piecewise anti=-cos(x1)
sin_wide    = sin(x1)                      @ order=1 support=[-8,8] sup=1 smoothness=smooth anti=-cos(x1)
gauss       = exp(-x1^2)                   @ order=1 support=[-8,8] sup=1 smoothness=smooth
tent        = 1 - abs(x1)                  @ order=1 support=[-1,1] sup=1 smoothness=piecewise
bump        = bump(x1,0,1)                 @ order=1 support=[-0.5,0.5] sup=1 smoothness=smooth_compact
bump_shift  = bump(x1,0.25,0.5)            @ order=1 support=[0,0.5] sup=1 smoothness=smooth_compact
inv_sqrt    = 1/sqrt(x1)                   @ order=1 support=[0,1] singular=x1:0 smoothness=pathological anti=2*sqrt(x1) not_in=2,inf
hk_osc      = hk_osc(x1)                   @ order=1 support=[0,1] singular=x1:0 smoothness=pathological anti=hk_anti(x1) not_in=1,2,inf tol_floor=1e-6
bump2       = bump(x1,0,1)*bump(x2,0,1)    @ order=2 support=[-0.5,0.5;-0.5,0.5] sup=1 smoothness=smooth_compact
x1x2        = x1*x2                        @ order=2 support=[0,1;0,1] sup=1 smoothness=piecewise
sin_sum     = sin(x1 + x2)                 @ order=2 support=[0,pi;0,pi] sup=1 smoothness=piecewise
bump3       = bump(x1,0,1)*bump(x2,0,1)*bump(x3,0,1) @ order=3 support=[-0.5,0.5;-0.5,0.5;-0.5,0.5] sup=1 smoothness=smooth_compact
"""

_LINE = re.compile(r"^\s*(?P<name>[A-Za-z_][A-Za-z_0-9]*)\s*=\s*(?P<expr>[^@]+?)\s*@\s*(?P<meta>.*)$")
_KEY = re.compile(r"(?P<key>[a-z_]+)=(?P<val>\[[^\]]*\]|\S+)")


class CatalogError(ValueError):
    pass


def _const(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "+inf"):
        return math.inf
    if t == "-inf":
        return -math.inf
    e = ex.parse_expr(text)
    if not ex.is_constant(e):
        raise CatalogError(f"bound {text!r} is not constant")
    return ex.const_value(e)


def parse_line(line: str, lineno: int = 0) -> TameFunction:
    m = _LINE.match(line)
    if not m:
        raise CatalogError(f"line {lineno}: expected 'name = expr @ order=n support=[...]'")
    meta = {k.group("key"): k.group("val") for k in _KEY.finditer(m.group("meta"))}
    for required in ("order", "support"):
        if required not in meta:
            raise CatalogError(f"line {lineno}: missing {required}=")
    order = int(meta.pop("order"))
    body = meta.pop("support").strip("[]")
    rows = [r for r in body.split(";")]
    if len(rows) != order:
        raise CatalogError(f"line {lineno}: support has {len(rows)} intervals, order is {order}")
    support = BoxSet.box(*[tuple(_const(x) for x in r.split(",")) for r in rows])
    kw: dict = {"name": m.group("name")}
    try:
        kw["expr"] = ex.parse_expr(m.group("expr"), order)
        if "anti" in meta:
            kw["antiderivative"] = ex.parse_expr(meta.pop("anti"), order)
    except ex.ParseError as err:
        raise CatalogError(f"line {lineno}: {err}") from err
    if "singular" in meta:
        pairs = []
        for item in meta.pop("singular").split(";"):
            var, val = item.split(":")
            pairs.append((int(var.strip().lstrip("x")), _const(val)))
        kw["singular"] = tuple(pairs)
    if "sup" in meta:
        kw["sup_norm"] = _const(meta.pop("sup"))
    if "smoothness" in meta:
        kw["smoothness"] = meta.pop("smoothness")
    if "not_in" in meta:
        kw["lq_infinite"] = frozenset(_const(q) for q in meta.pop("not_in").split(","))
    if "tol_floor" in meta:
        kw["tol_floor"] = float(meta.pop("tol_floor"))
    if meta:
        raise CatalogError(f"line {lineno}: unknown keys {sorted(meta)}")
    return TameFunction(order, support, **kw)


def parse_catalog(text: str) -> dict:
    out = {}
    for i, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        f = parse_line(line, i)
        if f.name in out:
            raise CatalogError(f"line {i}: duplicate name {f.name!r}")
        out[f.name] = f
    return out


def load_catalog(path) -> dict:
    return parse_catalog(Path(path).read_text())


_BUILTIN: dict | None = None


def builtin_catalog() -> dict:
    """Name -> TameFunction for the shipped catalog (parsed once)."""
    global _BUILTIN
    if _BUILTIN is None:
        _BUILTIN = parse_catalog(BUILTIN_TEXT)
    return dict(_BUILTIN)


def get(name: str) -> TameFunction:
    cat = builtin_catalog()
    if name not in cat:
        raise KeyError(f"unknown catalog function {name!r}")
    return cat[name]
