"""Box sets ``A x I_n`` and the measure ``lambda_inf`` restricted to them.

A box set of order ``n`` is a finite union of axis-aligned boxes in R^n
crossed with the fixed tail cube ``I_n = prod_{k>n} [-1/2, 1/2]``.  Since the
tail always has measure one, every quantity reduces to the base in R^n.

Sets are kept in a canonical form: the base is cut along the coarsest grid on
which it is constant, then emitted as disjoint boxes in lexicographic order.
Two ``BoxSet`` objects describing the same set (up to boundaries) therefore
compare equal.  Boundaries are ignored throughout, so intersections of
touching boxes are empty and degenerate boxes are dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

TAIL_INTERVAL = (-0.5, 0.5)


class OrderMismatchError(ValueError):
    """Raised when a binary operation receives box sets of different order."""


class Interval(NamedTuple):
    lo: float
    hi: float

    @property
    def length(self) -> float:
        return self.hi - self.lo


Box = tuple  # tuple[Interval, ...]


def _as_box(box: Iterable, order: int) -> Box:
    ivs = []
    for iv in box:
        lo, hi = float(iv[0]), float(iv[1])
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval endpoints must not be NaN")
        if lo > hi:
            raise ValueError(f"interval [{lo}, {hi}] has lo > hi")
        ivs.append(Interval(lo, hi))
    if len(ivs) != order:
        raise ValueError(f"box {box!r} has {len(ivs)} intervals, expected {order}")
    return tuple(ivs)


def _rasterize(order: int, box_lists: Sequence[Sequence[Box]]):
    """Common grid for several box lists plus one boolean cell mask per list."""
    grids = []
    for axis in range(order):
        pts = {-math.inf, math.inf}
        for boxes in box_lists:
            for b in boxes:
                pts.add(b[axis].lo)
                pts.add(b[axis].hi)
        grids.append(np.array(sorted(pts)))
    shape = tuple(len(g) - 1 for g in grids)
    masks = []
    for boxes in box_lists:
        mask = np.zeros(shape, dtype=bool)
        for b in boxes:
            sl = []
            for axis, iv in enumerate(b):
                g = grids[axis]
                sl.append(slice(int(np.searchsorted(g, iv.lo)), int(np.searchsorted(g, iv.hi))))
            mask[tuple(sl)] = True
        masks.append(mask)
    return grids, masks


def _minimize(grids: list, mask: np.ndarray):
    """Drop grid breakpoints across which the set does not change."""
    grids = list(grids)
    for axis in range(mask.ndim):
        m = np.moveaxis(mask, axis, 0)
        if m.shape[0] == 0:
            continue
        keep = [0]
        for i in range(1, m.shape[0]):
            if not np.array_equal(m[i], m[i - 1]):
                keep.append(i)
        g = grids[axis]
        grids[axis] = np.concatenate([g[keep], g[-1:]])
        mask = np.moveaxis(m[keep], 0, axis)
    return grids, mask


def _emit(grids: list, mask: np.ndarray) -> list:
    grids, mask = _minimize(grids, mask)
    if mask.ndim == 1:
        return [(Interval(float(grids[0][i]), float(grids[0][i + 1])),)
                for i in np.flatnonzero(mask)]
    out = []
    g0 = grids[0]
    for i in range(mask.shape[0]):
        if not mask[i].any():
            continue
        head = Interval(float(g0[i]), float(g0[i + 1]))
        for tail in _emit(grids[1:], mask[i]):
            out.append((head,) + tail)
    return out


def _canonical(order: int, grids, mask) -> tuple:
    if not mask.any():
        return ()
    return tuple(_emit(list(grids), mask))


@dataclass(frozen=True)
class BoxSet:
    """``A x I_n`` with ``A`` a finite union of boxes in R^order.

    ``boxes`` is normalized on construction into disjoint boxes sorted
    lexicographically; equality of ``BoxSet`` values is set equality.
    """

    order: int
    boxes: tuple = ()

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise ValueError("order must be a positive integer")
        object.__setattr__(self, "order", int(self.order))
        raw = [_as_box(b, self.order) for b in self.boxes]
        raw = [b for b in raw if all(iv.hi > iv.lo for iv in b)]
        if raw:
            grids, (mask,) = _rasterize(self.order, [raw])
            canon = _canonical(self.order, grids, mask)
        else:
            canon = ()
        object.__setattr__(self, "boxes", canon)

    @classmethod
    def box(cls, *intervals) -> "BoxSet":
        """Single box from ``(lo, hi)`` pairs, one per dimension."""
        return cls(len(intervals), (tuple(intervals),))

    @classmethod
    def full(cls, order: int) -> "BoxSet":
        return cls(order, (((-math.inf, math.inf),) * order,))

    @classmethod
    def empty(cls, order: int) -> "BoxSet":
        return cls(order, ())

    @property
    def is_empty(self) -> bool:
        return not self.boxes

    @property
    def is_bounded(self) -> bool:
        return all(math.isfinite(iv.lo) and math.isfinite(iv.hi) for b in self.boxes for iv in b)

    def bounding_box(self) -> Box:
        if self.is_empty:
            raise ValueError("empty box set has no bounding box")
        return tuple(
            Interval(min(b[a].lo for b in self.boxes), max(b[a].hi for b in self.boxes))
            for a in range(self.order)
        )

    def contains(self, points) -> np.ndarray:
        """Membership of the base for an ``(N, order)`` array (closed boxes)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.order:
            raise ValueError(f"points have dimension {pts.shape[1]}, expected {self.order}")
        inside = np.zeros(pts.shape[0], dtype=bool)
        for b in self.boxes:
            lo = np.array([iv.lo for iv in b])
            hi = np.array([iv.hi for iv in b])
            inside |= np.all((pts >= lo) & (pts <= hi), axis=1)
        return inside

    def to_dict(self) -> dict:
        def enc(x):
            return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")

        return {"order": self.order,
                "boxes": [[[enc(iv.lo), enc(iv.hi)] for iv in b] for b in self.boxes]}

    def __repr__(self) -> str:
        parts = ["x".join(f"[{iv.lo:g},{iv.hi:g}]" for iv in b) for b in self.boxes]
        return f"BoxSet(order={self.order}, {{{', '.join(parts)}}} x I_{self.order})"


def _check_same_order(a: BoxSet, b: BoxSet) -> None:
    if a.order != b.order:
        raise OrderMismatchError(
            f"box sets have orders {a.order} and {b.order}; promote_order first")


def _binary(a: BoxSet, b: BoxSet, op) -> BoxSet:
    _check_same_order(a, b)
    if not a.boxes and not b.boxes:
        return BoxSet.empty(a.order)
    grids, (ma, mb) = _rasterize(a.order, [a.boxes, b.boxes])
    out = object.__new__(BoxSet)
    object.__setattr__(out, "order", a.order)
    object.__setattr__(out, "boxes", _canonical(a.order, grids, op(ma, mb)))
    return out


def box_union(a: BoxSet, b: BoxSet) -> BoxSet:
    return _binary(a, b, np.logical_or)


def box_intersect(a: BoxSet, b: BoxSet) -> BoxSet:
    return _binary(a, b, np.logical_and)


def box_difference(a: BoxSet, b: BoxSet) -> BoxSet:
    return _binary(a, b, lambda x, y: x & ~y)


def box_complement(a: BoxSet) -> BoxSet:
    """Complement of the base in R^n; unbounded sides carry +-inf."""
    if a.is_empty:
        return BoxSet.full(a.order)
    grids, (m,) = _rasterize(a.order, [a.boxes])
    out = object.__new__(BoxSet)
    object.__setattr__(out, "order", a.order)
    object.__setattr__(out, "boxes", _canonical(a.order, grids, ~m))
    return out


def lambda_inf(a: BoxSet) -> float:
    """Measure of ``A x I_n``: the n-dimensional volume of ``A`` (``inf`` if unbounded)."""
    total = 0.0
    for b in a.boxes:
        vol = 1.0
        for iv in b:
            vol *= iv.hi - iv.lo
        if math.isinf(vol):
            return math.inf
        total += vol
    return total


def translate(a: BoxSet, v) -> BoxSet:
    v = [float(x) for x in np.atleast_1d(v)]
    if len(v) != a.order:
        raise ValueError(f"shift has length {len(v)}, expected {a.order}")
    return BoxSet(a.order, tuple(tuple((iv.lo + s, iv.hi + s) for iv, s in zip(b, v))
                                 for b in a.boxes))


def promote_order(a: BoxSet, m: int) -> BoxSet:
    """Rewrite ``A x I_n`` as ``(A x [-1/2,1/2]^(m-n)) x I_m``; the set is unchanged."""
    if m < a.order:
        raise ValueError(f"cannot promote order {a.order} down to {m}")
    if m == a.order:
        return a
    pad = (TAIL_INTERVAL,) * (m - a.order)
    return BoxSet(m, tuple(tuple(b) + pad for b in a.boxes))
