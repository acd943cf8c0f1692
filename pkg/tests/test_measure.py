import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdspace.measure import (
    BoxSet,
    OrderMismatchError,
    box_complement,
    box_difference,
    box_intersect,
    box_union,
    lambda_inf,
    promote_order,
    translate,
)


def B(*ivs):
    return BoxSet.box(*ivs)


def test_union_disjoint_and_overlap():
    u = box_union(B((0, 1)), B((2, 3)))
    assert [tuple(b[0]) for b in u.boxes] == [(0, 1), (2, 3)]
    assert box_union(B((0, 2)), B((1, 3))) == B((0, 3))
    a = B((0, 1), (2, 5))
    assert box_union(a, a) == a


def test_intersection():
    assert box_intersect(B((0, 2)), B((1, 3))) == B((1, 2))
    assert box_intersect(B((0, 1)), B((2, 3))).is_empty
    a = B((0, 1), (0, 2))
    assert box_intersect(a, a) == a


def test_order_mismatch_is_an_error():
    with pytest.raises(OrderMismatchError):
        box_union(B((0, 1)), B((0, 1), (0, 1)))
    with pytest.raises(OrderMismatchError):
        box_intersect(B((0, 1)), B((0, 1), (0, 1)))


def test_complement():
    c = box_complement(B((0, 1)))
    assert [tuple(b[0]) for b in c.boxes] == [(-math.inf, 0), (1, math.inf)]
    assert box_complement(BoxSet.empty(2)) == BoxSet.full(2)
    a = box_union(B((0, 1), (0, 1)), B((2, 3), (-1, 4)))
    assert box_complement(box_complement(a)) == a


def test_lambda_inf():
    assert lambda_inf(B((0, 1), (0, 2))) == 2
    assert lambda_inf(BoxSet.empty(3)) == 0
    assert lambda_inf(box_complement(B((0, 1)))) == math.inf


def test_translate_and_promote():
    t = translate(B((0, 1)), [3])
    assert t == B((3, 4)) and lambda_inf(t) == 1
    a = B((0, 1), (2, 3))
    assert translate(a, [0, 0]) == a
    with pytest.raises(ValueError):
        translate(a, [1])
    p = promote_order(B((0, 1)), 3)
    assert p == B((0, 1), (-0.5, 0.5), (-0.5, 0.5)) and lambda_inf(p) == 1
    assert promote_order(a, 2) == a
    assert promote_order(promote_order(a, 3), 5) == promote_order(a, 5)
    with pytest.raises(ValueError):
        promote_order(a, 1)


def test_serialization():
    d = B((0, 1)).to_dict()
    assert d["order"] == 1 and d["boxes"] == [[[0.0, 1.0]]]


coord = st.integers(-6, 6).map(lambda v: v / 2)


@st.composite
def boxsets(draw, n):
    boxes = []
    for _ in range(draw(st.integers(1, 3))):
        ivs = []
        for _ in range(n):
            a, b = draw(coord), draw(coord)
            ivs.append((min(a, b), max(a, b)))
        boxes.append(tuple(ivs))
    return BoxSet(n, tuple(boxes))


@st.composite
def pairs(draw):
    n = draw(st.integers(1, 3))
    return draw(boxsets(n)), draw(boxsets(n))


@settings(max_examples=150, deadline=None)
@given(pairs())
def test_algebra_properties(ab):
    a, b = ab
    la, lb = lambda_inf(a), lambda_inf(b)
    assert lambda_inf(box_union(a, b)) + lambda_inf(box_intersect(a, b)) == pytest.approx(la + lb, abs=1e-12)
    assert lambda_inf(box_difference(a, b)) + lambda_inf(box_intersect(a, b)) == pytest.approx(la, abs=1e-12)
    # De Morgan after normalization
    assert box_complement(box_union(a, b)) == box_intersect(box_complement(a), box_complement(b))
    # normalized boxes are pairwise disjoint: their volumes add up to the measure
    assert sum(lambda_inf(BoxSet(a.order, (bx,))) for bx in a.boxes) == pytest.approx(la)


@settings(max_examples=100, deadline=None)
@given(pairs(), st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.integers(0, 3))
def test_invariance(ab, shift, extra):
    a, _ = ab
    assert lambda_inf(translate(a, shift[: a.order])) == pytest.approx(lambda_inf(a), abs=1e-12)
    assert lambda_inf(promote_order(a, a.order + extra)) == lambda_inf(a)


def test_additivity_against_brute_force_area():
    # independent area count on a midpoint grid for two overlapping rectangle families
    a = BoxSet(2, (((0, 1), (0, 1)), ((0.5, 2), (0.25, 0.75))))
    b = B((0.25, 1.5), (0.5, 1.5))
    h = 2.0 / 800
    g = (np.arange(800) + 0.5) * h
    X = np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)
    area = lambda s: s.contains(X).sum() * h * h  # noqa: E731
    brute = area(a) + area(b) - (a.contains(X) & b.contains(X)).sum() * h * h
    assert lambda_inf(box_union(a, b)) == pytest.approx(brute, abs=1e-3)
