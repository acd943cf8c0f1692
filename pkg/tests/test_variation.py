import math

import numpy as np
import pytest

from sdspace.catalog import get
from sdspace.functions import TameFunction
from sdspace.jones import SDConfig
from sdspace.jones import TestFunctionFamily as Family
from sdspace.measure import BoxSet
from sdspace.variation import (
    bv0_check,
    hk_anti_certificate,
    hk_in_sd_check,
    sphere_maxima,
    sup_test_variation,
    vitali_variation,
)


def test_variation_of_simple_functions():
    assert vitali_variation(get("x")).value == pytest.approx(1.0, abs=1e-12)
    assert vitali_variation(get("sin_pi")).value == pytest.approx(2.0, abs=1e-10)
    f = TameFunction.from_text("x1*x2", 2, [(0, 1), (0, 2)])
    assert vitali_variation(f).value == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("n,expected", [(1, 2.0), (2, 4.0), (3, 8.0)])
def test_test_function_variation(n, expected):
    # each bump factor rises 0 -> 1 -> 0, so its derivative has total variation 2
    fam = Family(n)
    for k in (1, 2, 7):
        assert vitali_variation(fam[k], tol=1e-10).value == pytest.approx(expected, abs=1e-8)
    assert sup_test_variation(n, 5) == pytest.approx(expected, abs=1e-8)


def test_hk_anti_variation_diverges():
    f = TameFunction.from_text("hk_anti(x1)", 1, [(0, 1)], singular=[(1, 0.0)])
    r = vitali_variation(f)
    assert r.divergent and math.isinf(r.value)
    sums = r.partial_sums
    assert all(b > a for a, b in zip(sums[:-1], sums[1:]))
    # each partial sum on [eps_j, 1] dominates the closed-form peak-to-peak bound
    for j, s in enumerate(sums):
        eps = 2.0 ** -(j + 1)
        assert s >= hk_anti_certificate(eps) - 1e-9


def test_certificate_grows_logarithmically():
    vals = [hk_anti_certificate(2.0 ** -j) for j in range(2, 12)]
    assert all(b > a for a, b in zip(vals[:-1], vals[1:]))
    # increments approach (2/pi) log(4) per halving of eps
    assert vals[-1] - vals[-2] == pytest.approx(2 / math.pi * math.log(4), rel=0.01)
    assert hk_anti_certificate(1.0) == 0.0


def test_inv_sqrt_variation_diverges():
    assert vitali_variation(get("inv_sqrt")).divergent


def test_variation_needs_derivative():
    from sdspace.functions import SmoothnessError
    with pytest.raises(SmoothnessError):
        vitali_variation(get("tent"))


def test_sphere_maxima():
    f = TameFunction.from_text("exp(-(x1^2+x2^2))", 2, [(-50, 50), (-50, 50)])
    m = sphere_maxima(f, [1.0, 2.0])
    assert m == pytest.approx([math.exp(-1), math.exp(-4)])


def test_bv0():
    assert bv0_check(get("bump")).verdict
    assert bv0_check(Family(3)[1]).verdict
    one = TameFunction(1, BoxSet.box((-math.inf, math.inf)), evaluator=lambda X: np.ones(len(X)),
                       name="one")
    e = bv0_check(one)
    assert not e.verdict and e.lhs["variation"] == 0.0


def test_hk_in_sd_containment():
    e = hk_in_sd_check(get("hk_osc"), SDConfig())
    assert e.verdict
    assert e.rhs["alexiewicz"] == pytest.approx(math.sin(1), abs=1e-5)
    assert e.rhs["sup_variation"] == pytest.approx(2.0, abs=1e-8)
    assert e.note == "non-L1 input"
    with pytest.raises(ValueError):
        hk_in_sd_check(get("bump2"))
