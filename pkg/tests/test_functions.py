import math

import numpy as np
import pytest

from sdspace import expr as ex
from sdspace.catalog import builtin_catalog, get
from sdspace.functions import (
    FunctionSequence,
    LimitModeError,
    MultiIndex,
    SingularPointError,
    SmoothnessError,
    TameFunction,
    combine,
    derivative,
    limit_integral,
    lq_norm,
    multi_indices_upto,
    promote,
    scaled_derivative,
)
from sdspace.measure import BoxSet
from sdspace.quadrature import NonConvergenceError


def test_multi_index():
    a = MultiIndex({2: 1, 1: 2, 3: 0})
    assert a.entries == ((1, 2), (2, 1)) and a.size == 3 and a.max_dim == 2
    assert a.steps() == [1, 1, 2]
    assert MultiIndex.dense(0, 1) == MultiIndex({2: 1})
    with pytest.raises(ValueError):
        MultiIndex({0: 1})
    assert len(multi_indices_upto(2, 2)) == 6


def test_eval_examples():
    f = get("hk_osc")
    assert f.eval([1.0]) == pytest.approx(2 * math.sin(1) - 2 * math.cos(1))
    with pytest.raises(SingularPointError):
        f.eval([0.0])
    assert get("bump").eval([0.0]) == 1.0
    with pytest.raises(ValueError):
        get("bump").eval([0.0, 1.0])


def test_zero_outside_support():
    rng = np.random.default_rng(11)
    for f in builtin_catalog().values():
        lo_hi = f.support.bounding_box()
        X = rng.uniform(-50, 50, size=(1000, f.order))
        X[:, 0] = np.where(rng.random(1000) < 0.5, lo_hi[0].lo - 1 - np.abs(X[:, 0]),
                           lo_hi[0].hi + 1 + np.abs(X[:, 0]))
        assert np.all(f(X) == 0.0)


def test_promote():
    one = TameFunction.from_text("1", 1, [(0, 1)])
    assert promote(one, 2).integral().value == pytest.approx(1.0, abs=1e-12)
    f = get("sin_pi")
    assert promote(f, 1) is f
    with pytest.raises(ValueError):
        promote(get("bump2"), 1)
    p = promote(f, 3)
    assert p.eval([1.0, 0.2, -0.4]) == pytest.approx(math.sin(1.0))
    assert p.eval([1.0, 0.7, 0.0]) == 0.0


@pytest.mark.parametrize("name", ["x", "cubic", "sin_pi", "gauss", "bump2", "x1x2", "inv_sqrt"])
def test_promote_preserves_integral(name):
    f = get(name)
    base = f.integral(1e-11).value
    for m in range(f.order + 1, 6):
        assert promote(f, m).integral(1e-11).value == pytest.approx(base, abs=1e-8)


def test_promote_opaque_evaluator():
    f = TameFunction(1, BoxSet.box((0, 2)), evaluator=lambda X: X[:, 0] ** 2)
    assert promote(f, 2).integral(1e-10).value == pytest.approx(8 / 3, abs=1e-8)


def test_derivatives():
    d = derivative(get("sin_wide"), MultiIndex({1: 1}))
    assert ex.to_text(d.expr) == "cos(x1)"
    f = get("bump")
    assert derivative(f, MultiIndex()) is f
    for bad in ("indicator_01", "hk_osc", "tent"):
        with pytest.raises(SmoothnessError):
            derivative(get(bad), MultiIndex({1: 1}))


def test_finite_differences_against_analytic():
    f = get("bump")
    opaque = TameFunction(1, f.support, evaluator=f.raw, smoothness="smooth_compact")
    rng = np.random.default_rng(5)
    X = rng.uniform(-0.45, 0.45, size=(100, 1))
    for k in (1, 2):
        exact = derivative(f, MultiIndex({1: k}))
        approx = derivative(opaque, MultiIndex({1: k}))
        assert approx.approximate and not exact.approximate
        tol = 1e-6 if k == 1 else 2e-5
        assert np.max(np.abs(exact(X) - approx(X))) <= tol


def test_derivative_is_linear():
    f, g = get("gauss"), get("sin_wide")
    a, b = 1.7, -0.3
    h = combine([(a, f), (b, g)])
    alpha = MultiIndex({1: 2})
    X = np.random.default_rng(2).uniform(-7, 7, size=(50, 1))
    lhs = derivative(h, alpha)(X)
    rhs = a * derivative(f, alpha)(X) + b * derivative(g, alpha)(X)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10


def test_scaled_derivative():
    f = get("sin_wide")
    s0 = scaled_derivative(f, MultiIndex())
    assert s0.phase == 1 and s0.magnitude is f
    s1 = scaled_derivative(f, MultiIndex({1: 1}))
    assert s1.phase == -1j
    X = np.array([[0.3]])
    assert s1.magnitude(X)[0] == pytest.approx(math.cos(0.3) / (2 * math.pi))
    assert scaled_derivative(f, MultiIndex({1: 2})).phase == -1


def test_limit_integral():
    f = get("sin_pi")
    r = limit_integral(FunctionSequence(lambda m: f), 4)
    assert r.value == pytest.approx(2.0, abs=1e-10)
    seq = FunctionSequence(lambda m: combine([(1 - 1 / m, f)]))
    assert limit_integral(seq, 6).value == pytest.approx(2.0, abs=1e-9)
    # tensor bumps of growing order, each extra factor normalized to integrate to 1
    b1 = get("bump").integral(1e-13).value

    def tensor(m):
        parts = ["bump(x1,0,1)"] + [f"{1 / b1!r}*bump(x{j},0,1)" for j in range(2, m + 1)]
        return TameFunction.from_text("*".join(parts), m, [(-0.5, 0.5)] * m)
    assert limit_integral(FunctionSequence(tensor), 4).value == pytest.approx(b1, abs=1e-9)
    with pytest.raises(LimitModeError):
        limit_integral(FunctionSequence(lambda m: f, "pointwise_ae"), 3)
    grow = FunctionSequence(lambda m: combine([(float(m * m), f)]))
    with pytest.raises(NonConvergenceError):
        limit_integral(grow, 5)


def test_lq_norms():
    assert lq_norm(get("x"), 1) == pytest.approx(0.5)
    assert lq_norm(get("x"), 2) == pytest.approx(1 / math.sqrt(3))
    assert lq_norm(get("sin_pi"), 2) == pytest.approx(math.sqrt(math.pi / 2), abs=1e-12)
    assert lq_norm(get("sin_sum"), 1, 1e-7) == pytest.approx(2 * math.pi, abs=1e-6)
    assert lq_norm(get("hk_osc"), 1) == math.inf
    assert lq_norm(get("inv_sqrt"), 1) == pytest.approx(2.0, abs=1e-8)
    assert lq_norm(get("inv_sqrt"), 2) == math.inf
