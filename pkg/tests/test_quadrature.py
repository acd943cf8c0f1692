import math

import numpy as np
import pytest
from scipy import integrate as si

from sdspace.functions import TameFunction
from sdspace.measure import BoxSet
from sdspace.quadrature import (
    KRONROD_WEIGHTS,
    IntegralResult,
    NonConvergenceError,
    gk_adaptive,
    gk_many,
    improper_from,
    integrate_1d,
    quad_nd,
)


def test_rule_weights():
    assert KRONROD_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-14)


def test_integral_result_validates():
    with pytest.raises(ValueError):
        IntegralResult(1.0, -1.0, "adaptive_quad")


@pytest.mark.parametrize("fn,a,b,exact", [
    (np.sin, 0.0, math.pi, 2.0),
    (np.exp, -1.0, 2.0, math.e ** 2 - math.exp(-1)),
    (lambda x: 1 / (1 + x * x), -50.0, 50.0, 2 * math.atan(50)),
    (lambda x: np.abs(x - 0.3), 0.0, 1.0, 0.29),
])
def test_gk_adaptive(fn, a, b, exact):
    r = gk_adaptive(fn, a, b, 1e-12, breakpoints=[0.3])
    assert r.value == pytest.approx(exact, abs=1e-11)
    assert abs(r.value - exact) <= r.error_estimate + 1e-13


def test_gk_reversed_and_empty():
    assert gk_adaptive(np.sin, math.pi, 0.0, 1e-12).value == pytest.approx(-2.0)
    assert gk_adaptive(np.sin, 1.0, 1.0).value == 0.0


def test_gk_many_batches():
    lo = np.arange(5.0)
    vals, errs, _ = gk_many(np.cos, lo, lo + 1, 1e-12)
    assert np.allclose(vals, np.sin(lo + 1) - np.sin(lo), atol=1e-12)
    assert np.all(errs <= 1e-12)


def test_nonfinite_integrand_raises():
    with pytest.raises(ValueError):
        gk_adaptive(lambda x: np.where(x > 0.5, np.inf, x), 0.0, 1.0)


@pytest.mark.parametrize("fn,exact,tol", [
    (lambda x: 1 / np.sqrt(x), 2.0, 1e-8),
    (np.log, -1.0, 1e-8),
    (lambda x: 2 * x * np.sin(x ** -2) - 2 / x * np.cos(x ** -2), math.sin(1.0), 1e-6),
])
def test_improper_limits(fn, exact, tol):
    r = improper_from(fn, 0.0, 1.0, tol)
    assert r.method == "improper_limit"
    assert abs(r.value - exact) <= 2 * tol


def test_improper_divergent():
    with pytest.raises(NonConvergenceError) as info:
        improper_from(lambda x: 1 / x, 0.0, 1.0, 1e-8, max_rounds=30)
    assert info.value.partial is not None


def test_integrate_1d_two_sided():
    fn = lambda x: 1 / np.sqrt(np.abs(x))  # noqa: E731
    r = integrate_1d(fn, -1.0, 1.0, 1e-9, singular=[0.0])
    assert r.value == pytest.approx(4.0, abs=1e-8)
    r2 = integrate_1d(fn, 1.0, -1.0, 1e-9, singular=[0.0])
    assert r2.value == pytest.approx(-4.0, abs=1e-8)


def test_quad_nd_separable_and_opaque():
    f = TameFunction.from_text("x1*x2^2*exp(x3)", 3, [(0, 1), (0, 2), (-1, 1)])
    assert quad_nd(f, 1e-12).value == pytest.approx(0.5 * 8 / 3 * (math.e - 1 / math.e), rel=1e-11)
    g = TameFunction(2, BoxSet.box((0, 1), (0, 1)), evaluator=lambda X: np.exp(X[:, 0] * X[:, 1]))
    exact = si.dblquad(lambda y, x: math.exp(x * y), 0, 1, 0, 1, epsabs=1e-13)[0]
    assert quad_nd(g, 1e-9).value == pytest.approx(exact, abs=1e-8)


def test_quad_nd_nonseparable_expression():
    f = TameFunction.from_text("sin(x1+x2)", 2, [(0, 1), (0, 1)])
    exact = 2 * math.sin(1) - math.sin(2)
    assert quad_nd(f, 1e-10).value == pytest.approx(exact, abs=1e-9)


def test_quad_nd_rejects_unbounded():
    f = TameFunction(1, BoxSet.box((0, math.inf)), evaluator=lambda X: X[:, 0])
    with pytest.raises(ValueError):
        quad_nd(f)
