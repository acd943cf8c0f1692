import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdspace import expr as ex
from sdspace.catalog import BUILTIN_TEXT, builtin_catalog


def ev(text, *xs, order=None):
    e = ex.parse_expr(text, order)
    return ex.evaluate(e, np.array([xs], dtype=float))[0]


def test_parse_examples():
    e = ex.parse_expr("sin(x1)*indicator(x1,0,pi)", 1)
    assert ex.max_index(e) == 1
    with pytest.raises(ex.VariableIndexError):
        ex.parse_expr("x3", 2)
    e = ex.parse_expr("bump(x1,0,1)*bump(x2,0,1)", 2)
    assert len(ex.product_factors(e)) == 2 and ex.variables(e) == {1, 2}


@pytest.mark.parametrize("text,err", [
    ("x1+", ex.ExprSyntaxError),
    ("foo(x1)", ex.UnknownIdentifierError),
    ("sin(x1,x2)", ex.ParseError),
    ("(x1", ex.ExprSyntaxError),
    ("x0", ex.ParseError),
])
def test_parse_errors(text, err):
    with pytest.raises(err) as info:
        ex.parse_expr(text, 2)
    assert info.value.offset >= 0


def test_error_offset_points_at_problem():
    with pytest.raises(ex.ParseError) as info:
        ex.parse_expr("x1 + $", 1)
    assert info.value.offset == 5


def test_builtin_values():
    assert ev("hk_osc(x1)", 1.0) == pytest.approx(2 * math.sin(1) - 2 * math.cos(1), abs=1e-15)
    assert ev("hk_osc(x1)", 0.0) == 0.0
    assert ev("hk_anti(x1)", 0.0) == 0.0
    assert ev("bump(x1,0,1)", 0.0) == 1.0
    assert ev("bump(x1,0,1)", 0.5) == 0.0
    assert ev("bump(x1,2,0.5)", 2.1) == pytest.approx(math.exp(1 - 1 / (1 - 0.4 ** 2)))
    assert ev("indicator(x1,0,1)", 0.5) == 1.0 and ev("indicator(x1,0,1)", 1.5) == 0.0
    assert ev("2^-1 + x1^2", 3.0) == pytest.approx(9.5)


def test_print_parse_fixpoint_on_catalog():
    for line in BUILTIN_TEXT.splitlines():
        text = line.split("=", 1)[1].split("@")[0].strip()
        e = ex.parse_expr(text)
        t = ex.to_text(e)
        assert ex.parse_expr(t) == e
        assert ex.to_text(ex.parse_expr(t)) == t


def test_diff_symbolic():
    assert ex.to_text(ex.diff(ex.parse_expr("sin(x1)"), 1)) == "cos(x1)"
    assert ex.to_text(ex.diff(ex.parse_expr("hk_anti(x1)"), 1)) == "hk_osc(x1)"
    assert ex.diff(ex.parse_expr("x2^3"), 1) == ex.ZERO
    for bad in ("abs(x1)", "indicator(x1,0,1)", "hk_osc(x1)"):
        with pytest.raises(ex.NotDifferentiableError):
            ex.diff(ex.parse_expr(bad), 1)


def test_bump_derivatives_match_finite_differences():
    t = np.linspace(-0.99, 0.99, 397)
    h = 1e-6
    for j in (1, 2, 3):
        fd = (ex.bump_profile_derivative(t + h, j - 1) - ex.bump_profile_derivative(t - h, j - 1)) / (2 * h)
        exact = ex.bump_profile_derivative(t, j)
        assert np.max(np.abs(fd - exact)) <= 1e-4 * max(1.0, np.max(np.abs(exact)))


def test_breakpoints():
    bp = ex.breakpoints(ex.parse_expr("indicator(x1,0,1)*bump(x2,0.5,1)*hk_osc(x1)"))
    assert bp[1] >= {0.0, 1.0} and bp[2] >= {0.0, 1.0}


exprs = st.recursive(
    st.sampled_from(["x1", "x2", "1.5", "pi", "2"]),
    lambda inner: st.one_of(
        st.tuples(inner, st.sampled_from(["+", "-", "*"]), inner).map(lambda t: f"({t[0]}{t[1]}{t[2]})"),
        inner.map(lambda s: f"sin({s})"),
        inner.map(lambda s: f"exp(-({s})^2)"),
        inner.map(lambda s: f"-{s}"),
    ),
    max_leaves=8,
)


@settings(max_examples=200, deadline=None)
@given(exprs)
def test_roundtrip_and_evaluation_agree(text):
    e = ex.parse_expr(text, 2)
    e2 = ex.parse_expr(ex.to_text(e), 2)
    X = np.array([[0.3, -1.2], [1.7, 0.4]])
    assert np.allclose(ex.evaluate(e, X), ex.evaluate(e2, X), rtol=1e-12, atol=1e-12)
    # symbolic derivative against a central difference
    d = ex.evaluate(ex.diff(e, 1), X)
    h = 1e-6
    fd = (ex.evaluate(e, X + [h, 0]) - ex.evaluate(e, X - [h, 0])) / (2 * h)
    assert np.allclose(d, fd, rtol=1e-4, atol=1e-4)


def test_catalog_parses():
    assert len(builtin_catalog()) >= 12
