import math

import pytest

from sdspace import expr as ex
from sdspace.catalog import CatalogError, builtin_catalog, get, load_catalog, parse_catalog
from sdspace.gauge import ftc_oracle


def test_builtin_contents():
    cat = builtin_catalog()
    for name in ("x", "sin_pi", "indicator_01", "bump2", "inv_sqrt", "hk_osc"):
        assert name in cat
    assert cat["hk_osc"].smoothness == "pathological" and cat["hk_osc"].singular == ((1, 0.0),)
    with pytest.raises(KeyError):
        get("nope")


@pytest.mark.parametrize("name", sorted(n for n, f in builtin_catalog().items()
                                        if f.antiderivative is not None))
def test_declared_antiderivatives(name):
    f = get(name)
    (a, b), = f.support.bounding_box()
    F = lambda x: ex.evaluate(f.antiderivative, [[x]])[0]  # noqa: E731
    exact = ftc_oracle(F, a, b).value
    assert f.integral(1e-9).value == pytest.approx(exact, abs=max(1e-8, 2 * f.tol_floor))


def test_declared_sup_norms_hold():
    import numpy as np
    for f in builtin_catalog().values():
        if f.sup_norm is None:
            continue
        box = f.support.bounding_box()
        grid = np.stack(np.meshgrid(*[np.linspace(iv.lo, iv.hi, 41) for iv in box]), -1)
        X = grid.reshape(-1, f.order)
        assert np.max(np.abs(f.raw(X))) <= f.sup_norm + 1e-12


def test_catalog_file(tmp_path):
    p = tmp_path / "cat.txt"
    p.write_text("# comment\n\nramp = x1 @ order=1 support=[0,2] sup=2\n"
                 "sq = x1^2*x2 @ order=2 support=[0,1;-pi/2,pi/2] smoothness=smooth\n")
    cat = load_catalog(p)
    assert cat["ramp"].integral().value == pytest.approx(2.0)
    assert cat["sq"].support.bounding_box()[1].hi == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("text", [
    "bad line",
    "f = x1 @ support=[0,1]",
    "f = x1 @ order=1 support=[0,1;0,1]",
    "f = x1 @ order=1 support=[0,1] colour=red",
    "f = x1 + @ order=1 support=[0,1]",
    "f = x1 @ order=1 support=[0,1]\nf = x1 @ order=1 support=[0,1]",
])
def test_catalog_errors(text):
    with pytest.raises(CatalogError):
        parse_catalog(text)
