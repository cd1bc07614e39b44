import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from repscat import _jet
from repscat._jet import Jet

points = st.floats(min_value=0.3, max_value=5.0)


def _derivs(fn, t, order, h=1e-3):
    """Reference derivatives by high-order central differences."""
    from math import comb
    out = [fn(t)]
    for k in range(1, order + 1):
        out.append(sum((-1) ** j * comb(k, j) * fn(t + (k / 2 - j) * h) for j in range(k + 1))
                   / h ** k)
    return out


@given(points)
@settings(max_examples=30, deadline=None)
def test_product_rule_and_power(t):
    x = Jet.variable(np.array([t]), 3)
    y = (x * x + 2.0) ** 1.5 / (1.0 + x)
    fn = lambda s: (s * s + 2.0) ** 1.5 / (1.0 + s)  # noqa: E731
    ref = _derivs(fn, t, 2)
    for k in range(3):
        assert y.deriv(k)[0] == pytest.approx(ref[k], rel=1e-4, abs=1e-6)


@pytest.mark.parametrize("name, fn, npfn", [
    ("exp", _jet.exp, np.exp),
    ("log", _jet.log, np.log),
    ("sqrt", _jet.sqrt, np.sqrt),
])
def test_elementary_functions(name, fn, npfn):
    t = np.array([0.7, 1.3, 2.9])
    y = fn(Jet.variable(t, 4))
    assert np.allclose(y.value, npfn(t))
    d1 = {"exp": np.exp(t), "log": 1 / t, "sqrt": 0.5 / np.sqrt(t)}[name]
    assert np.allclose(y.deriv(1), d1)


def test_differentiate_shifts_coefficients():
    x = Jet.variable(np.array([2.0]), 4)
    y = x ** 3
    dy = y.differentiate()
    assert dy.order == 3
    assert dy.value[0] == pytest.approx(12.0)
    assert dy.deriv(1)[0] == pytest.approx(12.0)
    assert dy.deriv(2)[0] == pytest.approx(6.0)
