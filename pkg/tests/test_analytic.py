"""Closed-form vocabulary: evaluation, derivatives, parser errors."""

import numpy as np
import pytest

from slwave.analytic import (Const, Poly, Trig, bump, parse_expression, ramp)
from slwave.errors import ConfigurationError

X = np.linspace(0.0, 1.0, 257)


def numeric_deriv(f, x, k=1, eps=1e-5):
    if k == 1:
        return (f.deriv(x + eps, 0) - f.deriv(x - eps, 0)) / (2 * eps)
    return (f.deriv(x + eps, 0) - 2 * f.deriv(x, 0) + f.deriv(x - eps, 0)) / eps ** 2


def test_const_and_poly():
    c = Const(3.5)
    assert np.all(c.deriv(X, 0) == 3.5)
    assert np.all(c.deriv(X, 1) == 0.0)
    p = Poly((1.0, 0.0, 2.0))          # 1 + 2x^2, ascending
    assert np.allclose(p.deriv(X, 0), 1 + 2 * X ** 2)
    assert np.allclose(p.deriv(X, 1), 4 * X)
    assert np.allclose(p.deriv(X, 2), 4.0)


def test_trig_derivative_chain():
    t = Trig("cos", 3.0)
    assert np.allclose(t.deriv(X, 0), np.cos(3 * X))
    assert np.allclose(t.deriv(X, 1), -3 * np.sin(3 * X))
    assert np.allclose(t.deriv(X, 2), -9 * np.cos(3 * X))


def test_bump_support_and_smoothness():
    b = bump(0.5, 0.2, 1.0, smoothness=6)
    x_out = np.array([0.0, 0.39, 0.61, 1.0])
    for k in range(3):
        assert np.all(b.deriv(x_out, k) == 0.0)
    assert b.deriv(np.array([0.5]), 0)[0] == pytest.approx(1.0)
    # C^5: fifth derivative still tends to zero at the support edge
    inside = b.deriv(np.array([0.4 + 1e-4]), 0)[0]
    assert inside < 1e-15 or inside >= 0.0


@pytest.mark.parametrize("k", [1, 2])
def test_bump_derivatives_match_differencing(k):
    b = bump(0.45, 0.3, 0.8, smoothness=6)
    xs = np.linspace(0.35, 0.55, 41)
    exact = b.deriv(xs, k)
    approx = numeric_deriv(b, xs, k)
    scale = max(np.max(np.abs(exact)), 1.0)
    assert np.max(np.abs(exact - approx)) <= 1e-4 * scale


def test_ramp_is_monotone_plateau():
    r = ramp(0.2, 0.4)
    assert r.deriv(np.array([0.1]), 0)[0] == 0.0
    assert r.deriv(np.array([0.9]), 0)[0] == 1.0
    xs = np.linspace(0, 1, 101)
    assert np.all(np.diff(r.deriv(xs, 0)) >= -1e-15)


def test_parse_expression_vocabulary():
    for text, x, want in [
        ("const(2.5)", 0.3, 2.5),
        ("2 + cos(3)", 0.5, 2 + np.cos(1.5)),
        ("sin(2)", 0.25, np.sin(0.5)),
        ("poly(1, -2)", 0.5, 0.0),
        ("bump(0.5, 0.2, 1.0, 6)", 0.5, 1.0),
    ]:
        f = parse_expression(text)
        assert f.deriv(np.array([x]), 0)[0] == pytest.approx(want, abs=1e-12)


def test_parse_expression_rejects_unknown():
    with pytest.raises(ConfigurationError):
        parse_expression("tanh(3)")
    with pytest.raises(ConfigurationError):
        parse_expression("bump(0.5)")
    with pytest.raises(ConfigurationError):
        parse_expression("")


def test_bump_two_argument_form():
    f = parse_expression("bump(0.5, 0.2)")
    assert f.deriv(np.array([0.5]), 0)[0] == pytest.approx(1.0)
