from fractions import Fraction

import numpy as np
import pytest

from models.errors import EvaluationFailure, NotPolynomial, ParseError
from services.fields import (
    ScalarField,
    fd_horizontal_derivative,
    fd_horizontal_gradient,
    field_from_input,
    gauge_field,
    parse_expression,
    product_field,
    sum_field,
    symbolic_horizontal_gradient,
)
from services.group import GroupElement
from services.poly import StratifiedPolynomial


def test_polynomial_expressions(h1):
    x, y, t = StratifiedPolynomial.variables(h1)
    f = ScalarField.from_expression("x^2*y - y^3/3", h1)
    assert f.polynomial == x ** 2 * y - y ** 3 / 3
    assert ScalarField.from_expression("(x + 2*t)**2", h1).polynomial == (x + 2 * t) ** 2
    assert ScalarField.from_expression("-x*-y", h1).polynomial == x * y
    assert ScalarField.from_expression("0.5*t", h1).polynomial == t / 2


def test_non_polynomial_expressions(h1):
    f = ScalarField.from_expression("sin(x) + exp(t)", h1)
    assert f.polynomial is None
    assert f.symbolic
    with pytest.raises(NotPolynomial):
        f.require_polynomial()
    with pytest.raises(NotPolynomial):
        ScalarField.from_expression("1/x", h1).require_polynomial()


@pytest.mark.parametrize("text", ["x +", "", "x ** y", "2 $ x", "sin x", "(x", "z"])
def test_parse_errors(h1, text):
    with pytest.raises(ParseError):
        parse_expression(text, h1)


def test_evaluation(h1):
    f = ScalarField.from_expression("sin(x)*t + cos(y)", h1)
    assert f([0.0, 0.0, 5.0]) == pytest.approx(1.0)
    values = f([np.array([np.pi / 2, 0.0]), np.array([0.0, np.pi]), np.array([2.0, 1.0])])
    assert np.allclose(values, [3.0, -1.0])
    assert f.at(GroupElement.of(h1, [0, 0, 1])) == pytest.approx(1.0)


def test_evaluation_failures(h1):
    f = ScalarField.from_expression("1/x", h1)
    with pytest.raises(EvaluationFailure):
        f([0.0, 1.0, 1.0])
    with pytest.raises(EvaluationFailure):
        f([np.array([0.0, 1.0]), np.zeros(2), np.zeros(2)])
    with pytest.raises(EvaluationFailure):
        parse_expression("x/0", h1)


def test_rendered_expression_parses_back(h1, rng):
    f = ScalarField.from_expression("-(x - y)^2/3 + sin(t*x) - (y/(1 + x^2))", h1)
    again = ScalarField.from_expression(str(f), h1)
    points = [rng.uniform(-1, 1, 10) for _ in range(3)]
    assert np.allclose(f(points), again(points))


def test_symbolic_horizontal_derivatives(h1):
    f = ScalarField.from_expression("sin(x)*t", h1)
    X1f, X2f = symbolic_horizontal_gradient(f)
    point = [0.3, -0.2, 0.7]
    # X1 = d_x - (y/2) d_t, X2 = d_y + (x/2) d_t
    assert X1f(point) == pytest.approx(np.cos(0.3) * 0.7 + 0.1 * np.sin(0.3))
    assert X2f(point) == pytest.approx(0.15 * np.sin(0.3))
    numeric = fd_horizontal_gradient(f, point, 1e-4)
    assert numeric == pytest.approx([X1f(point), X2f(point)], abs=1e-7)


def test_polynomial_field_derivatives(h1):
    f = ScalarField.from_expression("t", h1)
    assert f.horizontal_derivative((1, 2)).polynomial == Fraction(1, 2)
    assert f.horizontal_derivative(()) is f


def test_fd_derivatives(h1):
    e = GroupElement.identity(h1)
    t = ScalarField.from_expression("t", h1)
    assert fd_horizontal_derivative((1, 2), t, e, 1e-3) == pytest.approx(0.5, abs=1e-6)
    square = ScalarField.from_expression("x^2", h1)
    assert fd_horizontal_derivative((1,), square, [1.0, 0.0, 0.0], 1e-4) == pytest.approx(2.0, abs=1e-7)
    constant = ScalarField.constant(3, h1)
    assert fd_horizontal_derivative((2,), constant, [0.2, 0.1, 0.4], 1e-3) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(EvaluationFailure):
        fd_horizontal_derivative((1,), t, e, 0.0)


def test_fd_error_is_second_order(h1):
    cube = ScalarField.from_expression("x^3", h1)
    point = [1.0, 0.0, 0.0]
    coarse = abs(fd_horizontal_derivative((1,), cube, point, 1e-2) - 3.0)
    fine = abs(fd_horizontal_derivative((1,), cube, point, 5e-3) - 3.0)
    assert 3.5 <= coarse / fine <= 4.5


def test_callable_fields(h1):
    f = ScalarField.from_callable(lambda c: c[0] + 2.0 * c[1], h1, label="x+2y")
    assert not f.symbolic
    assert f.polynomial is None
    with pytest.raises(EvaluationFailure):
        f.horizontal_derivative((1,))
    assert fd_horizontal_derivative((2,), f, [0.0, 0.0, 0.0], 1e-3) == pytest.approx(2.0)


def test_field_combinators(h1):
    x, y, t = StratifiedPolynomial.variables(h1)
    a = field_from_input("x", h1)
    b = field_from_input(y * t, h1)
    assert product_field(a, b).polynomial == x * y * t
    assert sum_field(a, b).polynomial == x + y * t
    gauge = gauge_field(h1, 4.0)
    assert gauge([1.0, 1.0, 1.0]) == pytest.approx(5.0)
    mixed = sum_field(a, gauge)
    assert mixed([1.0, 1.0, 1.0]) == pytest.approx(6.0)
    assert product_field(a, gauge)([2.0, 0.0, 0.0]) == pytest.approx(32.0)
