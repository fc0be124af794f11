from fractions import Fraction

import pytest

from models.errors import ArityMismatch, GroupMismatch, NonpositiveLambda
from services.group import GroupElement, random_rational_element, random_rational_lambda
from services.poly import (
    MultiIndex,
    StratifiedPolynomial,
    dilate_poly,
    evaluate,
    left_translate,
    monomial_basis,
    random_polynomial,
    truncate,
    weighted_degree,
)


def test_weighted_degree(h1, engel):
    assert weighted_degree((1, 0, 1), h1) == 3
    assert weighted_degree((0, 0, 0), h1) == 0
    assert weighted_degree((0, 0, 0, 1), engel) == 3
    assert MultiIndex((2, 1, 1), h1).weighted_degree == 5


def test_monomial_basis_sizes(h1):
    assert [len(monomial_basis(h1, kappa)) for kappa in range(4)] == [1, 3, 7, 13]
    assert monomial_basis(h1, -1) == []


def test_monomial_basis_order(h1):
    assert [str(J) for J in monomial_basis(h1, 2)] == ["1", "x", "y", "x^2", "t", "x*y", "y^2"]


def test_evaluate(h1):
    x, y, t = StratifiedPolynomial.variables(h1)
    assert evaluate(x * y, GroupElement.of(h1, [2, 3, 0])) == 6
    assert evaluate(t, GroupElement.identity(h1)) == 0
    assert evaluate(x ** 2 * y - y ** 3 / 3, GroupElement.of(h1, [1, 2, 5])) == Fraction(-2, 3)


def test_evaluate_errors(h1, engel):
    x = StratifiedPolynomial.variable(h1, 0)
    with pytest.raises(GroupMismatch):
        evaluate(x, GroupElement.identity(engel))
    wide = StratifiedPolynomial.variable(h1, 4, nvars=6)
    with pytest.raises(ArityMismatch):
        evaluate(wide, GroupElement.identity(h1))


def test_left_translate(h1):
    x, y, t = StratifiedPolynomial.variables(h1)
    g = GroupElement.of(h1, [1, 0, 0])
    assert left_translate(t, g) == t + y / 2
    assert left_translate(x, GroupElement.of(h1, [3, 5, 7])) == x + 3
    one = StratifiedPolynomial.constant(h1, 1)
    assert left_translate(one, g) == one


def test_left_translate_composes(engel, rng):
    for _ in range(5):
        P = random_polynomial(engel, 4, rng)
        g, h = random_rational_element(engel, rng), random_rational_element(engel, rng)
        assert left_translate(left_translate(P, g), h) == left_translate(P, g * h)
        assert left_translate(P, g).weighted_degree() <= P.weighted_degree()


def test_dilate(h1):
    x, y, t = StratifiedPolynomial.variables(h1)
    assert dilate_poly(t, 3) == 9 * t
    assert dilate_poly(x + t, 2) == 2 * x + 4 * t
    assert dilate_poly(x * y + t, 1) == x * y + t
    with pytest.raises(NonpositiveLambda):
        dilate_poly(x, 0)


def test_dilation_of_values(free3, rng):
    P = random_polynomial(free3, 3, rng)
    p = random_rational_element(free3, rng)
    lam = random_rational_lambda(rng)
    scaled = GroupElement.of(free3, [c * lam ** j for c, j in zip(p.coords, free3.layer_of)])
    assert evaluate(P.dilate(lam), p) == evaluate(P, scaled)


def test_ring_axioms(h2, rng):
    P, Q, R = (random_polynomial(h2, 3, rng) for _ in range(3))
    assert (P + Q) * R == P * R + Q * R
    assert P * Q == Q * P
    assert (P * Q) * R == P * (Q * R)
    assert P - P == StratifiedPolynomial.zero(h2)


def test_grading(h1):
    x, y, t = StratifiedPolynomial.variables(h1)
    P = x * y + t
    assert P.is_homogeneous(2)
    assert (P * P).is_homogeneous(4)
    assert (x * t).weighted_degree() == 3
    assert not (x + t).is_homogeneous(1)


def test_truncate(h1):
    x, y, t = StratifiedPolynomial.variables(h1)
    P = 1 + x + t + x * t + t ** 2
    assert truncate(P, 2) == 1 + x + t
    assert P.truncate(3) == 1 + x + t + x * t
    assert P.truncate(-1).is_zero()


def test_rendering(h1):
    x, y, t = StratifiedPolynomial.variables(h1)
    assert str(x * y / 2) == "1/2*x*y"
    assert str(StratifiedPolynomial.zero(h1)) == "0"
    assert str(t - x * y / 2) == "t - 1/2*x*y"


def test_dict_payload(engel, rng):
    P = random_polynomial(engel, 4, rng)
    assert StratifiedPolynomial.from_dict(engel, P.to_dict()) == P


def test_random_polynomial_excludes(h1, rng):
    P = random_polynomial(h1, 4, rng, n_terms=6, min_degree=2, exclude=(h1.x_m,))
    assert not P.depends_on(h1.x_m)
    assert P.min_weighted_degree() >= 2
