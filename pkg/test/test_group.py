from fractions import Fraction

import numpy as np
import pytest

from models.errors import ArityMismatch, GroupMismatch, NonpositiveLambda
from services.group import (
    GroupElement,
    bch_coords,
    bch_product,
    dilate,
    dynkin_coefficients,
    euclidean_distance,
    gauge,
    gauge_coords,
    gauge_distance,
    gauge_power,
    group_law_polynomials,
    homogeneous_dimension,
    inverse,
    random_rational_element,
    random_rational_lambda,
    sample_gauge_ball,
)
from services.poly import StratifiedPolynomial


def test_heisenberg_product(h1):
    p = GroupElement.of(h1, [1, 0, 0])
    q = GroupElement.of(h1, [0, 1, 0])
    assert (p * q).coords == (1, 1, Fraction(1, 2))
    assert (q * p).coords == (1, 1, Fraction(-1, 2))


def test_engel_product(engel):
    p = GroupElement.of(engel, [1, 0, 0, 0])
    q = GroupElement.of(engel, [0, 1, 0, 0])
    assert bch_product(p, q).coords == (1, 1, Fraction(1, 2), Fraction(1, 12))


def test_dynkin_low_orders():
    coefficients = dynkin_coefficients(2)
    assert coefficients[(0,)] == 1
    assert coefficients[(1,)] == 1
    assert coefficients[(0, 1)] - coefficients[(1, 0)] == Fraction(1, 2)
    with pytest.raises(ValueError):
        dynkin_coefficients(9)


def test_identity_and_inverse(any_group, rng):
    e = GroupElement.identity(any_group)
    for _ in range(10):
        p = random_rational_element(any_group, rng)
        assert p * e == p
        assert e * p == p
        assert (p * inverse(p)).is_identity()
        assert (inverse(p) * p).is_identity()


def test_associativity(any_group, rng):
    for _ in range(10):
        p, q, r = (random_rational_element(any_group, rng) for _ in range(3))
        assert (p * q) * r == p * (q * r)


def test_dilation(h1):
    p = GroupElement.of(h1, [1, 1, 1])
    assert dilate(2, p).coords == (2, 2, 4)
    assert dilate(1, p) == p
    for lam in (0, -1, Fraction(-1, 2)):
        with pytest.raises(NonpositiveLambda):
            dilate(lam, p)


def test_dilation_is_automorphism(any_group, rng):
    for _ in range(25):
        p, q = random_rational_element(any_group, rng), random_rational_element(any_group, rng)
        lam = random_rational_lambda(rng)
        assert dilate(lam, p * q) == dilate(lam, p) * dilate(lam, q)


def test_gauge(h1, any_group, rng):
    p = GroupElement.of(h1, [1, 1, 1])
    assert gauge_power(p) == 5
    assert gauge(p) == pytest.approx(5 ** 0.25)
    assert gauge_power(dilate(2, p)) == 80
    assert gauge_distance(p, p) == 0
    exponent = 2 * {1: 1, 2: 2, 3: 6}[any_group.step]
    for _ in range(10):
        q = random_rational_element(any_group, rng)
        lam = random_rational_lambda(rng)
        assert gauge_power(dilate(lam, q)) == lam ** exponent * gauge_power(q)


def test_distance_is_left_invariant(any_group, rng):
    for _ in range(10):
        g, p, q = (random_rational_element(any_group, rng, bound=1) for _ in range(3))
        assert gauge_distance(g * p, g * q) == pytest.approx(gauge_distance(p, q), rel=1e-9)
        assert gauge_distance(p, q) == pytest.approx(gauge_distance(q, p), rel=1e-9)


def test_euclidean_distance(h1):
    p = GroupElement.of(h1, [0, 0, 0])
    q = GroupElement.of(h1, [3, 0, 4])
    assert euclidean_distance(p, q) == pytest.approx(5.0)


def test_homogeneous_dimension(h1, h2, engel, free3):
    assert [homogeneous_dimension(g) for g in (h1, h2, engel, free3)] == [4, 6, 7, 9]


def test_group_law_polynomials(h1):
    law = group_law_polynomials(h1)
    x, y, t, xp, yp, tp = StratifiedPolynomial.variables(h1, 6)
    assert law.components[0] == x + xp
    assert law.components[1] == y + yp
    assert law.components[2] == t + tp + (x * yp - y * xp) / 2
    p = GroupElement.of(h1, [1, 0, 0])
    q = GroupElement.of(h1, [0, 1, 0])
    assert law.evaluate(p, q) == p * q


def test_group_law_left_specialization(engel, rng):
    law = group_law_polynomials(engel)
    g = random_rational_element(engel, rng)
    q = random_rational_element(engel, rng)
    left = law.specialize_left(g.coords)
    product = (g * q).coords
    assert tuple(c.evaluate_coords(q.coords) for c in left) == product


def test_partial_right_gives_horizontal_fields(h1):
    law = group_law_polynomials(h1)
    x, y, t = StratifiedPolynomial.variables(h1)
    assert law.partial_right(0) == [StratifiedPolynomial.constant(h1, 1), StratifiedPolynomial.zero(h1), -y / 2]
    assert law.partial_right(1) == [StratifiedPolynomial.zero(h1), StratifiedPolynomial.constant(h1, 1), x / 2]


def test_mismatch_errors(h1, engel):
    with pytest.raises(GroupMismatch):
        bch_product(GroupElement.identity(h1), GroupElement.identity(engel))
    with pytest.raises(ArityMismatch):
        GroupElement.of(h1, [1, 0])


def test_float_product_matches_exact(engel, rng):
    p, q = random_rational_element(engel, rng), random_rational_element(engel, rng)
    exact = (p * q).coords
    floats = bch_coords([float(c) for c in p.coords], [float(c) for c in q.coords], engel)
    assert floats == pytest.approx([float(c) for c in exact], rel=1e-12, abs=1e-12)


def test_vectorized_product(h1, rng):
    a = sample_gauge_ball(h1, 1.0, 50, rng)
    b = sample_gauge_ball(h1, 1.0, 50, rng)
    product = bch_coords(list(a), list(b), h1)
    assert np.allclose(product[2], a[2] + b[2] + 0.5 * (a[0] * b[1] - a[1] * b[0]))


def test_sample_gauge_ball(any_group, rng):
    points = sample_gauge_ball(any_group, 0.25, 300, rng)
    assert points.shape == (any_group.N, 300)
    assert np.all(gauge_coords(list(points), any_group) <= 0.25 + 1e-12)
