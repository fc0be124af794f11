from fractions import Fraction

import pytest

from models.errors import BadWord, NotElliptic, NotSymmetric
from services.diffop import (
    DiffOperator,
    apply_operator,
    bracket_generation_rank,
    commutator,
    horizontal_derivative,
    horizontal_fields,
    left_invariant_fields,
    operator_from_matrix,
    sub_laplacian,
)
from services.group import random_rational_element
from services.poly import StratifiedPolynomial, left_translate, random_polynomial


def test_heisenberg_fields(h1):
    x, y, t = StratifiedPolynomial.variables(h1)
    X1, X2 = horizontal_fields(h1)
    assert X1.coefficients == (1, 0, -y / 2)
    assert X2.coefficients == (0, 1, x / 2)


def test_fields_at_identity(any_group):
    for index, X in enumerate(left_invariant_fields(any_group)):
        assert X.value_at_identity() == [int(i == index) for i in range(any_group.N)]
        assert X.divergence().is_zero()


def test_field_coefficients_are_homogeneous(engel):
    for index, X in enumerate(left_invariant_fields(engel)):
        for target, coeff in enumerate(X.coefficients):
            degree = engel.layer_of[target] - engel.layer_of[index]
            assert coeff.is_zero() or coeff.is_homogeneous(degree)


def test_horizontal_derivatives(h1):
    x, y, t = StratifiedPolynomial.variables(h1)
    assert horizontal_derivative((1, 2), x * y) == 1
    assert horizontal_derivative((1, 2), t) == Fraction(1, 2)
    assert horizontal_derivative((2, 1), t) == Fraction(-1, 2)
    assert horizontal_derivative((), t) == t
    for word in ((3,), (0,), (1, 4)):
        with pytest.raises(BadWord):
            horizontal_derivative(word, t)


def test_sub_laplacian_values(h1):
    x, y, t = StratifiedPolynomial.variables(h1)
    L = sub_laplacian(h1)
    assert apply_operator(L, y ** 2) == 2
    assert apply_operator(L, t).is_zero()
    assert apply_operator(L, x * y).is_zero()
    assert apply_operator(L, y * t) == x
    assert apply_operator(L, x ** 2 * y - y ** 3 / 3).is_zero()
    assert apply_operator(L, StratifiedPolynomial.constant(h1, 5)).is_zero()


def test_sub_laplacian_structure(h1):
    x, y, t = StratifiedPolynomial.variables(h1)
    L = sub_laplacian(h1)
    assert L.second_order == {(0, 0): 1, (1, 1): 1, (0, 2): -y, (1, 2): x, (2, 2): (x ** 2 + y ** 2) / 4}
    assert L.first_order == {}
    assert L.has_constant_coefficients() is False


def test_sub_laplacian_kills_last_coordinate(any_group):
    L = sub_laplacian(any_group)
    assert apply_operator(L, StratifiedPolynomial.variable(any_group, any_group.x_m)).is_zero()


def test_identity_matrix_gives_sub_laplacian(engel, rng):
    L = operator_from_matrix([[1, 0], [0, 1]], engel)
    laplacian = sub_laplacian(engel)
    assert L.second_order == laplacian.second_order
    for _ in range(3):
        P = random_polynomial(engel, 5, rng)
        assert apply_operator(L, P) == apply_operator(laplacian, P)


def test_matrix_operators(h1):
    x, y, t = StratifiedPolynomial.variables(h1)
    assert apply_operator(operator_from_matrix([[1, 0], [0, 2]], h1), y ** 2) == 4
    variable = operator_from_matrix([[1, x], [x, 1]], h1)
    assert apply_operator(variable, x * y) == 2 * x
    operator_from_matrix([[1, 0], [0, 2]], h1, lam=0.5)


def test_matrix_errors(h1):
    with pytest.raises(NotSymmetric):
        operator_from_matrix([[1, 1], [0, 1]], h1)
    with pytest.raises(NotSymmetric):
        operator_from_matrix([[1, 0, 0], [0, 1, 0], [0, 0, 1]], h1)
    with pytest.raises(NotElliptic):
        operator_from_matrix([[1, 0], [0, -1]], h1)
    with pytest.raises(NotElliptic):
        operator_from_matrix([[1, 0], [0, 2]], h1, lam=0.9)


def test_sub_laplacian_lowers_degree(h2, rng):
    L = sub_laplacian(h2)
    for _ in range(5):
        P = random_polynomial(h2, 5, rng, min_degree=2)
        image = apply_operator(L, P)
        assert image.is_zero() or image.weighted_degree() <= P.weighted_degree() - 2


def test_sub_laplacian_is_left_invariant(free3, rng):
    L = sub_laplacian(free3)
    for _ in range(3):
        P = random_polynomial(free3, 4, rng)
        g = random_rational_element(free3, rng)
        assert apply_operator(L, left_translate(P, g)) == left_translate(apply_operator(L, P), g)


def test_sub_laplacian_is_homogeneous(engel, rng):
    L = sub_laplacian(engel)
    P = random_polynomial(engel, 5, rng)
    lam = Fraction(3, 2)
    assert apply_operator(L, P.dilate(lam)) == apply_operator(L, P).dilate(lam) * lam ** 2


def test_bracket_generation(any_group):
    assert bracket_generation_rank(any_group) == any_group.N


def test_commutator(h1):
    X1, X2 = horizontal_fields(h1)
    assert commutator(X1, X2).coefficients == (0, 0, 1)


def test_operator_payload(h1):
    L = sub_laplacian(h1)
    restored = DiffOperator.from_dict(h1, L.to_dict())
    assert restored.second_order == L.second_order
    assert restored.zeroth_order.is_zero()


def test_first_order_operator(h1):
    x, y, t = StratifiedPolynomial.variables(h1)
    X1 = horizontal_fields(h1)[0]
    L = DiffOperator.from_vector_field(X1)
    assert apply_operator(L, t) == -y / 2
    assert apply_operator(L + L, x * t) == 2 * t - x * y
