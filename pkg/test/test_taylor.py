from fractions import Fraction

import numpy as np
import pytest

from models.errors import InconsistentData
from services import linalg
from services.fields import ScalarField
from services.group import GroupElement, random_rational_element
from services.poly import StratifiedPolynomial, left_translate, random_polynomial
from services.taylor import (
    DerivativeData,
    check_taylor_inequality,
    decay_slope,
    default_radii,
    derivative_matrix,
    fd_jet,
    horizontal_words,
    reflect_extend,
    reflection_coefficients,
    symbolic_jet,
    taylor_poly,
)


def t_table(h1, noise=0):
    values = {w: 0 for w in horizontal_words(2, 2)}
    values[(1, 2)] = Fraction(1, 2) + noise
    values[(2, 1)] = Fraction(-1, 2) - noise
    return DerivativeData(GroupElement.identity(h1), 2, values)


def test_horizontal_words():
    assert horizontal_words(2, 1) == [(), (1,), (2,)]
    assert len(horizontal_words(2, 3)) == 15


def test_taylor_of_polynomials(h1):
    x, y, t = StratifiedPolynomial.variables(h1)
    e = GroupElement.identity(h1)
    assert taylor_poly(x * y, e, 2) == x * y
    assert taylor_poly(t, GroupElement.of(h1, [1, 0, 0]), 2) == t + y / 2
    assert taylor_poly(x * t + y, e, 2) == y


def test_taylor_from_table(h1):
    t = StratifiedPolynomial.variable(h1, 2)
    table = t_table(h1)
    assert table.is_exact()
    assert table.missing_words() == []
    assert taylor_poly(table) == t


def test_taylor_tolerance_mode(h1):
    t = StratifiedPolynomial.variable(h1, 2)
    assert taylor_poly(t_table(h1, noise=1e-9), tolerance=1e-6) == t


def test_inconsistent_tables(h1):
    e = GroupElement.identity(h1)
    values = {w: 0 for w in horizontal_words(2, 3)}
    values[(1, 1, 2)] = 1
    with pytest.raises(InconsistentData):
        taylor_poly(DerivativeData(e, 3, values))
    partial = DerivativeData(e, 2, {(): 0, (1,): 1})
    assert (2, 2) in partial.missing_words()
    with pytest.raises(InconsistentData):
        taylor_poly(partial)


def test_derivative_matrix_has_full_column_rank(h1, free3, engel):
    for group in (h1, free3, engel):
        for k in range(5):
            rows, cols, matrix = derivative_matrix(group, k)
            assert len(rows) >= len(cols)
            assert linalg.rank(matrix) == len(cols)


def test_taylor_is_truncation_at_identity(engel, rng):
    P = random_polynomial(engel, 6, rng, n_terms=6)
    e = GroupElement.identity(engel)
    for k in range(4):
        assert taylor_poly(P, e, k) == P.truncate(k)


def test_taylor_is_translation_covariant(engel, rng):
    P = random_polynomial(engel, 3, rng)
    g = random_rational_element(engel, rng)
    assert taylor_poly(P, g, 3) == left_translate(P, g)


def test_symbolic_and_fd_jets_agree(h1):
    f = ScalarField.from_expression("sin(x)*t + cos(y)", h1)
    g0 = GroupElement.of(h1, [Fraction(1, 4), Fraction(-1, 3), Fraction(1, 2)])
    exact = symbolic_jet(f, g0, 2).values
    approx = fd_jet(f, g0, 2, h_step=1e-3).values
    for word, value in exact.items():
        assert approx[word] == pytest.approx(value, abs=1e-4)


def test_default_radii():
    radii = default_radii()
    assert radii[0] == 2.0 ** -3
    assert radii[-1] == 2.0 ** -10
    assert len(radii) == 8


def test_decay_slope():
    radii = [0.5, 0.25, 0.125]
    assert decay_slope(radii, [r ** 3 for r in radii]) == pytest.approx(3.0)
    assert decay_slope(radii, [0.0, 0.0, 1.0]) is None


def test_taylor_inequality_slopes(h1):
    e = GroupElement.identity(h1)
    sine = check_taylor_inequality(ScalarField.from_expression("sin(x)", h1), e, 2, seed=11, target=3)
    assert sine.passes(0.2)
    mixed = check_taylor_inequality(ScalarField.from_expression("y*sin(t)", h1), e, 3, seed=11, target=7)
    assert mixed.passes(0.5)


def test_taylor_inequality_reproduces_polynomials(engel):
    f = ScalarField.from_expression("x1*x2 + x3 - x4/2", engel)
    report = check_taylor_inequality(f, GroupElement.of(engel, [1, 0, 2, 0]), 3, seed=3)
    assert report.reproduced
    assert report.passes(0.0)


def test_reflection_coefficients():
    assert reflection_coefficients(0) == [-3, 4]
    for k in range(9):
        c = reflection_coefficients(k)
        for j in range(k + 2):
            assert sum(ci * Fraction(-1, i) ** j for i, ci in enumerate(c, start=1)) == 1
    with pytest.raises(ValueError):
        reflection_coefficients(-1)


def test_reflection_extends_low_degree_polynomials(h1, rng):
    v = ScalarField.from_expression("y^2 + x*y + t", h1)
    extended = reflect_extend(v, 1)
    points = [rng.uniform(-1, 1, 20), -rng.uniform(0.01, 1, 20), rng.uniform(-1, 1, 20)]
    assert np.allclose(extended(points), v(points))
    above = [points[0], -points[1], points[2]]
    assert np.allclose(extended(above), v(above))
