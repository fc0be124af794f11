import itertools
import json
from fractions import Fraction

import pytest

from models.errors import (
    AlgebraMismatch,
    AntisymmetryViolation,
    JacobiViolation,
    NotGraded,
    NotStratified,
    ParseError,
    UnknownName,
)
from services.algebra import (
    AlgebraElement,
    bracket,
    build_algebra,
    builtin_group,
    dump_group,
    group_from_definition,
    load_group_file,
    nested_bracket,
)


def basis(algebra):
    return [AlgebraElement.basis(algebra, i) for i in range(algebra.N)]


def test_heisenberg_from_table():
    algebra = build_algebra((2, 1), {((1, 1), (1, 2)): {(2, 1): 1}})
    assert algebra.N == 3
    assert algebra.Q == 4
    assert algebra.step == 2
    assert algebra.m == 2
    assert algebra == builtin_group("heisenberg1")


def test_table_from_json_entries():
    entries = [{"left": [1, 1], "right": [1, 2], "result": [{"basis": [2, 1], "coeff": "1"}]}]
    assert build_algebra((2, 1), entries) == builtin_group("heisenberg1")


def test_builtin_dimensions(h2, engel, free3):
    assert (h2.N, h2.Q, h2.m) == (5, 6, 4)
    assert (engel.N, engel.Q, engel.step) == (4, 7, 3)
    assert (free3.N, free3.Q) == (6, 9)
    assert builtin_group("heisenberg2") == h2


@pytest.mark.parametrize("name", ["sl2", "engel(2)", "free_step2", "free_step2(1)", "heisenberg(0)"])
def test_unknown_builtin(name):
    with pytest.raises(UnknownName):
        builtin_group(name)


def test_not_graded():
    table = {((1, 1), (1, 2)): {(2, 1): 1}, ((1, 2), (2, 1)): {(1, 1): 1}}
    with pytest.raises(NotGraded):
        build_algebra((2, 1), table)


def test_jacobi_violation():
    table = {
        ((1, 2), (1, 3)): {(2, 1): 1},
        ((1, 3), (1, 1)): {(2, 2): 1},
        ((1, 1), (1, 2)): {(2, 3): 1},
        ((1, 1), (2, 1)): {(3, 1): 1},
    }
    with pytest.raises(JacobiViolation):
        build_algebra((3, 3, 1), table)


def test_not_stratified():
    with pytest.raises(NotStratified):
        build_algebra((2, 2), {((1, 1), (1, 2)): {(2, 1): 1}})


def test_antisymmetry_violations():
    with pytest.raises(AntisymmetryViolation):
        build_algebra((2, 1), {((1, 1), (1, 1)): {(2, 1): 1}})
    with pytest.raises(AntisymmetryViolation):
        build_algebra((2, 1), {((1, 1), (1, 2)): {(2, 1): 1}, ((1, 2), (1, 1)): {(2, 1): 1}})


def test_bad_layers():
    with pytest.raises(ParseError):
        build_algebra((), {})
    with pytest.raises(ParseError):
        build_algebra((2, 0), {})


def test_heisenberg_bracket(h1):
    e1, e2, e3 = basis(h1)
    assert bracket(e1, e2) == e3
    assert bracket(e2, e1) == e3.scale(-1)
    assert bracket(e1, e3).is_zero()


def test_engel_nested_bracket(engel):
    e1, e2, e3, e4 = basis(engel)
    assert nested_bracket([e1, e1, e2]) == e4
    assert nested_bracket([e2, e1, e2]).is_zero()


def test_bracket_is_bilinear(engel):
    e = basis(engel)
    u = e[0].scale(Fraction(2, 3)) + e[1].scale(-3)
    v = e[1].scale(Fraction(1, 2)) + e[2]
    w = e[0] + e[2].scale(5)
    assert bracket(u + w, v) == bracket(u, v) + bracket(w, v)
    assert bracket(u.scale(7), v) == bracket(u, v).scale(7)
    assert bracket(u, v) == bracket(v, u).scale(-1)


def test_nilpotency(any_group):
    elements = basis(any_group)
    for word in itertools.product(range(any_group.N), repeat=any_group.step + 1):
        assert nested_bracket([elements[i] for i in word]).is_zero()


def test_bracket_across_algebras(h1, engel):
    with pytest.raises(AlgebraMismatch):
        bracket(AlgebraElement.basis(h1, 0), AlgebraElement.basis(engel, 0))


def test_group_definition_file(tmp_path, engel):
    path = tmp_path / "engel.json"
    path.write_text(json.dumps(dump_group(engel)))
    assert load_group_file(path) == engel
    assert group_from_definition(dump_group(engel)) == engel


def test_group_file_errors(tmp_path):
    with pytest.raises(ParseError):
        load_group_file(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text('{"brackets": []}')
    with pytest.raises(ParseError):
        load_group_file(bad)
