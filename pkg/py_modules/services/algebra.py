"""
Stratified nilpotent Lie algebras
Validated structure constants, built-in examples and exact brackets
"""
import json
import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

import runtime
from models.errors import (
    AlgebraMismatch,
    AntisymmetryViolation,
    JacobiViolation,
    NotGraded,
    NotStratified,
    ParseError,
    UnknownName,
)
from models.serialization import format_fraction, parse_fraction
from services import linalg

Label = Tuple[int, int]
Vector = Dict[int, Fraction]


class Stratification:
    """Layer dimensions plus structure constants for ordered pairs a < b"""

    def __init__(self, layer_dims: Sequence[int], structure: Dict[Tuple[int, int], Vector],
                 name: Optional[str] = None, coordinate_names: Optional[Sequence[str]] = None):
        self.layer_dims = tuple(int(m) for m in layer_dims)
        self.structure = {pair: dict(vec) for pair, vec in structure.items() if vec}
        self.name = name
        self.N = sum(self.layer_dims)
        self.Q = sum(j * m for j, m in enumerate(self.layer_dims, start=1))
        self.step = len(self.layer_dims)
        self.m = self.layer_dims[0]
        self.labels: Tuple[Label, ...] = tuple(
            (j, s) for j, m in enumerate(self.layer_dims, start=1) for s in range(1, m + 1)
        )
        self.layer_of: Tuple[int, ...] = tuple(j for j, _ in self.labels)
        self.coordinate_names = tuple(coordinate_names) if coordinate_names else tuple(
            f"x{i}" for i in range(1, self.N + 1)
        )
        self.structure_float = {
            pair: {c: float(v) for c, v in vec.items()} for pair, vec in self.structure.items()
        }
        self._key = (
            self.layer_dims,
            tuple(sorted((a, b, tuple(sorted(vec.items()))) for (a, b), vec in self.structure.items())),
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, Stratification) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        return f"Stratification({self.name or 'custom'}, layers={self.layer_dims})"

    @property
    def x_m(self) -> int:
        """Index of the last horizontal coordinate"""
        return self.m - 1

    def index_of(self, label: Sequence[int]) -> int:
        j, s = int(label[0]), int(label[1])
        try:
            return self.labels.index((j, s))
        except ValueError:
            raise ParseError(f"no basis vector {(j, s)} in layers {self.layer_dims}", {"label": (j, s)})

    def layer_slice(self, j: int) -> range:
        start = sum(self.layer_dims[: j - 1])
        return range(start, start + self.layer_dims[j - 1])

    def bracket_basis(self, a: int, b: int) -> Vector:
        if a == b:
            return {}
        if a < b:
            return self.structure.get((a, b), {})
        return {c: -v for c, v in self.structure.get((b, a), {}).items()}

    def bracket_vectors(self, u: Vector, v: Vector) -> Vector:
        out: Vector = {}
        for a, ua in u.items():
            for b, vb in v.items():
                for c, s in self.bracket_basis(a, b).items():
                    out[c] = out.get(c, Fraction(0)) + s * ua * vb
        return {c: x for c, x in out.items() if x != 0}


@dataclass(frozen=True)
class AlgebraElement:
    coords: Tuple
    algebra: Stratification

    def __post_init__(self):
        if len(self.coords) != self.algebra.N:
            raise ParseError(f"expected {self.algebra.N} coordinates, got {len(self.coords)}")

    @classmethod
    def basis(cls, algebra: Stratification, index: int) -> "AlgebraElement":
        return cls(tuple(Fraction(int(i == index)) for i in range(algebra.N)), algebra)

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        _check_same(self.algebra, other.algebra)
        return AlgebraElement(tuple(a + b for a, b in zip(self.coords, other.coords)), self.algebra)

    def scale(self, alpha) -> "AlgebraElement":
        return AlgebraElement(tuple(alpha * a for a in self.coords), self.algebra)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)


def _check_same(g1: Stratification, g2: Stratification):
    if g1 != g2:
        raise AlgebraMismatch(f"{g1!r} vs {g2!r}")


def _is_zero(value) -> bool:
    if isinstance(value, (int, float, Fraction)):
        return value == 0
    if hasattr(value, "is_zero"):
        return value.is_zero()
    return False


def _uses_floats(coords: Iterable) -> bool:
    return any(isinstance(c, (float, np.floating, np.ndarray)) for c in coords)


def bracket_coords(a: Sequence, b: Sequence, algebra: Stratification) -> List:
    """Bilinear bracket on coordinate lists over any ring (Fractions, floats, arrays, polynomials)"""
    table = algebra.structure_float if _uses_floats(a) or _uses_floats(b) else algebra.structure
    out: List[Any] = [0] * algebra.N
    for (i, j), result in table.items():
        ai, aj, bi, bj = a[i], a[j], b[i], b[j]
        left = None if (_is_zero(ai) or _is_zero(bj)) else ai * bj
        right = None if (_is_zero(aj) or _is_zero(bi)) else aj * bi
        if left is None and right is None:
            continue
        if right is None:
            coeff = left
        elif left is None:
            coeff = -right
        else:
            coeff = left - right
        for c, s in result.items():
            out[c] = out[c] + s * coeff
    return out


def bracket(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    _check_same(a.algebra, b.algebra)
    coords = bracket_coords(a.coords, b.coords, a.algebra)
    return AlgebraElement(tuple(Fraction(c) if isinstance(c, int) else c for c in coords), a.algebra)


def nested_bracket(elements: Sequence[AlgebraElement]) -> AlgebraElement:
    """Right-nested [a1, [a2, [..., ak]]]"""
    result = elements[-1]
    for element in reversed(elements[:-1]):
        result = bracket(element, result)
    return result


def _normalize_table(layer_dims: Sequence[int], bracket_table) -> List[Tuple[Label, Label, Dict[Label, Fraction]]]:
    """Accept a {(left, right): {basis: coeff}} mapping or the JSON entry list"""
    entries = []
    if isinstance(bracket_table, dict):
        for (left, right), result in bracket_table.items():
            entries.append((tuple(left), tuple(right), {tuple(k): Fraction(v) for k, v in result.items()}))
        return entries
    for entry in bracket_table or []:
        try:
            result = {tuple(item["basis"]): parse_fraction(item["coeff"]) for item in entry["result"]}
            entries.append((tuple(entry["left"]), tuple(entry["right"]), result))
        except (KeyError, TypeError) as e:
            raise ParseError(f"malformed bracket entry {entry!r}") from e
    return entries


def build_algebra(layer_dims: Sequence[int], bracket_table, name: Optional[str] = None,
                  coordinate_names: Optional[Sequence[str]] = None) -> Stratification:
    """Validate and build a stratification; every invariant is checked eagerly"""
    if not layer_dims or any(int(m) <= 0 for m in layer_dims):
        raise ParseError(f"layer dimensions must be positive and non-empty: {layer_dims}")

    skeleton = Stratification(layer_dims, {}, name)
    structure: Dict[Tuple[int, int], Vector] = {}
    for left, right, result in _normalize_table(layer_dims, bracket_table):
        a, b = skeleton.index_of(left), skeleton.index_of(right)
        vec = {skeleton.index_of(k): v for k, v in result.items() if v != 0}
        if a == b:
            if vec:
                raise AntisymmetryViolation(f"[e{left}, e{left}] must vanish", {"pair": (left, right)})
            continue
        if a > b:
            a, b = b, a
            vec = {c: -v for c, v in vec.items()}
        if (a, b) in structure and structure[(a, b)] != vec:
            raise AntisymmetryViolation(
                f"[e{left}, e{right}] disagrees with the opposite orientation", {"pair": (left, right)}
            )
        structure[(a, b)] = vec

    algebra = Stratification(layer_dims, structure, name, coordinate_names)
    _check_graded(algebra)
    _check_jacobi(algebra)
    _check_stratified(algebra)
    runtime.logger.debug(f"Built algebra {algebra!r}: N={algebra.N}, Q={algebra.Q}")
    return algebra


def _check_graded(algebra: Stratification):
    for (a, b), vec in algebra.structure.items():
        target = algebra.layer_of[a] + algebra.layer_of[b]
        for c in vec:
            if algebra.layer_of[c] != target:
                raise NotGraded(
                    f"[e{algebra.labels[a]}, e{algebra.labels[b]}] has a component in layer "
                    f"{algebra.layer_of[c]}, expected {target}",
                    {"pair": (algebra.labels[a], algebra.labels[b])},
                )


def _check_jacobi(algebra: Stratification):
    for a, b, c in combinations(range(algebra.N), 3):
        ea, eb, ec = {a: Fraction(1)}, {b: Fraction(1)}, {c: Fraction(1)}
        total: Vector = {}
        for x, y, z in ((ea, eb, ec), (eb, ec, ea), (ec, ea, eb)):
            for idx, v in algebra.bracket_vectors(x, algebra.bracket_vectors(y, z)).items():
                total[idx] = total.get(idx, Fraction(0)) + v
        if any(v != 0 for v in total.values()):
            labels = tuple(algebra.labels[i] for i in (a, b, c))
            raise JacobiViolation(f"Jacobi identity fails on {labels}", {"triple": labels})


def _check_stratified(algebra: Stratification):
    for j in range(1, algebra.step):
        rows = []
        for i in algebra.layer_slice(1):
            for b in algebra.layer_slice(j):
                vec = algebra.bracket_basis(i, b)
                rows.append([vec.get(c, Fraction(0)) for c in algebra.layer_slice(j + 1)])
        generated = linalg.rank(rows) if rows else 0
        if generated != algebra.layer_dims[j]:
            raise NotStratified(
                f"[g_1, g_{j}] spans dimension {generated}, layer {j + 1} has dimension {algebra.layer_dims[j]}",
                {"layer": j},
            )


_BUILTIN_PATTERN = re.compile(r"^\s*(heisenberg|free_step2|engel)\s*(?:\(?\s*(\d+)\s*\)?)?\s*$")


def heisenberg(n: int) -> Stratification:
    if n < 1:
        raise UnknownName(f"heisenberg({n}) needs n >= 1")
    table = {((1, i), (1, n + i)): {(2, 1): 1} for i in range(1, n + 1)}
    if n == 1:
        names = ("x", "y", "t")
    else:
        names = tuple(f"x{i}" for i in range(1, n + 1)) + tuple(f"y{i}" for i in range(1, n + 1)) + ("t",)
    return build_algebra((2 * n, 1), table, name=f"heisenberg{n}", coordinate_names=names)


def engel() -> Stratification:
    table = {((1, 1), (1, 2)): {(2, 1): 1}, ((1, 1), (2, 1)): {(3, 1): 1}}
    return build_algebra((2, 1, 1), table, name="engel")


def free_step2(m: int) -> Stratification:
    if m < 2:
        raise UnknownName(f"free_step2({m}) needs m >= 2")
    pairs = list(combinations(range(1, m + 1), 2))
    table = {((1, i), (1, j)): {(2, s): 1} for s, (i, j) in enumerate(pairs, start=1)}
    names = tuple(f"x{i}" for i in range(1, m + 1)) + tuple(f"y{i}{j}" for i, j in pairs)
    return build_algebra((m, len(pairs)), table, name=f"free_step2({m})", coordinate_names=names)


def builtin_group(name: str) -> Stratification:
    """heisenberg(n) / heisenbergN, engel, free_step2(m)"""
    match = _BUILTIN_PATTERN.match(str(name))
    if not match:
        raise UnknownName(f"unknown group {name!r}", {"name": name})
    family, arg = match.group(1), match.group(2)
    if family == "engel":
        if arg is not None:
            raise UnknownName(f"engel takes no parameter: {name!r}", {"name": name})
        return engel()
    if arg is None:
        if family == "heisenberg":
            return heisenberg(1)
        raise UnknownName(f"{family} needs a parameter: {name!r}", {"name": name})
    return heisenberg(int(arg)) if family == "heisenberg" else free_step2(int(arg))


def dump_group(algebra: Stratification) -> Dict[str, Any]:
    brackets = []
    for (a, b), vec in sorted(algebra.structure.items()):
        brackets.append({
            "left": list(algebra.labels[a]),
            "right": list(algebra.labels[b]),
            "result": [{"basis": list(algebra.labels[c]), "coeff": format_fraction(v)} for c, v in sorted(vec.items())],
        })
    return {"name": algebra.name or "custom", "layers": list(algebra.layer_dims), "brackets": brackets}


def group_from_definition(definition: Dict[str, Any]) -> Stratification:
    try:
        layers = definition["layers"]
    except (KeyError, TypeError) as e:
        raise ParseError("group definition needs 'layers'") from e
    return build_algebra(layers, definition.get("brackets", []), name=definition.get("name"),
                         coordinate_names=definition.get("coordinates"))


def load_group_file(path: Path) -> Stratification:
    try:
        with open(path, "r") as f:
            definition = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ParseError(f"cannot read group file {path}: {e}") from e
    runtime.logger.info(f"Loaded group definition from {path}")
    return group_from_definition(definition)
