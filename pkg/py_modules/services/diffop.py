"""
Differential operators with polynomial coefficients
Left-invariant vector fields derived from the group law, their compositions and the sub-Laplacian
"""
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

import runtime
from constants import TOLERANCES
from models.errors import BadWord, GroupMismatch, NotElliptic, NotSymmetric
from services import linalg
from services.algebra import Stratification
from services.cache import group_tables
from services.group import group_law_polynomials
from services.poly import StratifiedPolynomial

Slot = int
SlotPair = Tuple[int, int]


def _poly(group: Stratification, value) -> StratifiedPolynomial:
    if isinstance(value, StratifiedPolynomial):
        if value.group != group:
            raise GroupMismatch(f"{value.group!r} vs {group!r}")
        return value
    return StratifiedPolynomial.constant(group, value)


@dataclass(frozen=True)
class VectorField:
    """sum_c coefficients[c] * d/dx_c"""
    coefficients: Tuple[StratifiedPolynomial, ...]
    group: Stratification
    label: str = "X"

    def apply(self, P: StratifiedPolynomial) -> StratifiedPolynomial:
        if P.group != self.group:
            raise GroupMismatch(f"{P.group!r} vs {self.group!r}")
        out = StratifiedPolynomial.zero(self.group)
        for c, coeff in enumerate(self.coefficients):
            if coeff and P.depends_on(c):
                out = out + coeff * P.derivative(c)
        return out

    def value_at_identity(self) -> List[Fraction]:
        return [c.constant_term() for c in self.coefficients]

    def divergence(self) -> StratifiedPolynomial:
        out = StratifiedPolynomial.zero(self.group)
        for c, coeff in enumerate(self.coefficients):
            out = out + coeff.derivative(c)
        return out

    def __str__(self) -> str:
        names = self.group.coordinate_names
        parts = []
        for name, coeff in zip(names, self.coefficients):
            if coeff.is_zero():
                continue
            parts.append(f"d_{name}" if coeff == 1 else f"({coeff})*d_{name}")
        return f"{self.label} = " + (" + ".join(parts) or "0")


@dataclass
class DiffOperator:
    """Second-order operator: unordered slot pairs, single slots and a zeroth-order term"""
    group: Stratification
    second_order: Dict[SlotPair, StratifiedPolynomial] = field(default_factory=dict)
    first_order: Dict[Slot, StratifiedPolynomial] = field(default_factory=dict)
    zeroth_order: Optional[StratifiedPolynomial] = None

    def __post_init__(self):
        if self.zeroth_order is None:
            self.zeroth_order = StratifiedPolynomial.zero(self.group)
        self._prune()

    def _prune(self):
        self.second_order = {k: v for k, v in self.second_order.items() if not v.is_zero()}
        self.first_order = {k: v for k, v in self.first_order.items() if not v.is_zero()}

    @classmethod
    def from_vector_field(cls, X: VectorField) -> "DiffOperator":
        return cls(X.group, {}, {c: coeff for c, coeff in enumerate(X.coefficients)})

    @classmethod
    def compose(cls, X: VectorField, Y: VectorField) -> "DiffOperator":
        """X o Y by the product rule; order matters"""
        if X.group != Y.group:
            raise GroupMismatch(f"{X.group!r} vs {Y.group!r}")
        second: Dict[SlotPair, StratifiedPolynomial] = {}
        for a, xa in enumerate(X.coefficients):
            if xa.is_zero():
                continue
            for b, yb in enumerate(Y.coefficients):
                if yb.is_zero():
                    continue
                pair = (min(a, b), max(a, b))
                second[pair] = second.get(pair, StratifiedPolynomial.zero(X.group)) + xa * yb
        first = {b: X.apply(yb) for b, yb in enumerate(Y.coefficients)}
        return cls(X.group, second, first)

    def __add__(self, other: "DiffOperator") -> "DiffOperator":
        if other.group != self.group:
            raise GroupMismatch(f"{self.group!r} vs {other.group!r}")
        second = dict(self.second_order)
        for k, v in other.second_order.items():
            second[k] = second[k] + v if k in second else v
        first = dict(self.first_order)
        for k, v in other.first_order.items():
            first[k] = first[k] + v if k in first else v
        return DiffOperator(self.group, second, first, self.zeroth_order + other.zeroth_order)

    def scale(self, coefficient) -> "DiffOperator":
        """Left multiplication by a polynomial or scalar coefficient"""
        a = _poly(self.group, coefficient)
        return DiffOperator(
            self.group,
            {k: a * v for k, v in self.second_order.items()},
            {k: a * v for k, v in self.first_order.items()},
            a * self.zeroth_order,
        )

    def apply(self, P: StratifiedPolynomial) -> StratifiedPolynomial:
        if P.group != self.group:
            raise GroupMismatch(f"{P.group!r} vs {self.group!r}")
        out = self.zeroth_order * P
        for c, coeff in self.first_order.items():
            if P.depends_on(c):
                out = out + coeff * P.derivative(c)
        for (a, b), coeff in self.second_order.items():
            if P.depends_on(a) and P.depends_on(b):
                out = out + coeff * P.derivative(a).derivative(b)
        return out

    def has_constant_coefficients(self) -> bool:
        parts = list(self.second_order.values()) + list(self.first_order.values()) + [self.zeroth_order]
        return all(p.is_constant() for p in parts)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "second": [{"slots": list(k), "coeff": v.to_dict()} for k, v in sorted(self.second_order.items())],
            "first": [{"slot": k, "coeff": v.to_dict()} for k, v in sorted(self.first_order.items())],
            "zeroth": self.zeroth_order.to_dict(),
        }

    @classmethod
    def from_dict(cls, group: Stratification, payload: Dict[str, Any]) -> "DiffOperator":
        second = {tuple(e["slots"]): StratifiedPolynomial.from_dict(group, e["coeff"]) for e in payload.get("second", [])}
        first = {int(e["slot"]): StratifiedPolynomial.from_dict(group, e["coeff"]) for e in payload.get("first", [])}
        zeroth = StratifiedPolynomial.from_dict(group, payload["zeroth"]) if "zeroth" in payload else None
        return cls(group, second, first, zeroth)


def _build_fields(group: Stratification) -> Tuple[VectorField, ...]:
    law = group_law_polynomials(group)
    fields = []
    for index, (j, s) in enumerate(group.labels):
        label = f"X{s}" if j == 1 else f"X({j},{s})"
        fields.append(VectorField(tuple(law.partial_right(index)), group, label))
    runtime.logger.debug(f"Derived {len(fields)} left-invariant fields for {group!r}")
    return tuple(fields)


def left_invariant_fields(group: Stratification) -> List[VectorField]:
    """All N fields d/ds (p o exp(s e_c)) at s = 0; horizontal ones first"""
    return list(group_tables.get_or_build("fields", group, lambda: _build_fields(group)))


def horizontal_fields(group: Stratification) -> List[VectorField]:
    return left_invariant_fields(group)[: group.m]


def _check_word(word: Sequence[int], group: Stratification):
    for i in word:
        if not isinstance(i, (int, np.integer)) or not 1 <= i <= group.m:
            raise BadWord(f"word {tuple(word)} has a letter outside 1..{group.m}", {"word": tuple(word)})


def horizontal_derivative(word: Sequence[int], P: StratifiedPolynomial) -> StratifiedPolynomial:
    """X^I P = X_{i_1}(X_{i_2}(...(X_{i_k} P)))"""
    _check_word(word, P.group)
    fields = horizontal_fields(P.group)
    out = P
    for i in reversed(word):
        if out.is_zero():
            break
        out = fields[i - 1].apply(out)
    return out


def _build_sub_laplacian(group: Stratification) -> DiffOperator:
    total = DiffOperator(group)
    for X in horizontal_fields(group):
        total = total + DiffOperator.compose(X, X)
    return total


def sub_laplacian(group: Stratification) -> DiffOperator:
    return group_tables.get_or_build("sub_laplacian", group, lambda: _build_sub_laplacian(group))


def operator_from_matrix(A: Sequence[Sequence], group: Stratification, lam: Optional[float] = None) -> DiffOperator:
    """sum_ij a_ij X_i X_j; ellipticity is checked only for constant A"""
    m = group.m
    if len(A) != m or any(len(row) != m for row in A):
        raise NotSymmetric(f"coefficient matrix must be {m}x{m}", {"shape": (len(A), len(A[0]) if A else 0)})
    entries = [[_poly(group, v) for v in row] for row in A]
    for i in range(m):
        for j in range(i + 1, m):
            if entries[i][j] != entries[j][i]:
                raise NotSymmetric(f"a[{i + 1}][{j + 1}] != a[{j + 1}][{i + 1}]", {"pair": (i + 1, j + 1)})

    if all(e.is_constant() for row in entries for e in row):
        numeric = np.array([[float(e.constant_term()) for e in row] for row in entries])
        eigenvalues = np.linalg.eigvalsh(numeric)
        slack = TOLERANCES["ELLIPTIC_SLACK"]
        low, high = float(eigenvalues.min()), float(eigenvalues.max())
        if lam is not None:
            if low < lam - slack or high > 1.0 / lam + slack:
                raise NotElliptic(
                    f"eigenvalues [{low:.6g}, {high:.6g}] outside [{lam}, {1.0 / lam}]",
                    {"lambda": lam, "min": low, "max": high},
                )
        elif low <= slack:
            raise NotElliptic(f"constant coefficient matrix is not positive definite (min eigenvalue {low:.6g})",
                              {"min": low})

    fields = horizontal_fields(group)
    total = DiffOperator(group)
    for i in range(m):
        for j in range(m):
            if entries[i][j].is_zero():
                continue
            total = total + DiffOperator.compose(fields[i], fields[j]).scale(entries[i][j])
    return total


def apply_operator(L: DiffOperator, P: StratifiedPolynomial) -> StratifiedPolynomial:
    return L.apply(P)


def commutator(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y] = XY - YX, a first-order field"""
    if X.group != Y.group:
        raise GroupMismatch(f"{X.group!r} vs {Y.group!r}")
    coefficients = tuple(X.apply(yc) - Y.apply(xc) for xc, yc in zip(X.coefficients, Y.coefficients))
    return VectorField(coefficients, X.group, f"[{X.label},{Y.label}]")


def bracket_generation_rank(group: Stratification) -> int:
    """Dimension spanned at e by the horizontal fields and their iterated brackets"""
    layer = horizontal_fields(group)
    generators = list(layer)
    values = [X.value_at_identity() for X in layer]
    for _ in range(1, group.step):
        layer = [commutator(X, Y) for X in generators for Y in layer]
        values.extend(Z.value_at_identity() for Z in layer)
    generated = linalg.rank(values)
    runtime.logger.debug(f"Bracket generation rank for {group!r}: {generated} of {group.N}")
    return generated
