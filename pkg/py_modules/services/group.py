"""
Carnot group layer
Exact BCH group law via the truncated Dynkin series, dilations, gauge and the group law as polynomials
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

import runtime
from constants import LIMITS, SAMPLING
from models.errors import ArityMismatch, DegenerateSample, GroupMismatch, NonpositiveLambda
from models.serialization import format_coords
from services.algebra import Stratification, _uses_floats, bracket_coords
from services.cache import group_tables
from services.poly import StratifiedPolynomial

Word = Tuple[int, ...]  # letters 0 (first argument) and 1 (second argument)


@dataclass(frozen=True)
class GroupElement:
    coords: Tuple
    group: Stratification

    def __post_init__(self):
        if len(self.coords) != self.group.N:
            raise ArityMismatch(
                f"expected {self.group.N} coordinates, got {len(self.coords)}",
                {"group": self.group.name, "coords": format_coords(self.coords)},
            )

    @classmethod
    def identity(cls, group: Stratification) -> "GroupElement":
        return cls(tuple(Fraction(0) for _ in range(group.N)), group)

    @classmethod
    def of(cls, group: Stratification, coords: Sequence) -> "GroupElement":
        return cls(tuple(_normalize_scalar(c) for c in coords), group)

    def layer(self, j: int) -> Tuple:
        return tuple(self.coords[i] for i in self.group.layer_slice(j))

    def is_identity(self) -> bool:
        return all(c == 0 for c in self.coords)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return bch_product(self, other)

    def __str__(self) -> str:
        return format_coords(self.coords)


def _normalize_scalar(value):
    if isinstance(value, (Fraction, float)):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, np.floating):
        return float(value)
    return value


# ---------------------------
# Dynkin series
# ---------------------------

def _dynkin_words(step: int) -> Dict[Word, Fraction]:
    """Coefficients of right-nested bracket words in log(exp X exp Y), up to length `step`

    Words ending in a repeated letter are dropped; their right-nested
    bracket vanishes identically.
    """
    coefficients: Dict[Word, Fraction] = {}
    pairs = [(r, s) for r in range(step + 1) for s in range(step + 1) if 1 <= r + s <= step]

    def walk(chosen: List[Tuple[int, int]], total: int):
        if chosen:
            n = len(chosen)
            word: Word = tuple(letter for r, s in chosen for letter in (0,) * r + (1,) * s)
            if len(word) == 1 or word[-1] != word[-2]:
                denom = total
                for r, s in chosen:
                    denom *= math.factorial(r) * math.factorial(s)
                sign = 1 if n % 2 else -1
                coefficients[word] = coefficients.get(word, Fraction(0)) + Fraction(sign, n * denom)
        for r, s in pairs:
            if total + r + s <= step:
                walk(chosen + [(r, s)], total + r + s)

    walk([], 0)
    return {w: c for w, c in coefficients.items() if c != 0}


def dynkin_coefficients(step: int) -> Dict[Word, Fraction]:
    if step > LIMITS["MAX_STEP_FOR_DYNKIN"]:
        raise ValueError(f"Dynkin tables are limited to step {LIMITS['MAX_STEP_FOR_DYNKIN']}, got {step}")
    return group_tables.get_or_build("dynkin", step, lambda: _dynkin_words(step))


def bch_coords(a: Sequence, b: Sequence, group: Stratification) -> List:
    """log(exp a exp b) in coordinates; entries may be Fractions, floats, numpy arrays or polynomials"""
    numeric = _uses_floats(a) or _uses_floats(b)
    operands = (list(a), list(b))
    nested: Dict[Word, List] = {(0,): operands[0], (1,): operands[1]}

    def right_nested(word: Word) -> List:
        if word not in nested:
            nested[word] = bracket_coords(operands[word[0]], right_nested(word[1:]), group)
        return nested[word]

    out: List[Any] = [0] * group.N
    for word, coeff in sorted(dynkin_coefficients(group.step).items(), key=lambda item: (len(item[0]), item[0])):
        value = right_nested(word)
        c = float(coeff) if numeric else coeff
        for i, v in enumerate(value):
            if isinstance(v, int) and v == 0:
                continue
            out[i] = out[i] + c * v
    zero = 0.0 if numeric else Fraction(0)
    return [zero if isinstance(v, int) and v == 0 else v for v in out]


# ---------------------------
# Group operations
# ---------------------------

def _check_same(p: GroupElement, q: GroupElement):
    if p.group != q.group:
        raise GroupMismatch(f"{p.group!r} vs {q.group!r}")


def bch_product(p: GroupElement, q: GroupElement) -> GroupElement:
    _check_same(p, q)
    return GroupElement(tuple(bch_coords(p.coords, q.coords, p.group)), p.group)


def inverse(p: GroupElement) -> GroupElement:
    return GroupElement(tuple(-c for c in p.coords), p.group)


def dilate_coords(lam, coords: Sequence, group: Stratification) -> List:
    return [c * lam ** j for c, j in zip(coords, group.layer_of)]


def dilate(lam, p: GroupElement) -> GroupElement:
    if lam <= 0:
        raise NonpositiveLambda(f"dilation factor must be positive, got {lam}", {"lambda": lam})
    if isinstance(lam, int):
        lam = Fraction(lam)
    return GroupElement(tuple(dilate_coords(lam, p.coords, p.group)), p.group)


def gauge_power_coords(coords: Sequence, group: Stratification):
    """|p|^(2 r!) = sum_j (|xi_j|^2)^(r!/j); exact on rationals, vectorized on arrays"""
    rf = math.factorial(group.step)
    total: Any = 0
    for j in range(1, group.step + 1):
        squared: Any = 0
        for i in group.layer_slice(j):
            squared = squared + coords[i] * coords[i]
        total = total + squared ** (rf // j)
    return total


def gauge_power(p: GroupElement):
    return gauge_power_coords(p.coords, p.group)


def gauge_coords(coords: Sequence, group: Stratification):
    exponent = 1.0 / (2 * math.factorial(group.step))
    power = gauge_power_coords(coords, group)
    if isinstance(power, np.ndarray):
        return np.power(power.astype(float), exponent)
    return float(power) ** exponent


def gauge(p: GroupElement) -> float:
    return gauge_coords(p.coords, p.group)


def gauge_distance_coords(a: Sequence, b: Sequence, group: Stratification):
    """d(a, b) = |b^-1 o a| on coordinate lists (floats or arrays)"""
    return gauge_coords(bch_coords([-c for c in b], a, group), group)


def gauge_distance(p: GroupElement, q: GroupElement) -> float:
    _check_same(p, q)
    return gauge_coords(bch_coords(inverse(q).coords, p.coords, p.group), p.group)


def euclidean_distance_coords(a: Sequence, b: Sequence):
    total: Any = 0.0
    for x, y in zip(a, b):
        diff = x - y
        total = total + diff * diff
    return np.sqrt(total)


def euclidean_distance(p: GroupElement, q: GroupElement) -> float:
    """Riemannian distance d_e: Euclidean distance in exponential coordinates"""
    _check_same(p, q)
    return float(euclidean_distance_coords([float(c) for c in p.coords], [float(c) for c in q.coords]))


def homogeneous_dimension(group: Stratification) -> int:
    return group.Q


def exp_coords(group: Stratification, index: int, t) -> List:
    """Coordinates of exp(t e_index)"""
    return [t if i == index else 0.0 * t for i in range(group.N)]


# ---------------------------
# Group law as a polynomial map
# ---------------------------

@dataclass(frozen=True)
class GroupLawMap:
    """N polynomials in 2N variables (p, p') giving the coordinates of p o p'"""
    components: Tuple[StratifiedPolynomial, ...]
    group: Stratification

    def evaluate(self, p: GroupElement, q: GroupElement) -> GroupElement:
        _check_same(p, q)
        point = list(p.coords) + list(q.coords)
        return GroupElement(tuple(c.evaluate_coords(point) for c in self.components), self.group)

    def specialize_left(self, g_coords: Sequence) -> List[StratifiedPolynomial]:
        """q -> g o q as N polynomials in the N variables of q"""
        variables = StratifiedPolynomial.variables(self.group)
        values = [StratifiedPolynomial.constant(self.group, c) for c in g_coords] + variables
        return [c.substitute(values) for c in self.components]

    def partial_right(self, index: int) -> List[StratifiedPolynomial]:
        """d/ds of p o exp(s e_index) at s = 0, as polynomials in p"""
        n = self.group.N
        variables = StratifiedPolynomial.variables(self.group)
        zeros = [StratifiedPolynomial.zero(self.group) for _ in range(n)]
        return [c.derivative(n + index).substitute(variables + zeros) for c in self.components]

    def to_dict(self) -> Dict[str, Any]:
        return {"components": [c.to_dict() for c in self.components]}


def _build_law(group: Stratification) -> GroupLawMap:
    variables = StratifiedPolynomial.variables(group, 2 * group.N)
    components = bch_coords(variables[: group.N], variables[group.N:], group)
    law = GroupLawMap(tuple(components), group)
    runtime.logger.debug(
        f"Group law for {group!r}: {sum(len(c.terms) for c in components)} terms over {group.N} components"
    )
    return law


def group_law_polynomials(group: Stratification) -> GroupLawMap:
    return group_tables.get_or_build("group_law", group, lambda: _build_law(group))


# ---------------------------
# Random elements
# ---------------------------

def random_rational_element(group: Stratification, rng: np.random.Generator, bound: int = 5, denominator: int = 4) -> GroupElement:
    """Small random rationals n/d with |n| <= bound*d, for exact property checks"""
    coords = tuple(
        Fraction(int(rng.integers(-bound * denominator, bound * denominator + 1)), int(rng.integers(1, denominator + 1)))
        for _ in range(group.N)
    )
    return GroupElement(coords, group)


def random_rational_lambda(rng: np.random.Generator, denominator: int = 4) -> Fraction:
    return Fraction(int(rng.integers(1, 4 * denominator + 1)), int(rng.integers(1, denominator + 1)))


def sample_gauge_ball(group: Stratification, radius: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """n uniform samples of B(radius), shape (N, n)

    Rejection from the box [-1, 1]^N onto the unit ball, then dilation;
    dilations carry the uniform measure to the uniform measure.
    """
    batch = max(2 * n, 256)
    kept: List[np.ndarray] = []
    count = 0
    for _ in range(SAMPLING["MAX_REJECTION_ROUNDS"]):
        box = rng.uniform(-1.0, 1.0, size=(group.N, batch))
        inside = gauge_power_coords(list(box), group) <= 1.0
        kept.append(box[:, inside])
        count += int(inside.sum())
        if count >= n:
            break
    else:
        raise DegenerateSample(f"rejection sampling found {count} of {n} points in the unit gauge ball",
                               {"group": group.name})
    unit = np.concatenate(kept, axis=1)[:, :n]
    scale = np.array([radius ** j for j in group.layer_of], dtype=float)[:, None]
    return unit * scale


def all_words(m: int, length: int) -> List[Tuple[int, ...]]:
    """Horizontal words over 1..m of exactly this length"""
    return [tuple(w) for w in product(range(1, m + 1), repeat=length)]
