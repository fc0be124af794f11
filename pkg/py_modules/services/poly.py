"""
Stratified polynomials
Sparse exact-rational polynomials graded by weighted degree, with translation and dilation actions
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from models.errors import ArityMismatch, GroupMismatch, NonpositiveLambda, ParseError
from models.serialization import format_fraction, parse_fraction
from services.algebra import Stratification

Exponents = Tuple[int, ...]


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    return Fraction(value)


def _weights(group: Stratification, nvars: int) -> Tuple[int, ...]:
    if nvars % group.N:
        raise ArityMismatch(f"{nvars} variables is not a multiple of N={group.N}")
    return group.layer_of * (nvars // group.N)


@dataclass(frozen=True)
class MultiIndex:
    """Exponent vector laid out layer by layer"""
    exponents: Exponents
    group: Stratification

    @property
    def weighted_degree(self) -> int:
        return sum(w * e for w, e in zip(_weights(self.group, len(self.exponents)), self.exponents))

    @property
    def length(self) -> int:
        return sum(self.exponents)

    @property
    def beta_m(self) -> int:
        """Exponent of x_m, the last horizontal coordinate"""
        return self.exponents[self.group.x_m]

    def monomial(self) -> "StratifiedPolynomial":
        return StratifiedPolynomial.monomial(self.group, self.exponents)

    def shifted_m(self, delta: int = 1) -> "MultiIndex":
        e = list(self.exponents)
        e[self.group.x_m] += delta
        return MultiIndex(tuple(e), self.group)

    def __str__(self) -> str:
        return _render_monomial(self.exponents, _variable_names(self.group, len(self.exponents))) or "1"


def weighted_degree(J, group: Optional[Stratification] = None) -> int:
    if isinstance(J, MultiIndex):
        return J.weighted_degree
    return sum(w * e for w, e in zip(_weights(group, len(J)), J))


def monomial_order_key(exponents: Exponents, group: Stratification) -> Tuple:
    """(weighted degree, beta_{1,m}, lex with higher powers of earlier variables first)"""
    return (weighted_degree(exponents, group), exponents[group.x_m], tuple(-e for e in exponents))


def _variable_names(group: Stratification, nvars: int) -> Tuple[str, ...]:
    names = group.coordinate_names
    if nvars == group.N:
        return names
    return names + tuple(f"{n}'" for n in names)


def _render_monomial(exponents: Exponents, names: Sequence[str]) -> str:
    parts = []
    for name, e in zip(names, exponents):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


class StratifiedPolynomial:
    """Sparse map exponents -> Fraction; no stored zero coefficients"""

    __slots__ = ("terms", "group", "nvars")

    def __init__(self, group: Stratification, terms: Optional[Dict[Exponents, Any]] = None, nvars: Optional[int] = None):
        self.group = group
        self.nvars = nvars or group.N
        self.terms: Dict[Exponents, Fraction] = {}
        for exps, coeff in (terms or {}).items():
            if len(exps) != self.nvars:
                raise ArityMismatch(f"exponent vector {exps} has length {len(exps)}, expected {self.nvars}")
            q = _as_fraction(coeff)
            if q != 0:
                key = tuple(int(e) for e in exps)
                self.terms[key] = self.terms.get(key, Fraction(0)) + q
                if self.terms[key] == 0:
                    del self.terms[key]

    # ---------------------------
    # Constructors
    # ---------------------------

    @classmethod
    def _from_clean(cls, group: Stratification, terms: Dict[Exponents, Fraction], nvars: int) -> "StratifiedPolynomial":
        poly = cls.__new__(cls)
        poly.group = group
        poly.nvars = nvars
        poly.terms = terms
        return poly

    @classmethod
    def zero(cls, group: Stratification, nvars: Optional[int] = None) -> "StratifiedPolynomial":
        return cls._from_clean(group, {}, nvars or group.N)

    @classmethod
    def constant(cls, group: Stratification, value, nvars: Optional[int] = None) -> "StratifiedPolynomial":
        nvars = nvars or group.N
        q = _as_fraction(value)
        return cls._from_clean(group, {(0,) * nvars: q} if q else {}, nvars)

    @classmethod
    def variable(cls, group: Stratification, index: int, nvars: Optional[int] = None) -> "StratifiedPolynomial":
        nvars = nvars or group.N
        exps = [0] * nvars
        exps[index] = 1
        return cls._from_clean(group, {tuple(exps): Fraction(1)}, nvars)

    @classmethod
    def monomial(cls, group: Stratification, exponents: Sequence[int], coeff=1) -> "StratifiedPolynomial":
        return cls(group, {tuple(exponents): coeff}, len(exponents))

    @classmethod
    def variables(cls, group: Stratification, nvars: Optional[int] = None) -> List["StratifiedPolynomial"]:
        nvars = nvars or group.N
        return [cls.variable(group, i, nvars) for i in range(nvars)]

    # ---------------------------
    # Structure
    # ---------------------------

    @property
    def weights(self) -> Tuple[int, ...]:
        return _weights(self.group, self.nvars)

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def coefficient(self, exponents: Sequence[int]) -> Fraction:
        return self.terms.get(tuple(exponents), Fraction(0))

    def weighted_degree(self) -> float:
        if not self.terms:
            return float("-inf")
        w = self.weights
        return max(sum(a * e for a, e in zip(w, exps)) for exps in self.terms)

    def min_weighted_degree(self) -> float:
        if not self.terms:
            return float("inf")
        w = self.weights
        return min(sum(a * e for a, e in zip(w, exps)) for exps in self.terms)

    def ordinary_degree(self) -> float:
        if not self.terms:
            return float("-inf")
        return max(sum(exps) for exps in self.terms)

    def is_homogeneous(self, degree: int) -> bool:
        w = self.weights
        return all(sum(a * e for a, e in zip(w, exps)) == degree for exps in self.terms)

    def depends_on(self, index: int) -> bool:
        return any(exps[index] for exps in self.terms)

    def sorted_terms(self) -> List[Tuple[Exponents, Fraction]]:
        return sorted(self.terms.items(), key=lambda item: monomial_order_key(item[0], self.group))

    # ---------------------------
    # Arithmetic
    # ---------------------------

    def _coerce(self, other) -> "StratifiedPolynomial":
        if isinstance(other, StratifiedPolynomial):
            if other.group != self.group:
                raise GroupMismatch(f"{self.group!r} vs {other.group!r}")
            if other.nvars != self.nvars:
                raise ArityMismatch(f"{self.nvars} vs {other.nvars} variables")
            return other
        return StratifiedPolynomial.constant(self.group, other, self.nvars)

    def __add__(self, other) -> "StratifiedPolynomial":
        other = self._coerce(other)
        terms = dict(self.terms)
        for exps, c in other.terms.items():
            v = terms.get(exps, 0) + c
            if v:
                terms[exps] = v
            else:
                terms.pop(exps, None)
        return StratifiedPolynomial._from_clean(self.group, terms, self.nvars)

    __radd__ = __add__

    def __neg__(self) -> "StratifiedPolynomial":
        return StratifiedPolynomial._from_clean(self.group, {e: -c for e, c in self.terms.items()}, self.nvars)

    def __sub__(self, other) -> "StratifiedPolynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "StratifiedPolynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "StratifiedPolynomial":
        if not isinstance(other, StratifiedPolynomial):
            q = _as_fraction(other)
            if q == 0:
                return StratifiedPolynomial.zero(self.group, self.nvars)
            return StratifiedPolynomial._from_clean(self.group, {e: c * q for e, c in self.terms.items()}, self.nvars)
        other = self._coerce(other)
        terms: Dict[Exponents, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                key = tuple(a + b for a, b in zip(e1, e2))
                terms[key] = terms.get(key, 0) + c1 * c2
        return StratifiedPolynomial._from_clean(self.group, {e: c for e, c in terms.items() if c}, self.nvars)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "StratifiedPolynomial":
        return self * (1 / _as_fraction(scalar))

    def __pow__(self, n: int) -> "StratifiedPolynomial":
        if n < 0:
            raise ValueError("negative powers are not polynomial")
        result = StratifiedPolynomial.constant(self.group, 1, self.nvars)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, StratifiedPolynomial):
            return self.group == other.group and self.nvars == other.nvars and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == ({(0,) * self.nvars: Fraction(other)} if other else {})
        return NotImplemented

    __hash__ = None

    # ---------------------------
    # Calculus and truncation
    # ---------------------------

    def derivative(self, index: int) -> "StratifiedPolynomial":
        terms: Dict[Exponents, Fraction] = {}
        for exps, c in self.terms.items():
            e = exps[index]
            if e:
                lowered = exps[:index] + (e - 1,) + exps[index + 1:]
                terms[lowered] = c * e
        return StratifiedPolynomial._from_clean(self.group, terms, self.nvars)

    def truncate(self, kappa: int) -> "StratifiedPolynomial":
        """Drop every term of weighted degree above kappa"""
        w = self.weights
        return StratifiedPolynomial._from_clean(
            self.group,
            {e: c for e, c in self.terms.items() if sum(a * b for a, b in zip(w, e)) <= kappa},
            self.nvars,
        )

    def truncate_ordinary(self, n: int) -> "StratifiedPolynomial":
        return StratifiedPolynomial._from_clean(
            self.group, {e: c for e, c in self.terms.items() if sum(e) <= n}, self.nvars
        )

    def homogeneous_part(self, degree: int) -> "StratifiedPolynomial":
        w = self.weights
        return StratifiedPolynomial._from_clean(
            self.group,
            {e: c for e, c in self.terms.items() if sum(a * b for a, b in zip(w, e)) == degree},
            self.nvars,
        )

    # ---------------------------
    # Evaluation and composition
    # ---------------------------

    def evaluate_coords(self, coords: Sequence):
        """Exact on rational coordinates, floating on floats or numpy arrays"""
        if len(coords) != self.nvars:
            raise ArityMismatch(f"expected {self.nvars} coordinates, got {len(coords)}")
        numeric = any(isinstance(c, (float, np.floating, np.ndarray)) for c in coords)
        total: Any = 0.0 if numeric else Fraction(0)
        powers: Dict[Tuple[int, int], Any] = {}
        for exps, coeff in self.terms.items():
            term: Any = float(coeff) if numeric else coeff
            for i, e in enumerate(exps):
                if e:
                    key = (i, e)
                    if key not in powers:
                        powers[key] = coords[i] ** e
                    term = term * powers[key]
            total = total + term
        return total

    def substitute(self, values: Sequence["StratifiedPolynomial"], truncate_ordinary: Optional[int] = None,
                   truncate_weighted: Optional[int] = None) -> "StratifiedPolynomial":
        """Compose: variable i -> values[i]; optional truncation after every product"""
        if len(values) != self.nvars:
            raise ArityMismatch(f"expected {self.nvars} substitutions, got {len(values)}")
        target = values[0] if values else None
        if target is None:
            return self

        def cut(p: "StratifiedPolynomial") -> "StratifiedPolynomial":
            if truncate_ordinary is not None:
                p = p.truncate_ordinary(truncate_ordinary)
            if truncate_weighted is not None:
                p = p.truncate(truncate_weighted)
            return p

        powers: Dict[Tuple[int, int], StratifiedPolynomial] = {}

        def power(i: int, e: int) -> "StratifiedPolynomial":
            if (i, e) not in powers:
                powers[(i, e)] = values[i] if e == 1 else cut(power(i, e - 1) * values[i])
            return powers[(i, e)]

        result = StratifiedPolynomial.zero(target.group, target.nvars)
        for exps, coeff in self.terms.items():
            term = StratifiedPolynomial.constant(target.group, coeff, target.nvars)
            for i, e in enumerate(exps):
                if e:
                    term = cut(term * power(i, e))
            result = result + term
        return result

    def dilate(self, lam) -> "StratifiedPolynomial":
        lam = _as_fraction(lam)
        if lam <= 0:
            raise NonpositiveLambda(f"dilation factor must be positive, got {lam}")
        w = self.weights
        return StratifiedPolynomial._from_clean(
            self.group,
            {e: c * lam ** sum(a * b for a, b in zip(w, e)) for e, c in self.terms.items()},
            self.nvars,
        )

    # ---------------------------
    # Rendering and serialization
    # ---------------------------

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        names = _variable_names(self.group, self.nvars)
        out = []
        for exps, coeff in self.sorted_terms():
            mono = _render_monomial(exps, names)
            sign = "-" if coeff < 0 else "+"
            mag = abs(coeff)
            if not mono:
                body = format_fraction(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{format_fraction(mag)}*{mono}"
            out.append((sign, body))
        first_sign, first_body = out[0]
        text = ("-" if first_sign == "-" else "") + first_body
        for sign, body in out[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self) -> str:
        return f"StratifiedPolynomial({self})"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "nvars": self.nvars,
            "terms": [{"exponents": list(e), "coeff": format_fraction(c)} for e, c in self.sorted_terms()],
        }

    @classmethod
    def from_dict(cls, group: Stratification, payload: Dict[str, Any]) -> "StratifiedPolynomial":
        try:
            nvars = int(payload["nvars"])
            terms = {tuple(t["exponents"]): parse_fraction(t["coeff"]) for t in payload["terms"]}
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"malformed polynomial payload: {e}") from e
        return cls(group, terms, nvars)


def monomial_basis(group: Stratification, kappa: int) -> List[MultiIndex]:
    """All multi-indices with weighted degree <= kappa, in the global monomial order"""
    if kappa < 0:
        return []
    weights = group.layer_of
    found: List[Exponents] = []

    def extend(prefix: List[int], budget: int):
        i = len(prefix)
        if i == group.N:
            found.append(tuple(prefix))
            return
        for e in range(budget // weights[i] + 1):
            extend(prefix + [e], budget - e * weights[i])

    extend([], kappa)
    found.sort(key=lambda exps: monomial_order_key(exps, group))
    return [MultiIndex(exps, group) for exps in found]


def evaluate(P: StratifiedPolynomial, p) -> Any:
    """P at a group element; exact when the coordinates are rational"""
    if p.group != P.group:
        raise GroupMismatch(f"{P.group!r} vs {p.group!r}")
    if P.nvars != P.group.N:
        raise ArityMismatch(f"polynomial has {P.nvars} variables, a point has {P.group.N}")
    return P.evaluate_coords(p.coords)


def left_translate(P: StratifiedPolynomial, g) -> StratifiedPolynomial:
    """P'(q) = P(g o q), by substituting the group law"""
    from services.group import group_law_polynomials

    if g.group != P.group:
        raise GroupMismatch(f"{P.group!r} vs {g.group!r}")
    law = group_law_polynomials(P.group)
    translated = P.substitute(law.specialize_left(g.coords))
    assert translated.weighted_degree() <= P.weighted_degree(), "left translation raised the weighted degree"
    return translated


def dilate_poly(P: StratifiedPolynomial, lam) -> StratifiedPolynomial:
    return P.dilate(lam)


def truncate(P: StratifiedPolynomial, kappa: int) -> StratifiedPolynomial:
    return P.truncate(kappa)


def from_coefficients(group: Stratification, basis: Sequence[MultiIndex], coefficients: Iterable) -> StratifiedPolynomial:
    return StratifiedPolynomial(group, {J.exponents: c for J, c in zip(basis, coefficients)})


def random_polynomial(group: Stratification, kappa: int, rng: np.random.Generator, n_terms: int = 4,
                      min_degree: int = 0, bound: int = 3, denominator: int = 4,
                      exclude: Sequence[int] = ()) -> StratifiedPolynomial:
    """A few monomials of weighted degree in [min_degree, kappa] with small rational coefficients

    Variables listed in `exclude` never appear.
    """
    basis = [J for J in monomial_basis(group, kappa)
             if J.weighted_degree >= min_degree and not any(J.exponents[i] for i in exclude)]
    if not basis:
        return StratifiedPolynomial.zero(group)
    picks = rng.choice(len(basis), size=min(n_terms, len(basis)), replace=False)
    terms = {}
    for index in sorted(int(i) for i in picks):
        numerator = int(rng.integers(-bound * denominator, bound * denominator + 1)) or 1
        terms[basis[index].exponents] = Fraction(numerator, int(rng.integers(1, denominator + 1)))
    return StratifiedPolynomial(group, terms)
