"""
Scalar fields for numerical checks
A small expression grammar with symbolic differentiation, plus finite differences along group exponentials
"""
import math
import re
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

import runtime
from models.errors import EvaluationFailure, NotPolynomial, ParseError
from models.serialization import format_fraction
from services.algebra import Stratification
from services.diffop import _check_word, horizontal_fields
from services.diffop import horizontal_derivative as poly_horizontal_derivative
from services.group import GroupElement, bch_coords, exp_coords, gauge_coords
from services.poly import StratifiedPolynomial

_TOKEN_PATTERN = re.compile(r"\s*(?:(\d+(?:\.\d+)?|\.\d+)|([A-Za-z_][A-Za-z_0-9']*)|(\*\*|[-+*/^(),]))")
_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}

# Binding strength used when rendering
_PRECEDENCE = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4, "atom": 5}


# ---------------------------
# Expression tree
# ---------------------------

class Expr:
    kind = "atom"

    def diff(self, index: int) -> "Expr":
        raise NotImplementedError

    def evaluate(self, values: Sequence):
        raise NotImplementedError

    def to_polynomial(self, group: Stratification) -> StratifiedPolynomial:
        raise NotImplementedError

    def is_zero(self) -> bool:
        return False

    def _wrap(self, child: "Expr", strict: bool = False) -> str:
        text = str(child)
        weaker = _PRECEDENCE[child.kind] < _PRECEDENCE[self.kind]
        if weaker or (strict and _PRECEDENCE[child.kind] == _PRECEDENCE[self.kind]):
            return f"({text})"
        return text


class Num(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = Fraction(value)

    def diff(self, index):
        return ZERO

    def evaluate(self, values):
        return float(self.value)

    def to_polynomial(self, group):
        return StratifiedPolynomial.constant(group, self.value)

    def is_zero(self):
        return self.value == 0

    @property
    def kind(self):
        return "atom" if self.value >= 0 and self.value.denominator == 1 else "div" if self.value > 0 else "neg"

    def __str__(self):
        return format_fraction(self.value)


ZERO = Num(0)
ONE = Num(1)


class Var(Expr):
    __slots__ = ("index", "name")

    def __init__(self, index: int, name: str):
        self.index = index
        self.name = name

    def diff(self, index):
        return ONE if index == self.index else ZERO

    def evaluate(self, values):
        return values[self.index]

    def to_polynomial(self, group):
        return StratifiedPolynomial.variable(group, self.index)

    def __str__(self):
        return self.name


class Binary(Expr):
    __slots__ = ("left", "right")

    def __init__(self, left: Expr, right: Expr):
        self.left = left
        self.right = right


class Add(Binary):
    kind = "add"

    def diff(self, index):
        return add(self.left.diff(index), self.right.diff(index))

    def evaluate(self, values):
        return self.left.evaluate(values) + self.right.evaluate(values)

    def to_polynomial(self, group):
        return self.left.to_polynomial(group) + self.right.to_polynomial(group)

    def __str__(self):
        return f"{self._wrap(self.left)} + {self._wrap(self.right)}"


class Sub(Binary):
    kind = "sub"

    def diff(self, index):
        return sub(self.left.diff(index), self.right.diff(index))

    def evaluate(self, values):
        return self.left.evaluate(values) - self.right.evaluate(values)

    def to_polynomial(self, group):
        return self.left.to_polynomial(group) - self.right.to_polynomial(group)

    def __str__(self):
        return f"{self._wrap(self.left)} - {self._wrap(self.right, strict=True)}"


class Mul(Binary):
    kind = "mul"

    def diff(self, index):
        return add(mul(self.left.diff(index), self.right), mul(self.left, self.right.diff(index)))

    def evaluate(self, values):
        return self.left.evaluate(values) * self.right.evaluate(values)

    def to_polynomial(self, group):
        return self.left.to_polynomial(group) * self.right.to_polynomial(group)

    def __str__(self):
        return f"{self._wrap(self.left)}*{self._wrap(self.right, strict=True)}"


class Div(Binary):
    kind = "div"

    def diff(self, index):
        numerator = sub(mul(self.left.diff(index), self.right), mul(self.left, self.right.diff(index)))
        return div(numerator, power(self.right, 2))

    def evaluate(self, values):
        return self.left.evaluate(values) / self.right.evaluate(values)

    def to_polynomial(self, group):
        denominator = self.right.to_polynomial(group)
        if not denominator.is_constant() or denominator.is_zero():
            raise NotPolynomial(f"division by {self.right} is not polynomial")
        return self.left.to_polynomial(group) / denominator.constant_term()

    def __str__(self):
        return f"{self._wrap(self.left)}/{self._wrap(self.right, strict=True)}"


class Neg(Expr):
    __slots__ = ("operand",)
    kind = "neg"

    def __init__(self, operand: Expr):
        self.operand = operand

    def diff(self, index):
        return neg(self.operand.diff(index))

    def evaluate(self, values):
        return -self.operand.evaluate(values)

    def to_polynomial(self, group):
        return -self.operand.to_polynomial(group)

    def __str__(self):
        return f"-{self._wrap(self.operand, strict=True)}"


class Pow(Expr):
    __slots__ = ("base", "exponent")
    kind = "pow"

    def __init__(self, base: Expr, exponent: int):
        self.base = base
        self.exponent = exponent

    def diff(self, index):
        inner = self.base.diff(index)
        if inner.is_zero():
            return ZERO
        return mul(mul(Num(self.exponent), power(self.base, self.exponent - 1)), inner)

    def evaluate(self, values):
        return self.base.evaluate(values) ** self.exponent

    def to_polynomial(self, group):
        if self.exponent < 0:
            raise NotPolynomial(f"negative power in {self}")
        return self.base.to_polynomial(group) ** self.exponent

    def __str__(self):
        exponent = str(self.exponent) if self.exponent >= 0 else f"({self.exponent})"
        return f"{self._wrap(self.base, strict=True)}^{exponent}"


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        self.name = name
        self.arg = arg

    def diff(self, index):
        inner = self.arg.diff(index)
        if inner.is_zero():
            return ZERO
        if self.name == "sin":
            outer = Func("cos", self.arg)
        elif self.name == "cos":
            outer = neg(Func("sin", self.arg))
        else:
            outer = self
        return mul(outer, inner)

    def evaluate(self, values):
        return _FUNCTIONS[self.name](self.arg.evaluate(values))

    def to_polynomial(self, group):
        raise NotPolynomial(f"{self.name}(...) is not polynomial")

    def __str__(self):
        return f"{self.name}({self.arg})"


# Folding constructors

def add(a: Expr, b: Expr) -> Expr:
    if a.is_zero():
        return b
    if b.is_zero():
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if b.is_zero():
        return a
    if a.is_zero():
        return neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if a.is_zero() or b.is_zero():
        return ZERO
    if isinstance(a, Num) and a.value == 1:
        return b
    if isinstance(b, Num) and b.value == 1:
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Num):
        if b.value == 0:
            raise EvaluationFailure("division by zero in expression")
        return mul(Num(1 / b.value), a) if not isinstance(a, Num) else Num(a.value / b.value)
    if a.is_zero():
        return ZERO
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def power(base: Expr, exponent: int) -> Expr:
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Num) and exponent > 0:
        return Num(base.value ** exponent)
    return Pow(base, exponent)


def poly_to_expr(P: StratifiedPolynomial) -> Expr:
    names = P.group.coordinate_names
    out: Expr = ZERO
    for exps, coeff in P.sorted_terms():
        term: Expr = Num(coeff)
        for i, e in enumerate(exps):
            if e:
                term = mul(term, power(Var(i, names[i]), e))
        out = add(out, term)
    return out


# ---------------------------
# Parser
# ---------------------------

def _tokenize(text: str) -> List[Tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        match = _TOKEN_PATTERN.match(text, pos)
        if not match or match.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r} at position {pos}", {"text": text})
        number, name, op = match.groups()
        if number is not None:
            tokens.append(("num", number))
        elif name is not None:
            tokens.append(("name", name))
        else:
            tokens.append(("op", "^" if op == "**" else op))
        pos = match.end()
    return tokens


class _Parser:
    """Recursive descent: sums of products of signed powers"""

    def __init__(self, text: str, names: Sequence[str]):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.names = {name: i for i, name in enumerate(names)}

    def peek(self) -> Optional[Tuple[str, str]]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, expected: Optional[str] = None) -> Tuple[str, str]:
        token = self.peek()
        if token is None:
            raise ParseError(f"unexpected end of expression {self.text!r}", {"text": self.text})
        if expected is not None and token[1] != expected:
            raise ParseError(f"expected {expected!r}, found {token[1]!r} in {self.text!r}", {"text": self.text})
        self.pos += 1
        return token

    def parse(self) -> Expr:
        if not self.tokens:
            raise ParseError("empty expression")
        expr = self.expression()
        if self.peek() is not None:
            raise ParseError(f"trailing input {self.peek()[1]!r} in {self.text!r}", {"text": self.text})
        return expr

    def expression(self) -> Expr:
        node = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            node = add(node, self.term()) if op == "+" else sub(node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            node = mul(node, self.unary()) if op == "*" else div(node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.peek() == ("op", "-"):
            self.take()
            return neg(self.unary())
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            exponent = self.unary()
            if not isinstance(exponent, Num) or exponent.value.denominator != 1:
                raise ParseError(f"exponents must be integer constants in {self.text!r}", {"text": self.text})
            return power(base, int(exponent.value))
        return base

    def atom(self) -> Expr:
        kind, value = self.take()
        if kind == "num":
            return Num(Fraction(value))
        if kind == "name":
            if value in _FUNCTIONS:
                self.take("(")
                arg = self.expression()
                self.take(")")
                return Func(value, arg)
            if value not in self.names:
                raise ParseError(f"unknown name {value!r}; coordinates are {', '.join(self.names)}",
                                 {"name": value})
            return Var(self.names[value], value)
        if value == "(":
            node = self.expression()
            self.take(")")
            return node
        raise ParseError(f"unexpected {value!r} in {self.text!r}", {"text": self.text})


def parse_expression(text: str, group: Stratification) -> Expr:
    return _Parser(str(text), group.coordinate_names).parse()


# ---------------------------
# Scalar fields
# ---------------------------

class ScalarField:
    """Evaluator from coordinates to scalars: an expression, a polynomial or a callable"""

    def __init__(self, group: Stratification, evaluator: Callable[[Sequence], Any],
                 expr: Optional[Expr] = None, poly: Optional[StratifiedPolynomial] = None, label: str = ""):
        self.group = group
        self._evaluator = evaluator
        self.expr = expr
        self._poly = poly
        self.label = label or (str(expr) if expr is not None else str(poly) if poly is not None else "field")
        self._derivatives: Dict[Tuple[int, ...], "ScalarField"] = {}

    @classmethod
    def from_expression(cls, text: str, group: Stratification) -> "ScalarField":
        expr = parse_expression(text, group)
        return cls.from_expr(expr, group)

    @classmethod
    def from_expr(cls, expr: Expr, group: Stratification) -> "ScalarField":
        return cls(group, expr.evaluate, expr=expr)

    @classmethod
    def from_polynomial(cls, P: StratifiedPolynomial) -> "ScalarField":
        return cls(P.group, P.evaluate_coords, poly=P)

    @classmethod
    def from_callable(cls, fn: Callable[[Sequence], Any], group: Stratification, label: str = "callable") -> "ScalarField":
        return cls(group, fn, label=label)

    @classmethod
    def constant(cls, value, group: Stratification) -> "ScalarField":
        return cls.from_polynomial(StratifiedPolynomial.constant(group, value))

    @property
    def text(self) -> str:
        if self.expr is not None:
            return str(self.expr)
        return self.label

    @property
    def polynomial(self) -> Optional[StratifiedPolynomial]:
        if self._poly is None and self.expr is not None:
            try:
                self._poly = self.expr.to_polynomial(self.group)
            except NotPolynomial:
                return None
        return self._poly

    def require_polynomial(self) -> StratifiedPolynomial:
        P = self.polynomial
        if P is None:
            raise NotPolynomial(f"{self.label!r} is not a polynomial; exact paths need polynomial input",
                                {"field": self.label})
        return P

    @property
    def symbolic(self) -> bool:
        return self.expr is not None or self._poly is not None

    def __call__(self, coords: Sequence):
        try:
            value = self._evaluator(coords)
        except (ZeroDivisionError, OverflowError, ValueError, FloatingPointError) as e:
            raise EvaluationFailure(f"{self.label} failed to evaluate: {e}", {"field": self.label}) from e
        if not np.all(np.isfinite(np.asarray(value, dtype=float))):
            raise EvaluationFailure(f"{self.label} produced a non-finite value", {"field": self.label})
        return value

    def at(self, p: GroupElement) -> float:
        return float(self([float(c) for c in p.coords]))

    def horizontal_derivative(self, word: Sequence[int]) -> "ScalarField":
        """Symbolic X^I of this field"""
        word = tuple(word)
        _check_word(word, self.group)
        if not word:
            return self
        if word in self._derivatives:
            return self._derivatives[word]
        if self._poly is not None or (self.expr is not None and self.polynomial is not None):
            result = ScalarField.from_polynomial(poly_horizontal_derivative(word, self.polynomial))
        elif self.expr is not None:
            inner = self.horizontal_derivative(word[1:])
            X = horizontal_fields(self.group)[word[0] - 1]
            expr: Expr = ZERO
            for c, coeff in enumerate(X.coefficients):
                if coeff.is_zero():
                    continue
                expr = add(expr, mul(poly_to_expr(coeff), inner.expr.diff(c)))
            result = ScalarField.from_expr(expr, self.group)
        else:
            raise EvaluationFailure(f"{self.label} has no symbolic derivatives; use finite differences",
                                    {"field": self.label})
        self._derivatives[word] = result
        return result

    def __str__(self) -> str:
        return self.text


def field_from_input(value, group: Stratification) -> ScalarField:
    if isinstance(value, ScalarField):
        return value
    if isinstance(value, StratifiedPolynomial):
        return ScalarField.from_polynomial(value)
    if callable(value):
        return ScalarField.from_callable(value, group)
    return ScalarField.from_expression(str(value), group)


def fd_horizontal_derivative(word: Sequence[int], f: ScalarField, p, h_step: float):
    """Nested central differences along p o exp(+-h e_i); p may hold arrays of points"""
    if h_step <= 0:
        raise EvaluationFailure(f"finite-difference step must be positive, got {h_step}")
    group = f.group
    _check_word(tuple(word), group)
    coords = [np.asarray(c, dtype=float) if isinstance(c, np.ndarray) else float(c)
              for c in (p.coords if isinstance(p, GroupElement) else p)]

    def derivative(w: Tuple[int, ...], point: List):
        if not w:
            return f(point)
        i = w[0] - 1
        forward = bch_coords(point, exp_coords(group, i, h_step), group)
        backward = bch_coords(point, exp_coords(group, i, -h_step), group)
        return (derivative(w[1:], forward) - derivative(w[1:], backward)) / (2.0 * h_step)

    value = derivative(tuple(word), coords)
    runtime.logger.debug(f"fd X^{tuple(word)} of {f.label} with h={h_step}")
    return value


def fd_horizontal_gradient(f: ScalarField, p, h_step: float) -> List:
    return [fd_horizontal_derivative((i,), f, p, h_step) for i in range(1, f.group.m + 1)]


def symbolic_horizontal_gradient(f: ScalarField) -> List[ScalarField]:
    return [f.horizontal_derivative((i,)) for i in range(1, f.group.m + 1)]


def gauge_field(group: Stratification, exponent: float = 1.0) -> ScalarField:
    """|p|^exponent as a vectorized callable"""
    return ScalarField.from_callable(lambda c: gauge_coords(c, group) ** exponent, group,
                                     label=f"|p|^{exponent:g}")


def product_field(a: ScalarField, b: ScalarField) -> ScalarField:
    if a.expr is not None and b.expr is not None:
        return ScalarField.from_expr(mul(a.expr, b.expr), a.group)
    if a.polynomial is not None and b.polynomial is not None:
        return ScalarField.from_polynomial(a.polynomial * b.polynomial)
    return ScalarField.from_callable(lambda c: a(c) * b(c), a.group, label=f"({a.label})*({b.label})")


def sum_field(a: ScalarField, b: ScalarField) -> ScalarField:
    if a.expr is not None and b.expr is not None:
        return ScalarField.from_expr(add(a.expr, b.expr), a.group)
    if a.polynomial is not None and b.polynomial is not None:
        return ScalarField.from_polynomial(a.polynomial + b.polynomial)
    return ScalarField.from_callable(lambda c: a(c) + b(c), a.group, label=f"{a.label} + {b.label}")
