"""
Approximating polynomials at non-characteristic boundary points
Distance jets, the coefficient system for L(dP), triangular and general solves, harmonic companions
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Tuple

import runtime
from constants import TOLERANCES
from models.errors import (
    BadGraph,
    CharacteristicPoint,
    ComputationFailed,
    FreeKeyInvalid,
    OffTriangular,
    SingularSystem,
)
from models.serialization import format_fraction
from services import linalg
from services.algebra import Stratification
from services.diffop import DiffOperator, apply_operator, horizontal_derivative, operator_from_matrix, sub_laplacian
from services.domain import Domain
from services.fields import ScalarField
from services.poly import MultiIndex, StratifiedPolynomial, monomial_basis
from services.taylor import horizontal_words

Word = Tuple[int, ...]
FreeAssignment = Dict[Tuple[int, ...], Fraction]


@dataclass
class DistanceModel:
    """Polynomial part of the signed distance near e, d = grad_norm * x_m + P_d + remainder"""
    grad_norm: Fraction
    poly_part: StratifiedPolynomial
    remainder_order: int
    exact: bool = True

    @classmethod
    def flat(cls, group: Stratification, k: int = 0) -> "DistanceModel":
        return cls(Fraction(1), StratifiedPolynomial.variable(group, group.x_m), k)

    @classmethod
    def from_polynomial(cls, P: StratifiedPolynomial, k: int = 0) -> "DistanceModel":
        """Wrap a polynomial whose layer-1 linear part is a positive multiple of x_m"""
        group = P.group
        if P.constant_term() != 0:
            raise BadGraph(f"distance polynomial {P} does not vanish at e")
        linear = P.homogeneous_part(1)
        slope = linear.coefficient(tuple(int(i == group.x_m) for i in range(group.N)))
        if slope <= 0:
            raise CharacteristicPoint(f"distance polynomial {P} has no positive x_m slope at e", {"slope": slope})
        if linear != StratifiedPolynomial.variable(group, group.x_m) * slope:
            raise BadGraph(f"linear part of {P} must be a multiple of x_m", {"linear": str(linear)})
        return cls(slope, P, k)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "grad_norm": format_fraction(self.grad_norm),
            "poly_part": self.poly_part.to_dict(),
            "remainder_order": self.remainder_order,
            "exact": self.exact,
        }


# ---------------------------
# Distance expansion
# ---------------------------

def _ordinary_jet(h: ScalarField, group: Stratification, n: int) -> StratifiedPolynomial:
    """Ordinary Taylor polynomial of an expression field at 0, coefficients rounded to rationals"""
    if h.expr is None:
        raise BadGraph(f"graph {h.label} needs an expression or a polynomial for its jet", {"h": h.label})
    origin = [0.0] * group.N
    terms: Dict[Tuple[int, ...], Fraction] = {}
    cache: Dict[Tuple[int, ...], Any] = {(0,) * group.N: h.expr}
    for total in range(n + 1):
        for exps in product(range(total + 1), repeat=group.N):
            if sum(exps) != total or exps[group.x_m]:
                continue
            expr = _partial_expr(cache, exps)
            value = float(expr.evaluate(origin))
            if value:
                denom = math.prod(math.factorial(e) for e in exps)
                terms[exps] = Fraction(value / denom).limit_denominator(TOLERANCES["RATIONAL_DENOMINATOR"])
    return StratifiedPolynomial(group, terms)


def _partial_expr(cache: Dict[Tuple[int, ...], Any], exps: Tuple[int, ...]):
    if exps not in cache:
        slot = next(i for i, e in enumerate(exps) if e)
        lower = exps[:slot] + (exps[slot] - 1,) + exps[slot + 1:]
        cache[exps] = _partial_expr(cache, lower).diff(slot)
    return cache[exps]


def _sqrt_series(a: Fraction, q: StratifiedPolynomial, n: int) -> Tuple[StratifiedPolynomial, bool]:
    """(a + q)^(1/2) to ordinary degree n for q without constant term, and whether sqrt(a) is rational"""
    root = linalg.exact_sqrt(a)
    exact = root is not None
    if not exact:
        root = Fraction(math.sqrt(a)).limit_denominator(TOLERANCES["RATIONAL_DENOMINATOR"])
    ratio = (q / a).truncate_ordinary(n)
    series = StratifiedPolynomial.constant(q.group, 1)
    term = StratifiedPolynomial.constant(q.group, 1)
    binomial = Fraction(1)
    for j in range(1, n + 1):
        binomial = binomial * (Fraction(1, 2) - (j - 1)) / j
        term = (term * ratio).truncate_ordinary(n)
        if term.is_zero():
            break
        series = series + term * binomial
    return series * root, exact


def distance_expansion(domain: Domain, k: int) -> DistanceModel:
    """Jet of the signed Euclidean distance to the graph x_m = h, truncated to weighted degree k

    The foot point v(p) solves F(v) = v - w - (x_m - h(v)) grad h(v) = 0, found by
    Newton steps with the frozen Jacobian I + g g^T at e, one ordinary degree per step.
    Then d = (x_m - h(v)) sqrt(1 + |grad h(v)|^2).
    """
    domain.check_normalized()
    group = domain.group
    slot = group.x_m
    h = domain.h.polynomial
    if h is None:
        h = _ordinary_jet(domain.h, group, k)
    h = h.truncate_ordinary(k)

    x_m = StratifiedPolynomial.variable(group, slot)
    if h.is_zero():
        return DistanceModel(Fraction(1), x_m, k)

    others = [i for i in range(group.N) if i != slot]
    grad_h = [h.derivative(i) for i in others]
    g = [p.constant_term() for p in grad_h]
    norm2 = sum(v * v for v in g)
    a = 1 + norm2

    variables = StratifiedPolynomial.variables(group)
    zero = StratifiedPolynomial.zero(group)

    def at_foot(P: StratifiedPolynomial, v: List[StratifiedPolynomial]) -> StratifiedPolynomial:
        values = list(variables)
        for i, vi in zip(others, v):
            values[i] = vi
        values[slot] = zero
        return P.substitute(values, truncate_ordinary=k)

    v = [variables[i] for i in others]
    for _ in range(k + 1):
        gap = (x_m - at_foot(h, v)).truncate_ordinary(k)
        F = [(vi - variables[i] - gap * at_foot(gh, v)).truncate_ordinary(k) for vi, i, gh in zip(v, others, grad_h)]
        gF = sum((gi * Fi for gi, Fi in zip(g, F)), zero)
        v = [(vi - Fi + gF * (gi / a)).truncate_ordinary(k) for vi, Fi, gi in zip(v, F, g)]

    gap = (x_m - at_foot(h, v)).truncate_ordinary(k)
    slope_sq = sum(((p * p).truncate_ordinary(k) for p in (at_foot(gh, v) for gh in grad_h)), zero)
    q = (slope_sq - norm2).truncate_ordinary(k)
    series, exact = _sqrt_series(a, q, k)
    distance = (gap * series).truncate_ordinary(k).truncate(k)
    grad_norm = distance.coefficient(tuple(int(i == slot) for i in range(group.N)))

    if grad_norm <= TOLERANCES["GRAD_NORM"]:
        raise CharacteristicPoint(f"|grad_H d(e)| = {float(grad_norm):.3g} for {domain.label}", {"domain": domain.label})
    runtime.logger.debug(
        f"Distance jet for {domain.label} at k={k}: grad_norm {format_fraction(grad_norm)} ({'exact' if exact else 'rounded'}), "
        f"{len(distance.terms)} terms"
    )
    return DistanceModel(grad_norm, distance, k, exact)


# ---------------------------
# The coefficient system
# ---------------------------

@dataclass
class ApproxSystem:
    """Column J holds the degree <= k-2 coefficients of L(d z^J)"""
    rows: List[MultiIndex]
    cols: List[MultiIndex]
    matrix: List[List[Fraction]]
    free_cols: List[int]
    determined_cols: List[int]
    grad_norm: Fraction
    k: int

    def free_keys(self) -> List[Tuple[int, ...]]:
        return [self.cols[c].exponents for c in self.free_cols]

    def determined_block(self) -> List[List[Fraction]]:
        return [[row[c] for c in self.determined_cols] for row in self.matrix]

    def off_order_entries(self) -> List[Tuple[int, int]]:
        """(row, determined position) pairs above the diagonal with nonzero entries"""
        block = self.determined_block()
        return [(r, c) for r in range(len(block)) for c in range(r + 1, len(block)) if block[r][c] != 0]

    def diagonal(self) -> List[Fraction]:
        return [self.matrix[r][c] for r, c in enumerate(self.determined_cols)]

    def expected_diagonal(self) -> List[Fraction]:
        return [self.grad_norm * (J.beta_m + 1) * (J.beta_m + 2) for J in self.rows]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rows": [str(J) for J in self.rows],
            "cols": [str(J) for J in self.cols],
            "matrix": [[format_fraction(v) for v in row] for row in self.matrix],
            "free": [str(self.cols[c]) for c in self.free_cols],
        }


@dataclass
class ApproxResult:
    P: StratifiedPolynomial
    residual_certificate: Dict[Word, Fraction]
    free_assignment: FreeAssignment = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return all(v == 0 for v in self.residual_certificate.values())

    def to_dict(self) -> Dict[str, Any]:
        group = self.P.group
        return {
            "P": self.P.to_dict(),
            "P_text": str(self.P),
            "residuals": [{"word": list(w), "value": format_fraction(v)} for w, v in self.residual_certificate.items()],
            "free_assignment": {str(MultiIndex(k, group)): format_fraction(v) for k, v in sorted(self.free_assignment.items())},
        }


def assemble_system(L: DiffOperator, d: DistanceModel, k: int) -> ApproxSystem:
    if k < 1:
        raise ValueError(f"approximation order must be at least 1, got {k}")
    group = L.group
    rows = monomial_basis(group, k - 2)
    cols = monomial_basis(group, k - 1)
    row_index = {J.exponents: r for r, J in enumerate(rows)}
    col_index = {J.exponents: c for c, J in enumerate(cols)}
    matrix = [[Fraction(0)] * len(cols) for _ in rows]
    for c, J in enumerate(cols):
        image = apply_operator(L, d.poly_part * J.monomial()).truncate(k - 2)
        for exps, coeff in image.terms.items():
            matrix[row_index[exps]][c] = coeff
    free_cols = [c for c, J in enumerate(cols) if J.beta_m == 0]
    determined_cols = [col_index[J.shifted_m().exponents] for J in rows]
    runtime.logger.debug(f"Assembled {len(rows)}x{len(cols)} system at k={k}, {len(free_cols)} free columns")
    return ApproxSystem(rows, cols, matrix, free_cols, determined_cols, d.grad_norm, k)


def _normalize_free(system: ApproxSystem, free_assignment: Optional[Dict]) -> FreeAssignment:
    group = system.cols[0].group if system.cols else None
    allowed = set(system.free_keys())
    normalized: FreeAssignment = {}
    for key, value in (free_assignment or {}).items():
        exps = key.exponents if isinstance(key, MultiIndex) else tuple(key)
        if exps not in allowed:
            raise FreeKeyInvalid(
                f"{MultiIndex(exps, group) if group and len(exps) == group.N else exps} is not a free column "
                f"(free columns have no x_m factor and degree <= {system.k - 1})",
                {"key": exps},
            )
        normalized[exps] = Fraction(value)
    return normalized


def solve_approximating(L: DiffOperator, d: DistanceModel, f: StratifiedPolynomial, k: int,
                        free_assignment: Optional[Dict] = None, mode: str = "triangular") -> ApproxResult:
    """P of degree <= k-1 with X^I(L(dP))(e) = X^I f(e) for |I| <= k-2"""
    system = assemble_system(L, d, k)
    free = _normalize_free(system, free_assignment)
    target = f.truncate(k - 2)
    rhs = [target.coefficient(J.exponents) for J in system.rows]

    pinned = {c: free.get(system.cols[c].exponents, Fraction(0)) for c in system.free_cols}
    for r, row in enumerate(system.matrix):
        rhs[r] -= sum((row[c] * v for c, v in pinned.items() if v), Fraction(0))

    block = system.determined_block()
    if mode == "triangular":
        off = system.off_order_entries()
        if off:
            r, c = off[0]
            raise OffTriangular(
                f"entry at row {system.rows[r]} for the column of row {system.rows[c]} breaks the elimination order",
                {"row": str(system.rows[r]), "column": str(system.cols[system.determined_cols[c]])},
            )
        solution = linalg.forward_substitute(block, rhs)
        if solution is None:
            raise SingularSystem("zero pivot in triangular solve; |grad_H d(e)| vanishes or the input is corrupted")
    elif mode == "general":
        solution = linalg.solve_square(block, rhs) if block else []
        if solution is None:
            raise SingularSystem("determined block is singular; |grad_H d(e)| vanishes or the input is corrupted",
                                 {"size": len(block)})
    else:
        raise ValueError(f"unknown mode {mode!r}")

    coefficients = {system.cols[c].exponents: v for c, v in pinned.items() if v}
    for value, c in zip(solution, system.determined_cols):
        if value:
            coefficients[system.cols[c].exponents] = value
    P = StratifiedPolynomial(L.group, coefficients)

    certificate = verify_approximating(L, d, P, f, k)
    if any(v != 0 for v in certificate.values()):
        raise ComputationFailed(f"approximating polynomial {P} left nonzero residuals", {"k": k})
    runtime.logger.info(f"Approximating polynomial at k={k} ({mode}): {P}")
    return ApproxResult(P, certificate, free)


def verify_approximating(L: DiffOperator, d: DistanceModel, P: StratifiedPolynomial, f: StratifiedPolynomial,
                         k: int) -> Dict[Word, Fraction]:
    """I -> X^I(L(d P) - f)(e) for |I| <= k-2, recomputed from scratch"""
    difference = apply_operator(L, d.poly_part * P) - f
    return {w: horizontal_derivative(w, difference).constant_term() for w in horizontal_words(L.group.m, k - 2)}


def harmonic_companions(group: Stratification, kappa: int) -> List[StratifiedPolynomial]:
    """Basis of {Q of degree <= kappa : Delta_H(x_m Q) = 0}, one element per free column"""
    laplacian = sub_laplacian(group)
    flat = DistanceModel.flat(group, kappa + 1)
    system = assemble_system(laplacian, flat, kappa + 1)
    block = system.determined_block()
    companions = []
    for c in system.free_cols:
        rhs = [-row[c] for row in system.matrix]
        solution = linalg.forward_substitute(block, rhs) if block else []
        if solution is None:
            raise SingularSystem(f"flat system at degree {kappa} has a zero pivot")
        terms = {system.cols[c].exponents: Fraction(1)}
        for value, d_col in zip(solution, system.determined_cols):
            if value:
                terms[system.cols[d_col].exponents] = value
        Q = StratifiedPolynomial(group, terms)
        if not apply_operator(laplacian, flat.poly_part * Q).is_zero():
            raise ComputationFailed(f"companion {Q} is not harmonic after multiplication by x_m")
        companions.append(Q)
    runtime.logger.debug(f"{len(companions)} harmonic companions for {group!r} at degree {kappa}")
    return companions


def companion_nullity(group: Stratification, kappa: int) -> int:
    """Dimension of the companion space from the nullspace of the full flat system"""
    system = assemble_system(sub_laplacian(group), DistanceModel.flat(group), kappa + 1)
    return len(linalg.nullspace(system.matrix, ncols=len(system.cols)))


def in_companion_span(Q: StratifiedPolynomial, kappa: int) -> bool:
    """Q is a combination of harmonic_companions(group, kappa)"""
    group = Q.group
    keys = [J.exponents for J in monomial_basis(group, kappa)]
    if not set(Q.terms) <= set(keys):
        return False
    basis = [[B.coefficient(key) for key in keys] for B in harmonic_companions(group, kappa)]
    vector = [Q.coefficient(key) for key in keys]
    if not basis:
        return Q.is_zero()
    return linalg.rank(basis + [vector]) == linalg.rank(basis)


# ---------------------------
# Rescaled domains
# ---------------------------

def rescale_graph(h: StratifiedPolynomial, sigma) -> StratifiedPolynomial:
    """h_sigma(p) = h(delta_sigma p) / sigma"""
    sigma = Fraction(sigma)
    return h.dilate(sigma) / sigma


def rescaled_approximations(domain: Domain, A: Sequence[Sequence], f: StratifiedPolynomial, k: int,
                            scales: Sequence, mode: str = "general") -> List[Tuple[Fraction, ApproxResult]]:
    """Solve on Omega_sigma with L_sigma = sum a_ij(delta_sigma p) X_i X_j and f_sigma = sigma^2 f o delta_sigma"""
    h = domain.h.polynomial if domain.is_graph else None
    if h is None:
        raise BadGraph(f"rescaling needs a polynomial graph, got {domain.label}")
    group = domain.group
    results = []
    for sigma in scales:
        sigma = Fraction(sigma)
        scaled_domain = Domain.graph(rescale_graph(h, sigma), group)
        d_sigma = distance_expansion(scaled_domain, k)
        A_sigma = [[a.dilate(sigma) if isinstance(a, StratifiedPolynomial) else a for a in row] for row in A]
        L_sigma = operator_from_matrix(A_sigma, group)
        f_sigma = f.dilate(sigma) * sigma ** 2
        results.append((sigma, solve_approximating(L_sigma, d_sigma, f_sigma, k, mode=mode)))
        runtime.logger.debug(f"Rescaled approximation at sigma={sigma}: {results[-1][1].P}")
    return results
