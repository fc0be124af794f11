"""
Stratified Taylor polynomials
Exact solves from horizontal derivative data, the Taylor-inequality regression and reflection coefficients
"""
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

import runtime
from constants import DEFAULTS, SAMPLING, TOLERANCES
from models.errors import EvaluationFailure, InconsistentData, RankDeficiency
from models.reports import DecayReport
from services import linalg
from services.algebra import Stratification
from services.cache import group_tables
from services.diffop import horizontal_fields
from services.fields import ScalarField, fd_horizontal_derivative
from services.group import GroupElement, all_words, bch_coords, sample_gauge_ball
from services.poly import MultiIndex, StratifiedPolynomial, from_coefficients, monomial_basis

Word = Tuple[int, ...]


@dataclass
class DerivativeData:
    """X^I f(g_0) for every horizontal word with |I| <= order"""
    point: GroupElement
    order: int
    values: Dict[Word, object] = field(default_factory=dict)

    def missing_words(self) -> List[Word]:
        return [w for w in horizontal_words(self.point.group.m, self.order) if w not in self.values]

    def is_exact(self) -> bool:
        return all(isinstance(v, (int, Fraction)) for v in self.values.values())


def horizontal_words(m: int, k: int) -> List[Word]:
    """Words over 1..m of length <= k, shortest first"""
    words: List[Word] = []
    for length in range(k + 1):
        words.extend(all_words(m, length))
    return words


def _word_derivatives(P: StratifiedPolynomial, words: Sequence[Word]) -> Dict[Word, StratifiedPolynomial]:
    """X^I P for every requested word, sharing suffixes"""
    fields = horizontal_fields(P.group)
    memo: Dict[Word, StratifiedPolynomial] = {(): P}

    def get(word: Word) -> StratifiedPolynomial:
        if word not in memo:
            inner = get(word[1:])
            memo[word] = inner if inner.is_zero() else fields[word[0] - 1].apply(inner)
        return memo[word]

    return {w: get(w) for w in words}


def _build_derivative_matrix(group: Stratification, k: int) -> Tuple[List[Word], List[MultiIndex], List[List[Fraction]]]:
    rows = horizontal_words(group.m, k)
    cols = monomial_basis(group, k)
    matrix = [[Fraction(0)] * len(cols) for _ in rows]
    row_of = {w: r for r, w in enumerate(rows)}
    for c, J in enumerate(cols):
        # X_i is homogeneous of degree 1, so only words of length d(J) survive at e
        degree = J.weighted_degree
        if degree > k:
            continue
        words = all_words(group.m, degree)
        for word, value in _word_derivatives(J.monomial(), words).items():
            entry = value.constant_term()
            if entry:
                matrix[row_of[word]][c] = entry
    runtime.logger.debug(f"Derivative matrix for {group!r} at k={k}: {len(rows)}x{len(cols)}")
    return rows, cols, matrix


def derivative_matrix(group: Stratification, k: int) -> Tuple[List[Word], List[MultiIndex], List[List[Fraction]]]:
    """(rows, cols, M) with M[I][J] = X^I z^J (e)"""
    return group_tables.get_or_build("derivative_matrix", (group, k), lambda: _build_derivative_matrix(group, k))


def polynomial_jet(P: StratifiedPolynomial, g0: GroupElement, k: int) -> DerivativeData:
    words = horizontal_words(P.group.m, k)
    derivatives = _word_derivatives(P, words)
    return DerivativeData(g0, k, {w: d.evaluate_coords(g0.coords) for w, d in derivatives.items()})


def symbolic_jet(f: ScalarField, g0: GroupElement, k: int) -> DerivativeData:
    """Horizontal derivatives from the field's own expression"""
    P = f.polynomial
    if P is not None:
        return polynomial_jet(P, g0, k)
    point = [float(c) for c in g0.coords]
    values = {w: float(f.horizontal_derivative(w)(point)) for w in horizontal_words(f.group.m, k)}
    return DerivativeData(g0, k, values)


def fd_jet(f: ScalarField, g0: GroupElement, k: int, h_step: Optional[float] = None) -> DerivativeData:
    h_step = h_step or SAMPLING["FD_STEP"]
    values = {w: float(fd_horizontal_derivative(w, f, g0, h_step)) for w in horizontal_words(f.group.m, k)}
    return DerivativeData(g0, k, values)


def _as_rational(value) -> Fraction:
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    return Fraction(float(value)).limit_denominator(TOLERANCES["RATIONAL_DENOMINATOR"])


def taylor_poly(source: Union[StratifiedPolynomial, DerivativeData], g0: Optional[GroupElement] = None,
                k: Optional[int] = None, tolerance: Optional[float] = None) -> StratifiedPolynomial:
    """The unique P of weighted degree <= k with X^I P(e) = X^I f(g0), |I| <= k

    Exact data goes through rational elimination with a consistency check on
    the redundant rows; with a tolerance the data is fitted in floating point
    and rejected when the fit residual exceeds it.
    """
    if isinstance(source, StratifiedPolynomial):
        if g0 is None or k is None:
            raise InconsistentData("symbolic input needs a base point and an order")
        data = polynomial_jet(source, g0, k)
    else:
        data = source
        k = data.order if k is None else k

    group = data.point.group
    missing = [w for w in horizontal_words(group.m, k) if w not in data.values]
    if missing:
        raise InconsistentData(f"derivative table lacks {len(missing)} words, first {missing[0]}",
                               {"word": missing[0]})

    rows, cols, matrix = derivative_matrix(group, k)
    rhs = [data.values[w] for w in rows]

    if tolerance is None:
        solution, r, consistent = linalg.solve_consistent(matrix, [_as_rational(v) for v in rhs])
        if not consistent:
            raise InconsistentData(f"no polynomial of degree <= {k} has these horizontal derivatives",
                                   {"order": k, "point": str(data.point)})
        if solution is None:
            raise RankDeficiency(f"derivative matrix has rank {r} < {len(cols)}", {"order": k, "group": group.name})
        return from_coefficients(group, cols, solution)

    a = np.array([[float(v) for v in row] for row in matrix])
    b = np.array([float(v) for v in rhs])
    rank = int(np.linalg.matrix_rank(a))
    if rank < len(cols):
        raise RankDeficiency(f"derivative matrix has rank {rank} < {len(cols)}", {"order": k, "group": group.name})
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    misfit = float(np.max(np.abs(a @ x - b))) if len(b) else 0.0
    scale = max(1.0, float(np.max(np.abs(b)))) if len(b) else 1.0
    if misfit > tolerance * scale:
        raise InconsistentData(f"derivative table misfit {misfit:.3g} exceeds tolerance {tolerance:.3g}",
                               {"order": k, "misfit": misfit})
    runtime.logger.debug(f"Tolerance-mode Taylor fit at k={k}: misfit {misfit:.3g}")
    return from_coefficients(group, cols, [_as_rational(v) for v in x])


def default_radii() -> List[float]:
    low, high = SAMPLING["RADII_EXPONENTS"]
    return [2.0 ** -e for e in range(low, high + 1)]


def decay_slope(radii: Sequence[float], values: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log(value) against log(radius), ignoring exact zeros"""
    pairs = [(r, v) for r, v in zip(radii, values) if v > 0 and np.isfinite(v)]
    if len(pairs) < 2:
        return None
    x = np.log([r for r, _ in pairs])
    y = np.log([v for _, v in pairs])
    return float(np.polyfit(x, y, 1)[0])


def radius_generator(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def check_taylor_inequality(f: ScalarField, g0: GroupElement, k: int, radii: Optional[Sequence[float]] = None,
                            n_samples: Optional[int] = None, seed: int = DEFAULTS["SEED"], jet: str = "symbolic",
                            h_step: Optional[float] = None, target: Optional[float] = None) -> DecayReport:
    """sup |f(g0 g) - P_{g0}(g)| over B(rho) for each radius, with the log-log slope"""
    group = f.group
    radii = list(radii or default_radii())
    n_samples = n_samples or SAMPLING["SAMPLES_PER_RADIUS"]

    if jet == "symbolic" and not f.symbolic:
        runtime.logger.warning(f"{f.label} has no symbolic derivatives, falling back to finite differences")
        jet = "fd"
    if jet == "symbolic" and f.polynomial is not None and all(not isinstance(c, float) for c in g0.coords):
        P = taylor_poly(f.polynomial, g0, k)
    elif jet == "symbolic":
        P = taylor_poly(symbolic_jet(f, g0, k), tolerance=TOLERANCES["FD_DATA"])
    else:
        P = taylor_poly(fd_jet(f, g0, k, h_step), tolerance=TOLERANCES["FD_DATA"])

    base = [float(c) for c in g0.coords]
    sups: List[float] = []
    for index, rho in enumerate(radii):
        points = list(sample_gauge_ball(group, rho, n_samples, radius_generator(seed, index)))
        try:
            translated = bch_coords(base, points, group)
            residual = np.abs(np.asarray(f(translated), dtype=float) - np.asarray(P.evaluate_coords(points), dtype=float))
        except (ValueError, FloatingPointError) as e:
            raise EvaluationFailure(f"{f.label} failed near {g0}: {e}") from e
        sups.append(float(np.max(residual)))

    reproduced = max(sups) <= TOLERANCES["POLY_REPRODUCTION"]
    slope = None if reproduced else decay_slope(radii, sups)
    runtime.logger.info(f"Taylor inequality for {f.label} at k={k}: slope {slope}, reproduced {reproduced}")
    return DecayReport(radii, sups, slope, n_samples, reproduced, target, label=f"taylor:{f.label}")


def reflection_coefficients(k: int) -> List[Fraction]:
    """c_1..c_{k+2} with sum_i c_i (-1/i)^j = 1 for j = 0..k+1"""
    if k < 0:
        raise ValueError(f"order must be nonnegative, got {k}")
    size = k + 2
    nodes = [Fraction(-1, i) for i in range(1, size + 1)]
    matrix = [[node ** j for node in nodes] for j in range(size)]
    solution = linalg.solve_square(matrix, [Fraction(1)] * size)
    if solution is None:
        raise RankDeficiency(f"reflection system is singular at k={k}")
    return solution


def reflect_extend(v: ScalarField, k: int) -> ScalarField:
    """V = v on x_m >= 0, and sum_i c_i v(x', -x_m/i, y) below the flat boundary"""
    group = v.group
    coefficients = [float(c) for c in reflection_coefficients(k)]
    slot = group.x_m

    def extended(coords):
        xm = coords[slot]
        reflected = 0.0
        for i, c in enumerate(coefficients, start=1):
            moved = list(coords)
            moved[slot] = -xm / i
            reflected = reflected + c * np.asarray(v(moved), dtype=float)
        return np.where(np.asarray(xm) >= 0, np.asarray(v(coords), dtype=float), reflected)

    return ScalarField.from_callable(extended, group, label=f"reflect_{k}({v.label})")
