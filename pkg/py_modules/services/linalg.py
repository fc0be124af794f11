"""
Exact rational linear algebra
Gauss-Jordan elimination over Fractions: rank, nullspace and consistent solves
"""
import math
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

Matrix = List[List[Fraction]]


def to_matrix(rows: Sequence[Sequence]) -> Matrix:
    return [[Fraction(v) for v in row] for row in rows]


def rref(matrix: Sequence[Sequence], ncols: Optional[int] = None) -> Tuple[Matrix, List[int]]:
    """Reduced row echelon form; pivots restricted to the first ncols columns"""
    a = to_matrix(matrix)
    if not a:
        return a, []
    width = len(a[0])
    limit = width if ncols is None else ncols
    pivots: List[int] = []
    row = 0
    for col in range(limit):
        pivot = next((r for r in range(row, len(a)) if a[r][col] != 0), None)
        if pivot is None:
            continue
        a[row], a[pivot] = a[pivot], a[row]
        lead = a[row][col]
        if lead != 1:
            a[row] = [v / lead for v in a[row]]
        for r in range(len(a)):
            if r != row and a[r][col] != 0:
                factor = a[r][col]
                a[r] = [v - factor * w for v, w in zip(a[r], a[row])]
        pivots.append(col)
        row += 1
        if row == len(a):
            break
    return a, pivots


def rank(matrix: Sequence[Sequence]) -> int:
    return len(rref(matrix)[1])


def nullspace(matrix: Sequence[Sequence], ncols: Optional[int] = None) -> List[List[Fraction]]:
    """Basis of {v : M v = 0}, one vector per non-pivot column"""
    if not matrix:
        return [[Fraction(int(i == j)) for j in range(ncols or 0)] for i in range(ncols or 0)]
    reduced, pivots = rref(matrix)
    width = len(reduced[0])
    basis = []
    for free in (c for c in range(width) if c not in pivots):
        v = [Fraction(0)] * width
        v[free] = Fraction(1)
        for r, p in enumerate(pivots):
            v[p] = -reduced[r][free]
        basis.append(v)
    return basis


def solve_consistent(matrix: Sequence[Sequence], rhs: Sequence) -> Tuple[Optional[List[Fraction]], int, bool]:
    """Solve M x = b exactly

    Returns (solution, rank, consistent). The solution is None unless the
    system is consistent and M has full column rank.
    """
    ncols = len(matrix[0]) if matrix else 0
    augmented = [list(row) + [b] for row, b in zip(matrix, rhs)]
    reduced, pivots = rref(augmented, ncols=ncols)
    consistent = all(
        row[-1] == 0 for row in reduced[len(pivots):]
    )
    if not consistent or len(pivots) < ncols:
        return None, len(pivots), consistent
    solution = [Fraction(0)] * ncols
    for r, p in enumerate(pivots):
        solution[p] = reduced[r][-1]
    return solution, len(pivots), True


def solve_square(matrix: Sequence[Sequence], rhs: Sequence) -> Optional[List[Fraction]]:
    """Unique solution of a square system, None when singular"""
    solution, r, consistent = solve_consistent(matrix, rhs)
    if solution is None or r < len(matrix):
        return None
    return solution


def forward_substitute(lower: Sequence[Sequence], rhs: Sequence) -> Optional[List[Fraction]]:
    """Solve a lower-triangular system; None on a zero diagonal entry"""
    n = len(rhs)
    x: List[Fraction] = [Fraction(0)] * n
    for i in range(n):
        diagonal = Fraction(lower[i][i])
        if diagonal == 0:
            return None
        acc = Fraction(rhs[i])
        for j in range(i):
            if lower[i][j]:
                acc -= lower[i][j] * x[j]
        x[i] = acc / diagonal
    return x


def exact_sqrt(value) -> Optional[Fraction]:
    """Rational square root when value is the square of a rational, else None"""
    q = Fraction(value)
    if q < 0:
        return None
    num, den = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if num * num == q.numerator and den * den == q.denominator:
        return Fraction(num, den)
    return None
