"""
Exact rational linear algebra: LDL^T factorization and row reduction.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from src.core.polynomial import Poly

logger = logging.getLogger(__name__)

Matrix = List[List[Fraction]]


def to_matrix(rows: Sequence[Sequence]) -> Matrix:
    return [[Fraction(v) for v in row] for row in rows]


def is_symmetric(m: Matrix) -> bool:
    n = len(m)
    return all(len(row) == n for row in m) and all(m[i][j] == m[j][i] for i in range(n) for j in range(i))


@dataclass
class LDLResult:
    """Outcome of an exact LDL^T attempt"""

    lower: Matrix
    pivots: List[Fraction]
    definite: bool
    semidefinite: bool
    witness: Optional[List[Fraction]] = None
    failed_at: Optional[int] = None
    notes: List[str] = field(default_factory=list)


def ldl_decompose(matrix: Matrix) -> LDLResult:
    """
    Symmetric elimination without pivoting.

    Stops at the first negative pivot, or at a zero pivot whose remaining
    column is nonzero. In both cases the matrix is not PSD and a witness y in
    the eliminated coordinates is returned, mapped back to v with v^T M v < 0.
    """
    n = len(matrix)
    if not is_symmetric(matrix):
        raise ValueError("LDL^T needs a square symmetric matrix")
    s = [row[:] for row in to_matrix(matrix)]
    lower: Matrix = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    pivots: List[Fraction] = []
    definite = True

    for k in range(n):
        d = s[k][k]
        if d < 0:
            y = [Fraction(0)] * n
            y[k] = Fraction(1)
            return LDLResult(lower, pivots + [d], False, False, _back_map(lower, y, k), k)
        if d == 0:
            definite = False
            nonzero = [j for j in range(k + 1, n) if s[k][j] != 0]
            if nonzero:
                j = nonzero[0]
                skj, sjj = s[k][j], s[j][j]
                t = Fraction(1) if sjj <= abs(skj) else abs(skj) / sjj
                y = [Fraction(0)] * n
                y[k] = Fraction(1)
                y[j] = -(1 if skj > 0 else -1) * t
                return LDLResult(lower, pivots + [d], False, False, _back_map(lower, y, k), k)
            pivots.append(d)
            continue
        pivots.append(d)
        for i in range(k + 1, n):
            lower[i][k] = s[i][k] / d
        for i in range(k + 1, n):
            if s[i][k] == 0:
                continue
            factor = s[i][k] / d
            for j in range(k + 1, n):
                s[i][j] -= factor * s[k][j]
        for i in range(k + 1, n):
            s[i][k] = Fraction(0)
            s[k][i] = Fraction(0)

    return LDLResult(lower, pivots, definite, True)


def _back_map(lower: Matrix, y: List[Fraction], k: int) -> List[Fraction]:
    """Solve L^T v = y using the first k eliminated columns"""
    n = len(y)
    v = y[:]
    for col in range(min(k, n) - 1, -1, -1):
        v[col] = y[col] - sum(lower[i][col] * v[i] for i in range(col + 1, n))
    return v


def quadratic_form(matrix: Matrix, v: Sequence[Fraction]) -> Fraction:
    n = len(v)
    return sum(matrix[i][j] * v[i] * v[j] for i in range(n) for j in range(n))


def gram_of_quadratic(p: Poly, variables: Sequence[str]) -> Matrix:
    """Symmetric S with p = x^T S x; p must be a quadratic form in variables"""
    if not p.is_homogeneous(2) and not p.is_zero():
        raise ValueError(f"{p} is not a quadratic form")
    unknown = set(p.used_variables()) - set(variables)
    if unknown:
        raise ValueError(f"{p} uses variables outside {tuple(variables)}")
    n = len(variables)
    s: Matrix = [[Fraction(0)] * n for _ in range(n)]
    for i, vi in enumerate(variables):
        s[i][i] = p.coefficient({vi: 2})
        for j in range(i + 1, n):
            half = p.coefficient({vi: 1, variables[j]: 1}) / 2
            s[i][j] = half
            s[j][i] = half
    return s


@dataclass
class LinearSolution:
    """All solutions of A u = b as particular + basis * w"""

    particular: List[Fraction]
    basis: List[List[Fraction]]
    pivot_columns: List[int]

    @property
    def free_dimension(self) -> int:
        return len(self.basis)

    def point(self, w: Sequence[Fraction]) -> List[Fraction]:
        u = self.particular[:]
        for coeff, vec in zip(w, self.basis):
            if coeff == 0:
                continue
            for i, value in enumerate(vec):
                if value:
                    u[i] += coeff * value
        return u


def solve_affine(rows: List[dict], rhs: List[Fraction], n_cols: int) -> Optional[LinearSolution]:
    """
    Exact reduced row echelon form for sparse rows.

    rows[i] maps column -> coefficient. Returns None when inconsistent.
    """
    work = [(dict(r), Fraction(b)) for r, b in zip(rows, rhs)]
    pivot_rows: List[Tuple[int, dict, Fraction]] = []

    for row, b in work:
        for pcol, prow, pb in pivot_rows:
            c = row.get(pcol)
            if c:
                for col, v in prow.items():
                    nv = row.get(col, Fraction(0)) - c * v
                    if nv:
                        row[col] = nv
                    else:
                        row.pop(col, None)
                b -= c * pb
        if not row:
            if b != 0:
                return None
            continue
        pcol = min(row)
        pv = row[pcol]
        row = {col: v / pv for col, v in row.items()}
        b = b / pv
        # keep earlier pivot rows reduced
        for idx, (qcol, qrow, qb) in enumerate(pivot_rows):
            c = qrow.get(pcol)
            if c:
                for col, v in row.items():
                    nv = qrow.get(col, Fraction(0)) - c * v
                    if nv:
                        qrow[col] = nv
                    else:
                        qrow.pop(col, None)
                pivot_rows[idx] = (qcol, qrow, qb - c * b)
        pivot_rows.append((pcol, row, b))

    pivots = {pcol: (prow, pb) for pcol, prow, pb in pivot_rows}
    free_cols = [c for c in range(n_cols) if c not in pivots]
    particular = [Fraction(0)] * n_cols
    for pcol, (prow, pb) in pivots.items():
        particular[pcol] = pb
    basis = []
    for fc in free_cols:
        vec = [Fraction(0)] * n_cols
        vec[fc] = Fraction(1)
        for pcol, (prow, _) in pivots.items():
            c = prow.get(fc)
            if c:
                vec[pcol] = -c
        basis.append(vec)
    return LinearSolution(particular, basis, sorted(pivots))


def null_direction(result: LDLResult) -> Optional[List[Fraction]]:
    """Nonzero v with v^T M v == 0 for a PSD but singular factorization"""
    if not result.semidefinite or result.definite:
        return None
    n = len(result.lower)
    for k, d in enumerate(result.pivots):
        if d == 0:
            y = [Fraction(0)] * n
            y[k] = Fraction(1)
            return _back_map(result.lower, y, n)
    return None
