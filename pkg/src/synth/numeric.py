"""
Untrusted numeric results and their conversion to exact rationals.

Nothing in this module certifies anything: a rationalized value must still
pass an exact check before it can appear in a certificate.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.polynomial import Monomial, Poly


class SolverStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NUMERICAL_ERROR = "numerical-error"


@dataclass
class NumericSolution:
    values: np.ndarray
    margin: float
    status: SolverStatus
    iterations: int = 0
    variables: Optional[Tuple[str, ...]] = None
    monomials: Optional[List[Monomial]] = None
    shape: Optional[Tuple[int, int]] = None
    notes: List[str] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status == SolverStatus.OPTIMAL and self.margin > 0


def rationalize_value(x: float, denominator_bound: int) -> Fraction:
    if not np.isfinite(x):
        raise ValueError(f"Cannot rationalize non-finite value {x}")
    return Fraction(float(x)).limit_denominator(denominator_bound)


def rationalize_vector(values: Sequence[float], denominator_bound: int) -> List[Fraction]:
    return [rationalize_value(float(x), denominator_bound) for x in values]


def rationalize(
    solution: NumericSolution, denominator_bound: int = 10**6
) -> Union[Poly, List[List[Fraction]], List[Fraction]]:
    """Round a numeric solution to a Poly, a matrix or a plain vector"""
    values = rationalize_vector(np.asarray(solution.values).ravel(), denominator_bound)
    if solution.monomials is not None and solution.variables is not None:
        return Poly(solution.variables, dict(zip(solution.monomials, values)))
    if solution.shape is not None:
        rows, cols = solution.shape
        matrix = [values[r * cols:(r + 1) * cols] for r in range(rows)]
        for i in range(rows):
            for j in range(i):
                if rows == cols:
                    avg = (matrix[i][j] + matrix[j][i]) / 2
                    matrix[i][j] = matrix[j][i] = avg
        return matrix
    return values
