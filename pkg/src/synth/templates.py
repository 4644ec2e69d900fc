"""
Lyapunov templates: polynomials with unknown coefficients.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple

from src.core.polynomial import Monomial, Poly, monomials_up_to


@dataclass(frozen=True)
class Template:
    """sum_k c_k * m_k over monomials of the template variables; no constant term"""

    label: str
    variables: Tuple[str, ...]
    over: Tuple[str, ...]
    monomials: Tuple[Monomial, ...]

    @classmethod
    def polynomial(
        cls,
        label: str,
        variables: Sequence[str],
        over: Sequence[str],
        degree: int = 2,
        linear_terms: bool = False,
    ) -> "Template":
        """Even-degree template; linear terms only on request, constants never"""
        if degree < 2 or degree % 2:
            raise ValueError(f"template degree must be even and at least 2, got {degree}")
        unknown = [v for v in over if v not in variables]
        if unknown:
            raise ValueError(f"template variable '{unknown[0]}' is not declared")
        lowest = 1 if linear_terms else 2
        monomials = tuple(monomials_up_to(len(over), degree, min_degree=lowest))
        return cls(label, tuple(variables), tuple(over), monomials)

    def __len__(self) -> int:
        return len(self.monomials)

    def basis_polys(self) -> List[Poly]:
        out = []
        for mono in self.monomials:
            p = Poly(self.over, {mono: Fraction(1)})
            out.append(p.extend(self.variables))
        return out

    def instantiate(self, coefficients: Sequence[Fraction]) -> Poly:
        if len(coefficients) != len(self.monomials):
            raise ValueError(f"{self.label}: {len(coefficients)} coefficients for {len(self.monomials)} monomials")
        terms = {mono: Fraction(c) for mono, c in zip(self.monomials, coefficients)}
        return Poly(self.over, terms).extend(self.variables)

    def labels(self) -> List[str]:
        return [f"{self.label}{list(m)}" for m in self.monomials]
