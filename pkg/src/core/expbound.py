"""
Rational enclosures of exp(r) and polynomials with exponential coefficients.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

from src.core.polynomial import Poly, Scalar, format_rational, to_rational

logger = logging.getLogger(__name__)

DEFAULT_EXP_TERMS = 30


@dataclass(frozen=True)
class ExpBound:
    """lower <= exp(exponent) <= upper"""

    exponent: Fraction
    lower: Fraction
    upper: Fraction

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return float(self.lower) <= value <= float(self.upper)

    def to_dict(self) -> Dict[str, str]:
        return {
            "exponent": format_rational(self.exponent),
            "lower": format_rational(self.lower),
            "upper": format_rational(self.upper),
        }


def _positive_candidates(r: Fraction, budget: int) -> Iterator[Tuple[Fraction, Fraction]]:
    """Valid (lower, upper) pairs for exp(r), r > 0, one per truncation order"""
    yield Fraction(1), Fraction(3) ** math.ceil(r)
    partial = Fraction(0)
    term = Fraction(1)
    for n in range(budget + 1):
        # partial = sum_{k<n} r^k/k!, term = r^n/n!
        if n >= 1:
            if r < n + 1:
                tail = term * (n + 1) / (n + 1 - r)
            else:
                tail = Fraction(3) ** math.ceil(r) * term
            yield partial, partial + tail
        partial += term
        term = term * r / (n + 1)


def _negative_candidates(r: Fraction, budget: int) -> Iterator[Tuple[Fraction, Fraction]]:
    """Valid (lower, upper) pairs for exp(r), r < 0"""
    yield Fraction(0), Fraction(1)
    partial = Fraction(0)
    term = Fraction(1)
    for n in range(budget + 1):
        if n >= 1 and -r <= n + 1:
            # the tail alternates with non-increasing magnitude from index n on
            nxt = partial + term
            yield min(partial, nxt), max(partial, nxt)
        partial += term
        term = term * r / (n + 1)
    for lo, hi in _positive_candidates(-r, budget):
        if lo > 0:
            yield 1 / hi, 1 / lo


def exp_enclosure(r: Scalar, budget: int = DEFAULT_EXP_TERMS) -> ExpBound:
    """
    Rational interval containing exp(r).

    The result intersects the bounds of every truncation order up to the
    budget, so widening the budget never widens the interval.
    """
    r = to_rational(r)
    if budget < 1:
        raise ValueError(f"Series budget must be positive, got {budget}")
    if r == 0:
        return ExpBound(r, Fraction(1), Fraction(1))

    candidates = _positive_candidates(r, budget) if r > 0 else _negative_candidates(r, budget)
    lower, upper = None, None
    for lo, hi in candidates:
        lower = lo if lower is None else max(lower, lo)
        upper = hi if upper is None else min(upper, hi)
    return ExpBound(r, lower, upper)


@dataclass(frozen=True)
class ScaledExpCoeff:
    """factor * exp(exponent); exponent 0 reduces to a plain rational"""

    factor: Fraction
    exponent: Fraction

    def reduce(self):
        if self.exponent == 0 or self.factor == 0:
            return self.factor
        return self

    def __mul__(self, other) -> "ScaledExpCoeff":
        if isinstance(other, ScaledExpCoeff):
            return ScaledExpCoeff(self.factor * other.factor, self.exponent + other.exponent)
        return ScaledExpCoeff(self.factor * to_rational(other), self.exponent)

    __rmul__ = __mul__

    def __add__(self, other) -> "ScaledExpCoeff":
        if not isinstance(other, ScaledExpCoeff):
            other = ScaledExpCoeff(to_rational(other), Fraction(0))
        if other.exponent != self.exponent:
            raise ValueError(
                f"Cannot add exp({self.exponent}) and exp({other.exponent}) coefficients exactly"
            )
        return ScaledExpCoeff(self.factor + other.factor, self.exponent)

    def enclose(self, budget: int = DEFAULT_EXP_TERMS) -> Tuple[Fraction, Fraction]:
        bound = exp_enclosure(self.exponent, budget)
        a, b = self.factor * bound.lower, self.factor * bound.upper
        return (a, b) if a <= b else (b, a)

    def __float__(self) -> float:
        return float(self.factor) * math.exp(float(self.exponent))


class ExpPoly:
    """Sum over exponents r of exp(r) * P_r; exponent 0 holds the rational part"""

    def __init__(self, parts: Optional[Mapping[Scalar, Poly]] = None):
        clean: Dict[Fraction, Poly] = {}
        for r, p in (parts or {}).items():
            r = to_rational(r)
            clean[r] = clean[r] + p if r in clean else p
        self._parts = {r: p for r, p in clean.items() if not p.is_zero()}
        self._variables = tuple(
            dict.fromkeys(v for p in (parts or {}).values() for v in p.variables)
        )

    @classmethod
    def from_poly(cls, p: Poly) -> "ExpPoly":
        result = cls({0: p})
        result._variables = p.variables
        return result

    @property
    def variables(self) -> Tuple[str, ...]:
        return self._variables

    def rational_part(self) -> Poly:
        if 0 in self._parts:
            return self._parts[Fraction(0)]
        return Poly.zero(self._variables)

    def exp_parts(self) -> Dict[Fraction, Poly]:
        return {r: p for r, p in self._parts.items() if r != 0}

    def is_rational(self) -> bool:
        return not self.exp_parts()

    def is_zero(self) -> bool:
        return not self._parts

    def used_variables(self) -> Tuple[str, ...]:
        used = set()
        for p in self._parts.values():
            used.update(p.used_variables())
        return tuple(v for v in self._variables if v in used)

    def __add__(self, other: "ExpPoly") -> "ExpPoly":
        merged: Dict[Fraction, Poly] = dict(self._parts)
        for r, p in other._parts.items():
            merged[r] = merged[r] + p if r in merged else p
        result = ExpPoly(merged)
        result._variables = tuple(dict.fromkeys(self._variables + other._variables))
        return result

    def __neg__(self) -> "ExpPoly":
        result = ExpPoly({r: -p for r, p in self._parts.items()})
        result._variables = self._variables
        return result

    def __sub__(self, other: "ExpPoly") -> "ExpPoly":
        return self + (-other)

    def coefficients(self) -> List[Tuple[Tuple[Tuple[str, int], ...], ScaledExpCoeff]]:
        """Flattened (monomial, factor * exp(r)) view"""
        out = []
        for r, p in sorted(self._parts.items()):
            for powers, c in p.sparse():
                out.append((powers, ScaledExpCoeff(c, r)))
        return out

    def evaluate_float(self, point: Mapping[str, float]) -> float:
        return sum(math.exp(float(r)) * p.evaluate_float(point) for r, p in self._parts.items())

    def enclose_at(self, point: Mapping[str, Scalar], budget: int = DEFAULT_EXP_TERMS) -> Tuple[Fraction, Fraction]:
        """Rational interval containing the exact value at a rational point"""
        lo, hi = Fraction(0), Fraction(0)
        for r, p in self._parts.items():
            value = p.evaluate(point)
            a, b = ScaledExpCoeff(value, r).enclose(budget) if r != 0 else (value, value)
            lo += a
            hi += b
        return lo, hi

    def substitute_bounds(self, choice: Mapping[Fraction, Fraction]) -> Poly:
        """Rational polynomial with exp(r) replaced by choice[r]"""
        result = self.rational_part()
        for r, p in self.exp_parts().items():
            result = result + p * choice[r]
        return result.extend(self._variables) if self._variables else result

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExpPoly):
            return NotImplemented
        return self._parts == other._parts

    def __hash__(self) -> int:
        return hash(tuple(sorted(self._parts.items(), key=lambda kv: kv[0])))

    def __str__(self) -> str:
        if not self._parts:
            return "0"
        pieces = []
        for r, p in sorted(self._parts.items()):
            if r == 0:
                pieces.append(f"({p})")
            else:
                pieces.append(f"exp({format_rational(r)})*({p})")
        return " + ".join(pieces)

    def to_dict(self) -> Dict[str, object]:
        return {
            "variables": list(self._variables),
            "parts": [{"exponent": format_rational(r), "poly": p.to_dict()} for r, p in sorted(self._parts.items())],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "ExpPoly":
        result = cls({Fraction(part["exponent"]): Poly.from_dict(part["poly"]) for part in data["parts"]})
        result._variables = tuple(data["variables"])
        return result
