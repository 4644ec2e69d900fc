"""
Quantifier-free polynomial predicates kept in disjunctive normal form.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from src.core.polynomial import Poly, Scalar

logger = logging.getLogger(__name__)

OPS = ("<", "<=", "==", ">=", ">")
FLIP = {"<": ">", "<=": ">=", "==": "==", ">=": "<=", ">": "<"}
NEGATE = {"<": ">=", "<=": ">", ">=": "<", ">": "<="}
RELAX = {"<": "<=", ">": ">="}


@dataclass(frozen=True)
class Atom:
    """poly op 0"""

    poly: Poly
    op: str

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"Unknown comparison '{self.op}'")

    def holds(self, point: Mapping[str, Scalar]) -> bool:
        return _compare(self.poly.evaluate(point), self.op)

    def margin_float(self, point: Mapping[str, float]) -> float:
        """Signed slack: >= 0 when the closed version holds"""
        value = self.poly.evaluate_float(point)
        if self.op in ("<", "<="):
            return -value
        if self.op in (">", ">="):
            return value
        return -abs(value)

    def relaxed(self) -> "Atom":
        return Atom(self.poly, RELAX.get(self.op, self.op))

    def is_strict(self) -> bool:
        return self.op in ("<", ">")

    def negations(self) -> List["Atom"]:
        """Disjunction equivalent to the negated atom"""
        if self.op == "==":
            return [Atom(self.poly, "<"), Atom(self.poly, ">")]
        return [Atom(self.poly, NEGATE[self.op])]

    def canonical(self) -> Tuple[Poly, str]:
        """Sign-normalized form with a positive leading coefficient"""
        if self.poly.is_zero():
            return self.poly, self.op
        _, lc = self.poly.leading_term()
        if lc < 0:
            return -self.poly, FLIP[self.op]
        return self.poly, self.op

    def as_nonnegative(self) -> List[Poly]:
        """Polynomials g with g >= 0 implied by the closed atom"""
        if self.op in (">", ">="):
            return [self.poly]
        if self.op in ("<", "<="):
            return [-self.poly]
        return [self.poly, -self.poly]

    def substitute(self, bindings: Mapping[str, Poly]) -> "Atom":
        return Atom(self.poly.substitute(bindings), self.op)

    def truth_value(self) -> Optional[bool]:
        """Known truth value for constant atoms"""
        if self.poly.is_constant():
            return _compare(self.poly.constant_term(), self.op)
        return None

    def __eq__(self, other) -> bool:
        if not isinstance(other, Atom):
            return NotImplemented
        return self.canonical() == other.canonical()

    def __hash__(self) -> int:
        return hash(self.canonical())

    def __str__(self) -> str:
        return f"{self.poly} {self.op} 0"

    def to_dict(self) -> Dict[str, object]:
        return {"poly": self.poly.to_dict(), "op": self.op}

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "Atom":
        return cls(Poly.from_dict(data["poly"]), data["op"])


def _compare(value: Fraction, op: str) -> bool:
    if op == "<":
        return value < 0
    if op == "<=":
        return value <= 0
    if op == "==":
        return value == 0
    if op == ">=":
        return value >= 0
    return value > 0


def contradictory_pair(a: Atom, b: Atom) -> bool:
    """Two atoms over the same polynomial that cannot hold together"""
    pa, oa = a.canonical()
    pb, ob = b.canonical()
    if pa != pb:
        return False
    ops = {oa, ob}
    clashes = [{"<", ">"}, {"<", ">="}, {"<", "=="}, {">", "<="}, {">", "=="}]
    return any(c <= ops for c in clashes)


def contradiction_in(conjunct: Sequence[Atom]) -> Optional[Tuple[int, ...]]:
    """Indices of a syntactic contradiction in a conjunction, if any"""
    for i, atom in enumerate(conjunct):
        if atom.truth_value() is False:
            return (i,)
    for i in range(len(conjunct)):
        for j in range(i + 1, len(conjunct)):
            if contradictory_pair(conjunct[i], conjunct[j]):
                return (i, j)
    return None


class Predicate:
    """Disjunction of conjunctions of atoms"""

    __slots__ = ("disjuncts",)

    def __init__(self, disjuncts: Iterable[Iterable[Atom]] = ((),)):
        self.disjuncts: Tuple[Tuple[Atom, ...], ...] = tuple(tuple(d) for d in disjuncts)

    @classmethod
    def true(cls) -> "Predicate":
        return cls(((),))

    @classmethod
    def false(cls) -> "Predicate":
        return cls(())

    @classmethod
    def atom(cls, poly: Poly, op: str) -> "Predicate":
        return cls(((Atom(poly, op),),))

    # connectives

    def __and__(self, other: "Predicate") -> "Predicate":
        return Predicate(a + b for a, b in product(self.disjuncts, other.disjuncts))

    def __or__(self, other: "Predicate") -> "Predicate":
        return Predicate(self.disjuncts + other.disjuncts)

    def negate(self) -> "Predicate":
        result = Predicate.true()
        for conjunct in self.disjuncts:
            clause = Predicate((n,) for atom in conjunct for n in atom.negations())
            result = result & clause
        return result.simplified()

    def __invert__(self) -> "Predicate":
        return self.negate()

    def implies(self, other: "Predicate") -> "Predicate":
        return self.negate() | other

    @staticmethod
    def conj(*preds: "Predicate") -> "Predicate":
        result = Predicate.true()
        for p in preds:
            result = result & p
        return result

    # structure

    def closure(self) -> "Predicate":
        """Strict atoms relaxed to non-strict ones"""
        return Predicate(tuple(a.relaxed() for a in d) for d in self.disjuncts)

    def closure_is_approximate(self) -> bool:
        """
        True when relaxing atoms may add points that are not limits of the
        set, e.g. x > 0 & x < 0 closes to x == 0.
        """
        for conjunct in self.disjuncts:
            strict = [a for a in conjunct if a.is_strict()]
            for a in strict:
                for b in conjunct:
                    if a is not b and a.canonical()[0] == b.canonical()[0]:
                        return True
        return False

    def simplified(self) -> "Predicate":
        """Drop constant-true atoms, duplicates and contradictory disjuncts"""
        kept: List[Tuple[Atom, ...]] = []
        seen = set()
        for conjunct in self.disjuncts:
            atoms: List[Atom] = []
            for atom in conjunct:
                if atom.truth_value() is True or atom in atoms:
                    continue
                atoms.append(atom)
            if contradiction_in(atoms) is not None:
                continue
            if not atoms:
                return Predicate.true()
            key = frozenset(atoms)
            if key in seen:
                continue
            seen.add(key)
            kept.append(tuple(atoms))
        return Predicate(kept)

    def is_true(self) -> bool:
        return any(len(d) == 0 for d in self.simplified().disjuncts)

    def is_false(self) -> bool:
        return len(self.simplified().disjuncts) == 0

    def atoms(self) -> List[Atom]:
        out: List[Atom] = []
        for d in self.disjuncts:
            for a in d:
                if a not in out:
                    out.append(a)
        return out

    def used_variables(self) -> Tuple[str, ...]:
        names: Dict[str, None] = {}
        for d in self.disjuncts:
            for a in d:
                for v in a.poly.used_variables():
                    names.setdefault(v)
        return tuple(names)

    def substitute(self, bindings: Mapping[str, Poly]) -> "Predicate":
        return Predicate(tuple(a.substitute(bindings) for a in d) for d in self.disjuncts)

    # evaluation

    def holds(self, point: Mapping[str, Scalar]) -> bool:
        return any(all(a.holds(point) for a in d) for d in self.disjuncts)

    def margin_float(self, point: Mapping[str, float]) -> float:
        """max over disjuncts of min atom slack; >= -tol means the closure nearly holds"""
        best = float("-inf")
        for d in self.disjuncts:
            worst = min((a.margin_float(point) for a in d), default=float("inf"))
            best = max(best, worst)
        return best

    def holds_float(self, point: Mapping[str, float], tolerance: float = 0.0) -> bool:
        return self.margin_float(point) >= -tolerance

    # identity and text

    def _key(self) -> FrozenSet[FrozenSet[Atom]]:
        return frozenset(frozenset(d) for d in self.simplified().disjuncts)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Predicate):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __str__(self) -> str:
        if not self.disjuncts:
            return "false"
        if any(len(d) == 0 for d in self.disjuncts):
            return "true"
        parts = [" & ".join(str(a) for a in d) for d in self.disjuncts]
        if len(parts) == 1:
            return parts[0]
        return " | ".join(f"({p})" for p in parts)

    def __repr__(self) -> str:
        return f"Predicate({str(self)!r})"

    def to_dict(self) -> List[List[Dict[str, object]]]:
        return [[a.to_dict() for a in d] for d in self.disjuncts]

    @classmethod
    def from_dict(cls, data: Sequence[Sequence[Mapping[str, object]]]) -> "Predicate":
        return cls(tuple(Atom.from_dict(a) for a in d) for d in data)


TRUE = Predicate.true()
FALSE = Predicate.false()
