"""
Reduction of polynomials modulo hypothesis equalities.

Linear equalities with a constant coefficient on some variable eliminate
that variable by substitution; the rest are used as divisors in grlex
division. Every reduction keeps the quotients against the original
equalities, so p == reduced + sum(q_j * e_j) holds exactly.
"""

import logging
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from src.core.polynomial import Poly, divide
from src.model.predicate import Atom

logger = logging.getLogger(__name__)

Combo = Dict[int, Poly]


def _add_combo(a: Combo, b: Combo, scale: Poly) -> Combo:
    out = dict(a)
    for j, q in b.items():
        term = q * scale
        out[j] = out[j] + term if j in out else term
    return {j: q for j, q in out.items() if not q.is_zero()}


def split_disjunct(atoms: Sequence[Atom]) -> Tuple[List[Tuple[Poly, Tuple[int, ...]]], List[Tuple[Poly, int]]]:
    """
    Equalities (poly, source atom indices) and inequalities (g >= 0, atom index).

    An explicit == atom and a pair p >= 0, p <= 0 both yield p == 0.
    Strict atoms are relaxed.
    """
    equalities: List[Tuple[Poly, Tuple[int, ...]]] = []
    inequalities: List[Tuple[Poly, int]] = []
    used = set()
    for i, atom in enumerate(atoms):
        if atom.op == "==":
            equalities.append((atom.poly, (i,)))
            used.add(i)
    for i, a in enumerate(atoms):
        if i in used:
            continue
        pa, oa = a.relaxed().canonical()
        for j in range(i + 1, len(atoms)):
            if j in used:
                continue
            pb, ob = atoms[j].relaxed().canonical()
            if pa == pb and {oa, ob} == {">=", "<="}:
                equalities.append((pa, (i, j)))
                used.update((i, j))
                break
    for i, atom in enumerate(atoms):
        if i in used:
            continue
        for g in atom.relaxed().as_nonnegative():
            inequalities.append((g, i))
    return equalities, inequalities


class EqualityReducer:
    """Normal forms modulo a fixed list of equalities"""

    def __init__(self, equalities: Sequence[Poly]):
        self.originals = list(equalities)
        self.substitutions: List[Tuple[str, Poly, Poly, Combo]] = []
        self.divisors: List[Tuple[Poly, Combo]] = []
        self.inconsistent: Optional[Tuple[Fraction, Combo]] = None
        self._build()

    def _eliminable(self, e: Poly) -> Optional[str]:
        for v in e.used_variables():
            coefficient = e.coefficient({v: 1})
            if coefficient == 0:
                continue
            rest = e - Poly.variable(e.variables, v) * coefficient
            if v not in rest.used_variables():
                return v
        return None

    def _build(self) -> None:
        for j, original in enumerate(self.originals):
            e, back = self._apply_substitutions(original, {})
            # original == e + sum(back), so e == original - sum(back)
            combo = _add_combo({j: Poly.constant(original.variables, 1)}, back, Poly.constant(original.variables, -1))
            if self.divisors and not e.is_zero():
                quotients, e_reduced = divide(e, [d for d, _ in self.divisors])
                for q, (_, d_combo) in zip(quotients, self.divisors):
                    if not q.is_zero():
                        combo = _add_combo(combo, d_combo, -q)
                e = e_reduced
            if e.is_zero():
                continue
            if e.is_constant():
                self.inconsistent = (e.constant_term(), combo)
                return
            v = self._eliminable(e)
            if v is None:
                self.divisors.append((e, combo))
                continue
            coefficient = e.coefficient({v: 1})
            rest = e - Poly.variable(e.variables, v) * coefficient
            value = -rest / coefficient
            self.substitutions.append((v, value, e, combo))
        logger.debug(
            "equality reduction: %d eliminated %s, %d divisors",
            len(self.substitutions), [s[0] for s in self.substitutions], len(self.divisors),
        )

    def _apply_substitutions(self, p: Poly, combo: Combo) -> Tuple[Poly, Combo]:
        for v, value, e, e_combo in self.substitutions:
            if v not in p.used_variables():
                continue
            reduced = p.substitute({v: value})
            quotients, remainder = divide(p - reduced, [e])
            if not remainder.is_zero():
                raise ArithmeticError(f"substitution of {v} left a remainder {remainder}")
            combo = _add_combo(combo, e_combo, quotients[0])
            p = reduced
        return p, combo

    @property
    def eliminated(self) -> List[str]:
        return [s[0] for s in self.substitutions]

    def reduce(self, p: Poly) -> Tuple[Poly, Combo]:
        """(normal form r, quotients h) with p == r + sum(h_j * originals[j])"""
        r, combo = self._apply_substitutions(p, {})
        if self.divisors:
            quotients, r = divide(r, [d for d, _ in self.divisors])
            for q, (_, d_combo) in zip(quotients, self.divisors):
                if not q.is_zero():
                    combo = _add_combo(combo, d_combo, q)
        return r, combo
