"""
Independent re-check of verdict reports.

Nothing here calls the search code: certificates are rebuilt from their
exact data with plain polynomial arithmetic and a separate LDL^T, and
counterexamples are re-evaluated at their rational points.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence

from src.core.expbound import exp_enclosure
from src.core.polynomial import Poly, divide, lie_derivative
from src.model.model import TIMER
from src.model.predicate import Atom, contradictory_pair
from src.vcgen.conditions import VCKind, VerificationCondition, make_vc

logger = logging.getLogger(__name__)

ENCLOSURE_TERMS = 240


class ReplayError(Exception):
    pass


@dataclass(frozen=True)
class ReplayResult:
    vc_id: str
    ok: bool
    message: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {"vc": self.vc_id, "ok": self.ok, "message": self.message}


def _expect(condition: bool, message: str) -> None:
    if not condition:
        raise ReplayError(message)


def _fraction_matrix(rows: Sequence[Sequence[Any]]) -> List[List[Fraction]]:
    return [[Fraction(v) for v in row] for row in rows]


def psd(matrix: Sequence[Sequence[Fraction]], definite: bool = False) -> bool:
    """Exact (semi)definiteness by symmetric elimination"""
    a = [list(row) for row in matrix]
    n = len(a)
    for i in range(n):
        if len(a[i]) != n:
            return False
        for j in range(i):
            if a[i][j] != a[j][i]:
                return False
    for k in range(n):
        d = a[k][k]
        if d < 0 or (definite and d == 0):
            return False
        if d == 0:
            if any(a[k][j] != 0 for j in range(k + 1, n)):
                return False
            continue
        for i in range(k + 1, n):
            f = a[i][k] / d
            if f:
                for j in range(k, n):
                    a[i][j] -= f * a[k][j]
    return True


def _gram_poly(data: Mapping[str, Any]) -> Poly:
    variables = tuple(data["variables"])
    basis = [tuple(m) for m in data["basis"]]
    gram = _fraction_matrix(data["gram"])
    _expect(len(gram) == len(basis), "Gram size does not match its basis")
    _expect(psd(gram), "Gram matrix is not positive semidefinite")
    terms: Dict[tuple, Fraction] = {}
    for i, zi in enumerate(basis):
        for j, zj in enumerate(basis):
            if gram[i][j]:
                mono = tuple(a + b for a, b in zip(zi, zj))
                terms[mono] = terms.get(mono, Fraction(0)) + gram[i][j]
    return Poly(variables, terms)


def _norm(vc: VerificationCondition, power: int = 1) -> Poly:
    names = [v for v in vc.variables if v != TIMER]
    total = Poly.zero(vc.variables)
    for v in names:
        total = total + Poly.variable(vc.variables, v) ** 2
    return total ** power


def _equality_poly(atoms: Sequence[Atom], entry: Mapping[str, Any]) -> Poly:
    e = Poly.from_dict(entry["poly"])
    ids = entry["atoms"]
    if len(ids) == 1:
        atom = atoms[ids[0]]
        _expect(atom.op == "==", f"atom {ids[0]} is not an equality")
        _expect(atom.poly == e or -atom.poly == e, "equality polynomial does not match its atom")
    else:
        _expect(len(ids) == 2, "equality from more than two atoms")
        a, b = atoms[ids[0]].relaxed(), atoms[ids[1]].relaxed()
        pa, oa = a.canonical()
        pb, ob = b.canonical()
        _expect(pa == pb and pa == e and {oa, ob} == {">=", "<="}, "equality pair does not match its atoms")
    return e


def _equality_sum(atoms: Sequence[Atom], entries: Sequence[Mapping[str, Any]]) -> Poly:
    total = Poly.zero(())
    for entry in entries:
        total = total + Poly.from_dict(entry["quotient"]) * _equality_poly(atoms, entry)
    return total


def _constraint_poly(atoms: Sequence[Atom], entry: Mapping[str, Any]) -> Poly:
    g = Poly.from_dict(entry["poly"])
    options = [Poly.constant((), 1)]
    for i in entry["atoms"]:
        nonneg = atoms[i].relaxed().as_nonnegative()
        options = [o * h for o in options for h in nonneg]
    _expect(any(o == g for o in options), f"constraint {g} is not implied by atoms {entry['atoms']}")
    return g


def _contradiction(atoms: Sequence[Atom], ids: Sequence[int]) -> None:
    if len(ids) == 1:
        _expect(atoms[ids[0]].truth_value() is False, f"atom {ids[0]} is not constantly false")
    else:
        _expect(contradictory_pair(atoms[ids[0]], atoms[ids[1]]), f"atoms {list(ids)} do not contradict")


def replay_disjunct(
    target: Poly,
    atoms: Sequence[Atom],
    data: Mapping[str, Any],
    strict: bool,
    norm: Poly,
    free_divisor: Optional[Poly] = None,
) -> None:
    """target >= 0 (> 0 if strict) on one conjunction of atoms"""
    if "contradiction" in data:
        _contradiction(atoms, data["contradiction"])
        return
    if "inconsistent" in data:
        info = data["inconsistent"]
        value = Fraction(info["value"])
        combination = _equality_sum(atoms, info["equalities"])
        if "constraint" in info:
            _expect(value < 0, "constraint residue is not negative")
            atom = atoms[info["constraint"][0]]
            _expect(
                any(g - combination == value for g in atom.relaxed().as_nonnegative()),
                "constraint residue does not reduce to the recorded constant",
            )
        else:
            _expect(value != 0 and combination == value, "equalities do not combine to a nonzero constant")
        return

    residual = target - _equality_sum(atoms, data.get("equalities", []))
    epsilon = data.get("epsilon")
    if strict:
        _expect(epsilon is not None, "strict conclusion without an epsilon term")
    if epsilon is not None:
        eps = Fraction(epsilon["value"])
        _expect(eps > 0, "epsilon is not positive")
        _expect(Poly.from_dict(epsilon["norm"]) == norm, "epsilon term uses the wrong norm")
        residual = residual - norm * eps
    for entry in data.get("constraints", []):
        residual = residual - _gram_poly(entry) * _constraint_poly(atoms, entry)
    for entry in data.get("free", []):
        poly = Poly.from_dict(entry["poly"])
        _expect(free_divisor is not None, "free terms are only allowed for Darboux cofactors")
        _, remainder = divide(poly, [free_divisor])
        _expect(remainder.is_zero(), "cofactor term is not a multiple of the invariant polynomial")
        residual = residual + poly * Fraction(entry["value"])
    if data.get("square") is not None:
        residual = residual - _gram_poly(data["square"])
    _expect(residual.is_zero(), f"certificate identity leaves {residual}")


def _replay_sos(vc: VerificationCondition, target: Poly, data: Mapping[str, Any], atoms_of, strict, norm, divisor=None):
    disjuncts = atoms_of()
    recorded = {d["disjunct"]: d for d in data["disjuncts"]}
    _expect(set(recorded) == set(range(len(disjuncts))), "certificate does not cover every hypothesis disjunct")
    for k, atoms in enumerate(disjuncts):
        replay_disjunct(target, atoms, recorded[k], strict, norm, divisor)


def _check_quadratic(target: Poly, data: Mapping[str, Any], names: Sequence[str], strict: bool) -> None:
    variables = list(data["variables"])
    matrix = _fraction_matrix(data["matrix"])
    if strict:
        _expect(set(variables) == set(names), "PD certificate does not range over every state variable")
    rebuilt = Poly.zero(tuple(variables))
    for i, vi in enumerate(variables):
        for j, vj in enumerate(variables):
            rebuilt = rebuilt + Poly.variable(tuple(variables), vi) * Poly.variable(tuple(variables), vj) * matrix[i][j]
    _expect(rebuilt == target, "matrix does not represent the target form")
    _expect(psd(matrix, definite=strict), "matrix is not positive (semi)definite")


def replay_certificate(vc: VerificationCondition, certificate: Mapping[str, Any]) -> None:
    """Raise ReplayError unless the certificate proves vc"""
    kind = certificate["kind"]
    hypothesis_atoms = lambda: [list(d) for d in vc.hypothesis.disjuncts]  # noqa: E731

    if kind == "Vacuous":
        if certificate.get("method") == "empty-set":
            p = Poly.from_dict(certificate["poly"])
            empty = p.is_constant() and (p.constant_term() < 0 or (vc.strict and p.constant_term() == 0))
            _expect(empty, "set is not empty")
            return
        disjuncts = hypothesis_atoms()
        _expect(len(certificate["contradictions"]) == len(disjuncts), "one contradiction per disjunct expected")
        for atoms, ids in zip(disjuncts, certificate["contradictions"]):
            _contradiction(atoms, ids)
        return

    if vc.kind == VCKind.ORIGIN:
        _expect(kind == "Identity", "origin conditions need an identity")
        value = vc.conclusion.polynomial.evaluate({v: 0 for v in vc.variables})
        _expect(value == 0, f"value {value} at the origin")
        return

    if vc.kind == VCKind.RADIAL:
        target = vc.conclusion.polynomial
        degree = target.degree()
        top = Poly.from_dict(certificate["top"])
        _expect(degree > 0 and degree % 2 == 0 and top == target.homogeneous_part(degree), "wrong top homogeneous part")
        names = [v for v in vc.variables if v != TIMER]
        if kind == "PDFactorization":
            _check_quadratic(top, certificate, names, True)
        else:
            _expect(kind == "SOSDecomposition", f"unexpected certificate {kind}")
            _replay_sos(vc, top, certificate, lambda: [[]], True, _norm(vc, degree // 2))
        return

    if vc.kind == VCKind.INVARIANCE:
        p = vc.conclusion.polynomial
        lie = lie_derivative(p, vc.field)
        method = certificate.get("method")
        if method == "constant":
            holds = p.is_constant() and (p.constant_term() > 0 or (not vc.strict and p.constant_term() == 0))
            _expect(holds, "not a true constant")
        elif method == "darboux":
            cofactor = Poly.from_dict(certificate["cofactor"])
            _expect((lie - cofactor * p).is_zero(), "Darboux identity fails")
        elif method == "darboux-inequality":
            closed = lambda: [list(d) for d in vc.hypothesis.closure().disjuncts]  # noqa: E731
            _replay_sos(vc, lie, certificate, closed, False, Poly.constant(vc.variables, 1), divisor=p)
        elif method == "barrier":
            boundary = Atom(p, "==")
            closed = lambda: [list(d) + [boundary] for d in vc.hypothesis.closure().disjuncts]  # noqa: E731
            _replay_sos(vc, lie, certificate, closed, True, Poly.constant(vc.variables, 1))
        else:
            raise ReplayError(f"unknown invariance method {method!r}")
        return

    strict_norm = _norm(vc) if vc.excluded_origin else Poly.constant(vc.variables, 1)

    if kind == "ExpComparison":
        budget = int(certificate["budget"])
        choice = {}
        for entry in certificate["enclosures"]:
            r = Fraction(entry["exponent"])
            bound = exp_enclosure(r, budget)
            same = Fraction(entry["lower"]) == bound.lower and Fraction(entry["upper"]) == bound.upper
            _expect(same, "enclosure mismatch")
            part = vc.target.exp_parts()[r]
            sign = int(entry["sign"])
            side = make_vc(vc.id, vc.origin, vc.variables, vc.hypothesis, part * sign)
            if part.is_constant():
                _expect(part.constant_term() * sign >= 0, "constant coefficient sign mismatch")
            else:
                replay_certificate(side, entry["sign_certificate"])
            choice[r] = bound.lower if sign > 0 else bound.upper
        bounded = vc.target.substitute_bounds(choice).extend(vc.variables)
        _expect(bounded == Poly.from_dict(certificate["bounded_target"]), "bounded target mismatch")
        inner = make_vc(
            vc.id, vc.origin, vc.variables, vc.hypothesis, bounded, strict=vc.strict, excluded_origin=vc.excluded_origin
        )
        replay_certificate(inner, certificate["inner"])
        return

    _expect(vc.target.is_rational(), f"{kind} certificate for an exponential target")
    target = vc.conclusion.polynomial
    if kind == "Identity":
        _expect(target.is_zero() and not vc.strict, "identity certificate for a nonzero target")
    elif kind == "PDFactorization":
        names = [v for v in vc.variables if v != TIMER]
        _check_quadratic(target, certificate, names, vc.strict)
        _expect(not vc.strict or vc.excluded_origin, "strict PD certificate needs an excluded origin")
    elif kind == "SOSDecomposition":
        _replay_sos(vc, target, certificate, hypothesis_atoms, vc.strict, strict_norm)
    else:
        raise ReplayError(f"unknown certificate kind {kind!r}")


def replay_counterexample(vc: VerificationCondition, data: Mapping[str, Any]) -> None:
    point = {v: Fraction(data["point"].get(v, 0)) for v in vc.variables}
    if vc.kind == VCKind.ORIGIN:
        _expect(all(x == 0 for x in point.values()), "origin counterexample away from the origin")
        _expect(vc.conclusion.polynomial.evaluate(point) != 0, "value at the origin is zero")
        return
    _expect(vc.kind == VCKind.INEQUALITY, f"no counterexamples for {vc.kind.value} conditions")
    _expect(vc.hypothesis.holds(point), "point violates the hypothesis")
    if vc.excluded_origin:
        _expect(any(point[v] != 0 for v in vc.variables if v != TIMER), "point is the excluded origin")
    if vc.target.is_rational():
        value = vc.conclusion.polynomial.evaluate(point)
        if data.get("value") is not None:
            _expect(Fraction(data["value"]) == value, "recorded value differs")
        _expect(value < 0 or (vc.strict and value == 0), "conclusion holds at the point")
        return
    _, hi = vc.target.enclose_at(point, ENCLOSURE_TERMS)
    _expect(hi < 0 or (vc.strict and hi <= 0), "upper enclosure does not violate the conclusion")


def replay_verdict(vc: VerificationCondition, entry: Mapping[str, Any]) -> ReplayResult:
    """Re-check one report entry; Inconclusive entries pass trivially"""
    verdict = entry.get("verdict")
    try:
        if verdict == "Proved":
            replay_certificate(vc, entry["certificate"])
        elif verdict == "Refuted":
            replay_counterexample(vc, entry["counterexample"])
        elif verdict != "Inconclusive":
            raise ReplayError(f"unknown verdict {verdict!r}")
    except (ReplayError, KeyError, ValueError, TypeError, ZeroDivisionError) as e:
        logger.debug("replay of %s failed: %s", vc.id, e)
        return ReplayResult(vc.id, False, str(e))
    return ReplayResult(vc.id, True)
