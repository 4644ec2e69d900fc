"""
Conditions with exp(r) coefficients.

Each exp(r) * P_r is replaced by a rational bound on exp(r) chosen by the
proven sign of P_r (lower bound where P_r >= 0, upper bound where P_r <= 0),
which makes the target a rational polynomial no larger than the original.
"""

import logging
from fractions import Fraction
from typing import Callable, Dict, Optional, Tuple

from src.check.verdict import CertificateKind, Counterexample, Status, Verdict
from src.core.config import CheckerSettings
from src.core.expbound import exp_enclosure
from src.core.polynomial import format_rational
from src.vcgen.conditions import VerificationCondition, make_vc

logger = logging.getLogger(__name__)

Checker = Callable[[VerificationCondition, CheckerSettings], Verdict]


def _sign_of(
    vc: VerificationCondition, r: Fraction, check: Checker, settings: CheckerSettings
) -> Optional[Tuple[int, Verdict]]:
    """+1 if P_r >= 0 on the hypothesis, -1 if P_r <= 0, with the proof"""
    part = vc.target.exp_parts()[r]
    if part.is_constant():
        c = part.constant_term()
        return (1 if c >= 0 else -1), Verdict.proved(CertificateKind.IDENTITY, constant=c)
    for sign in (1, -1):
        side = make_vc(
            f"{vc.id}#sign[{format_rational(r)}]",
            vc.origin,
            vc.variables,
            vc.hypothesis,
            part * sign,
        )
        verdict = check(side, settings)
        if verdict.is_proved:
            return sign, verdict
    return None


def check_exp_vc(
    vc: VerificationCondition,
    check: Checker,
    settings: Optional[CheckerSettings] = None,
) -> Verdict:
    """Bound every exponential coefficient, then decide the rational remainder"""
    settings = settings or CheckerSettings()
    parts = vc.target.exp_parts()
    if not parts:
        return check(vc, settings)

    signs: Dict[Fraction, Tuple[int, Verdict]] = {}
    for r in sorted(parts):
        found = _sign_of(vc, r, check, settings)
        if found is None:
            return Verdict.inconclusive(f"sign of the exp({format_rational(r)}) coefficient is not provable")
        signs[r] = found

    budget = settings.symbolic.exp_terms
    last: Optional[Verdict] = None
    while budget <= settings.symbolic.exp_terms_cap:
        choice: Dict[Fraction, Fraction] = {}
        enclosures = []
        for r in sorted(parts):
            bound = exp_enclosure(r, budget)
            sign, _ = signs[r]
            choice[r] = bound.lower if sign > 0 else bound.upper
            enclosures.append(
                {
                    "exponent": r,
                    "lower": bound.lower,
                    "upper": bound.upper,
                    "direction": "lower" if sign > 0 else "upper",
                    "sign": sign,
                    "sign_certificate": signs[r][1].certificate.to_dict(),
                }
            )
        rational = make_vc(
            vc.id,
            vc.origin,
            vc.variables,
            vc.hypothesis,
            vc.target.substitute_bounds(choice).extend(vc.variables),
            strict=vc.strict,
            excluded_origin=vc.excluded_origin,
        )
        inner = check(rational, settings)
        if inner.is_proved:
            return Verdict.proved(
                CertificateKind.EXP_COMPARISON,
                budget=budget,
                enclosures=enclosures,
                bounded_target=rational.conclusion.polynomial.to_dict(),
                inner=inner.certificate.to_dict(),
            )
        if inner.status == Status.REFUTED:
            refuted = _refute_with_enclosure(vc, inner.counterexample, budget)
            if refuted is not None:
                return refuted
        last = inner
        logger.warning("exp condition %s undecided with %d series terms, widening", vc.id, budget)
        budget *= 2
    return Verdict.inconclusive(last.reason if last and last.reason else "exp bounds too loose")


def _refute_with_enclosure(vc: VerificationCondition, candidate: Counterexample, budget: int) -> Optional[Verdict]:
    point = {v: candidate.point.get(v, Fraction(0)) for v in vc.variables}
    if not vc.hypothesis.holds(point):
        return None
    lo, hi = vc.target.enclose_at(point, budget)
    if hi < 0 or (vc.strict and hi <= 0):
        return Verdict.refuted(
            Counterexample(vc.id, point, None, (lo, hi)),
            f"upper enclosure {float(hi):.6g} violates the conclusion",
        )
    return None

