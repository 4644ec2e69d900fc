"""
Verdicts for verification conditions.

Cheap exact checks run first, then the quadratic fast path, the SOS search
and finally the falsifier; the first conclusive answer wins.
"""

import logging
from fractions import Fraction
from typing import Optional

from src.check.exp_check import check_exp_vc
from src.check.falsify import falsify
from src.check.invariance import check_invariance_vc
from src.check.quadratic import check_pd_quadratic, quadratic_fast_path
from src.check.sos import certify_disjunct, check_sos_certificate
from src.check.verdict import CertificateKind, Counterexample, Status, Verdict
from src.core.config import CheckerSettings
from src.core.linalg import gram_of_quadratic
from src.model.model import TIMER
from src.model.predicate import contradiction_in
from src.vcgen.conditions import VCKind, VerificationCondition

logger = logging.getLogger(__name__)


def _vacuous(vc: VerificationCondition) -> Optional[Verdict]:
    contradictions = []
    for conjunct in vc.hypothesis.disjuncts:
        found = contradiction_in(list(conjunct))
        if found is None:
            return None
        contradictions.append(list(found))
    return Verdict.proved(CertificateKind.VACUOUS, contradictions=contradictions)


def check_origin(vc: VerificationCondition) -> Verdict:
    origin = {v: Fraction(0) for v in vc.variables}
    value = vc.conclusion.polynomial.evaluate(origin)
    if value == 0:
        return Verdict.proved(CertificateKind.IDENTITY, origin_value=value)
    return Verdict.refuted(Counterexample(vc.id, dict(origin), value), "nonzero at the origin")


def check_radial(vc: VerificationCondition, settings: CheckerSettings) -> Verdict:
    """Sufficient criterion: the top homogeneous part is positive definite"""
    target = vc.conclusion.polynomial
    degree = target.degree()
    if degree <= 0 or degree % 2:
        return Verdict.inconclusive(f"top degree {degree} cannot be positive definite")
    top = target.homogeneous_part(degree)
    names = [v for v in vc.variables if v != TIMER]
    if not set(top.used_variables()) <= set(names):
        return Verdict.inconclusive("top homogeneous part depends on the timer")
    if degree == 2:
        verdict = check_pd_quadratic(gram_of_quadratic(top, names), True, names, vc.id)
        if verdict.is_proved:
            return Verdict.proved(CertificateKind.PD_FACTORIZATION, top=top.to_dict(), **verdict.certificate.data)
        return Verdict.inconclusive("top homogeneous part is not positive definite")
    data = certify_disjunct(top, (), True, names, settings.sos, norm_power=degree // 2)
    if data is None:
        return Verdict.inconclusive("no SOS certificate for the top homogeneous part")
    return Verdict.proved(CertificateKind.SOS_DECOMPOSITION, top=top.to_dict(), disjuncts=[{"disjunct": 0, **data}])


def check_vc(vc: VerificationCondition, settings: Optional[CheckerSettings] = None, seed: int = 0) -> Verdict:
    """First conclusive answer of the checking pipeline"""
    settings = settings or CheckerSettings()

    vacuous = _vacuous(vc)
    if vacuous is not None:
        return vacuous
    if vc.kind == VCKind.ORIGIN:
        return check_origin(vc)
    if vc.kind == VCKind.RADIAL:
        return check_radial(vc, settings)
    if vc.kind == VCKind.INVARIANCE:
        return check_invariance_vc(vc, settings)

    if not vc.target.is_rational():
        verdict = check_exp_vc(vc, lambda inner, s: check_vc(inner, s, seed), settings)
        if verdict.status != Status.INCONCLUSIVE:
            return verdict
        counterexample = falsify(vc, seed=seed, settings=settings.falsify, symbolic=settings.symbolic)
        return Verdict.refuted(counterexample, "falsified") if counterexample else verdict

    target = vc.conclusion.polynomial
    if target.is_zero() and not vc.strict:
        return Verdict.proved(CertificateKind.IDENTITY, target=target.to_dict())

    fast = quadratic_fast_path(vc)
    if fast is not None:
        logger.debug("%s: quadratic fast path -> %s", vc.id, fast.status.value)
        return fast

    verdict = check_sos_certificate(vc, settings)
    if verdict.is_proved:
        return verdict

    counterexample = falsify(vc, seed=seed, settings=settings.falsify, symbolic=settings.symbolic)
    if counterexample is not None:
        return Verdict.refuted(counterexample, "falsified by sampling")
    return Verdict.inconclusive(verdict.reason or "no certificate and no counterexample")
