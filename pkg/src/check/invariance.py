"""
Invariance of p >= 0 (or p > 0) under one mode's flow.

Two sufficient conditions are tried, both on the closed mode domain:
Darboux, L_f p >= g * p for a polynomial cofactor g, and barrier,
L_f p > 0 wherever p == 0.
"""

import logging
from typing import List, Optional, Tuple

from src.check.sos import certify_disjunct
from src.check.verdict import CertificateKind, Verdict
from src.core.config import CheckerSettings
from src.core.polynomial import Poly, divide, lie_derivative, monomials_up_to
from src.model.model import SwitchedModel
from src.model.predicate import Atom
from src.vcgen.conditions import Origin, VCKind, VerificationCondition, make_vc

logger = logging.getLogger(__name__)

RULE = "set-invariance"


def _exact_cofactor(lie: Poly, p: Poly) -> Optional[Poly]:
    if lie.is_zero():
        return Poly.zero(lie.variables)
    if p.is_zero():
        return None
    quotients, remainder = divide(lie, [p])
    return quotients[0] if remainder.is_zero() else None


def _cofactor_terms(p: Poly, degree: int) -> List[Tuple[str, Poly]]:
    """Free terms -m * p for each monomial m of the cofactor"""
    variables = p.variables
    terms = []
    for mono in monomials_up_to(len(variables), degree):
        m = Poly(variables, {mono: 1})
        terms.append((f"g[{list(mono)}]", -(m * p)))
    return terms


def check_invariance_vc(vc: VerificationCondition, settings: Optional[CheckerSettings] = None) -> Verdict:
    settings = settings or CheckerSettings()
    if vc.field is None:
        return Verdict.inconclusive("invariance condition without a vector field")
    p = vc.conclusion.polynomial
    lie = lie_derivative(p, vc.field).extend(vc.variables)
    p = p.extend(vc.variables)

    if p.is_constant():
        if p.constant_term() > 0 or (p.constant_term() == 0 and not vc.strict):
            return Verdict.proved(CertificateKind.IDENTITY, method="constant", poly=p.to_dict())
        return Verdict.proved(CertificateKind.VACUOUS, method="empty-set", poly=p.to_dict())

    cofactor = _exact_cofactor(lie, p)
    if cofactor is not None:
        logger.debug("%s: exact Darboux cofactor %s", vc.id, cofactor)
        return Verdict.proved(
            CertificateKind.IDENTITY,
            method="darboux",
            poly=p.to_dict(),
            lie=lie.to_dict(),
            cofactor=cofactor.to_dict(),
        )

    sos = settings.sos
    free_terms = _cofactor_terms(p, sos.cofactor_degree)
    disjuncts = []
    for k, conjunct in enumerate(vc.hypothesis.closure().disjuncts):
        data = certify_disjunct(lie, conjunct, False, (), sos, free_terms=free_terms)
        if data is None:
            break
        disjuncts.append({"disjunct": k, **data})
    else:
        return Verdict.proved(
            CertificateKind.SOS_DECOMPOSITION,
            method="darboux-inequality",
            poly=p.to_dict(),
            lie=lie.to_dict(),
            disjuncts=disjuncts,
        )

    disjuncts = []
    boundary = Atom(p, "==")
    for k, conjunct in enumerate(vc.hypothesis.closure().disjuncts):
        data = certify_disjunct(lie, tuple(conjunct) + (boundary,), True, (), sos)
        if data is None:
            logger.debug("%s: neither Darboux nor barrier certificate found", vc.id)
            return Verdict.inconclusive(f"no Darboux or barrier certificate for {p} in disjunct {k}")
        disjuncts.append({"disjunct": k, **data})
    return Verdict.proved(
        CertificateKind.SOS_DECOMPOSITION,
        method="barrier",
        poly=p.to_dict(),
        lie=lie.to_dict(),
        disjuncts=disjuncts,
    )


def check_set_invariance(
    model: SwitchedModel,
    mode_id: str,
    p: Poly,
    sense: str = ">=",
    settings: Optional[CheckerSettings] = None,
) -> Verdict:
    """Is {p sense 0} invariant under mode_id's flow inside its domain?"""
    if sense not in (">=", ">"):
        raise ValueError(f"sense must be '>=' or '>', got {sense!r}")
    mode = model.mode(mode_id)
    vc = make_vc(
        f"{mode_id}/invariant",
        Origin(RULE, "region-invariant", (mode_id,)),
        model.variables,
        mode.domain.closure(),
        p.extend(model.variables),
        strict=sense == ">",
        kind=VCKind.INVARIANCE,
        field=mode.field,
    )
    return check_invariance_vc(vc, settings)
