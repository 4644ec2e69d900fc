"""
Exact positive (semi)definiteness of quadratic forms.
"""

import logging
from fractions import Fraction
from typing import Optional, Sequence

from src.check.sos import excluded_norm_variables
from src.check.verdict import CertificateKind, Counterexample, Verdict
from src.core.linalg import (
    Matrix,
    gram_of_quadratic,
    is_symmetric,
    ldl_decompose,
    null_direction,
    quadratic_form,
    to_matrix,
)
from src.vcgen.conditions import VerificationCondition, substitute_point

logger = logging.getLogger(__name__)


def check_pd_quadratic(
    matrix: Sequence[Sequence],
    strict: bool = True,
    variables: Optional[Sequence[str]] = None,
    vc_id: str = "",
) -> Verdict:
    """
    Decide x^T Q x > 0 for x != 0 (strict) or x^T Q x >= 0 by exact LDL^T.

    Refutations carry the LDL^T witness: a rational vector with a negative
    value, or a nonzero kernel vector with value 0 in the strict case.
    """
    q: Matrix = to_matrix(matrix)
    if not is_symmetric(q):
        raise ValueError("check_pd_quadratic needs a symmetric matrix")
    names = list(variables) if variables is not None else [f"x{i + 1}" for i in range(len(q))]
    if len(names) != len(q):
        raise ValueError(f"{len(names)} variable names for a {len(q)}x{len(q)} matrix")

    result = ldl_decompose(q)
    if result.definite or (result.semidefinite and not strict):
        return Verdict.proved(
            CertificateKind.PD_FACTORIZATION,
            variables=names,
            matrix=q,
            lower=result.lower,
            pivots=result.pivots,
            strict=strict,
        )

    witness = result.witness if result.witness is not None else null_direction(result)
    if witness is None:
        return Verdict.inconclusive("LDL^T produced no witness")
    value = quadratic_form(q, witness)
    logger.debug("quadratic form refuted at %s with value %s", witness, value)
    counterexample = Counterexample(vc_id, dict(zip(names, witness)), value)
    kind = "indefinite" if value < 0 else "singular"
    return Verdict.refuted(counterexample, f"quadratic form is {kind}")


def quadratic_fast_path(vc: VerificationCondition) -> Optional[Verdict]:
    """
    Conditions whose target is a quadratic form. The hypothesis is ignored for
    proofs; a refutation needs the hypothesis to be trivially true.
    """
    if not vc.target.is_rational():
        return None
    target = vc.conclusion.polynomial
    if not target.is_zero() and not target.is_homogeneous(2):
        return None
    if vc.strict and not vc.excluded_origin:
        return None

    if vc.strict:
        names = list(excluded_norm_variables(vc))
        if not set(target.used_variables()) <= set(names):
            return None
    else:
        names = [v for v in vc.variables if v in set(target.used_variables())]

    verdict = check_pd_quadratic(gram_of_quadratic(target, names), vc.strict, names, vc.id)
    if verdict.is_proved:
        return verdict
    if not vc.hypothesis.is_true():
        return None
    point = substitute_point(verdict.counterexample.point, vc.variables)
    value = target.evaluate(point)
    if value < 0 or (vc.strict and value == 0):
        return Verdict.refuted(Counterexample(vc.id, point, Fraction(value)), verdict.reason)
    return None
