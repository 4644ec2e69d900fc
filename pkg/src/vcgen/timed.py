"""
Dwell-time conditions for timed models.

Modes with a positive decay rate (stable) make V decrease by exp(-rate*t)
while active; modes with a nonpositive rate (unstable) may grow V but only
for at most their max dwell time. A switch p -> q after dwelling theta is
safe when V_q <= exp(E) * V_p, where E collects the guaranteed decay of p
and the worst growth q can contribute before its own next switch.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from src.core.errors import VCGenError
from src.core.expbound import ExpPoly
from src.core.polynomial import format_rational, lie_derivative
from src.model.model import Kind, SwitchedModel, Transition
from src.model.predicate import Predicate
from src.vcgen.conditions import LyapunovAssignment, Origin, VerificationCondition, make_vc
from src.vcgen.generators import MLF_TIMED, _positivity, _radial, _require_kind

logger = logging.getLogger(__name__)

STABILITY = "stability"
ATTRACTIVITY = "attractivity"


def _rates(model: SwitchedModel, assignment: LyapunovAssignment) -> Tuple[Dict[str, Fraction], List[str], List[str]]:
    rates = {m: Fraction(assignment.rates[m]) for m in model.mode_ids}
    stable = [m for m in model.mode_ids if rates[m] > 0]
    unstable = [m for m in model.mode_ids if rates[m] <= 0]
    for mode_id in unstable:
        if model.mode(mode_id).max_dwell is None:
            raise VCGenError(f"mode '{mode_id}' has nonpositive rate {rates[mode_id]} but no max dwell time")
    return rates, stable, unstable


def default_sigma(model: SwitchedModel, assignment: LyapunovAssignment) -> Optional[Fraction]:
    """Half the smallest stable rate, or the annotated sigma"""
    if assignment.sigma is not None:
        return Fraction(assignment.sigma)
    rates, stable, _ = _rates(model, assignment)
    if not stable:
        return None
    return min(rates[m] for m in stable) / 2


def stability_exponent(model: SwitchedModel, rates: Dict[str, Fraction], t: Transition) -> Optional[Fraction]:
    """E with V_q <= exp(E) V_p required; None when the switch can never happen"""
    theta = t.min_dwell or Fraction(0)
    p, q = model.mode(t.source), model.mode(t.target)
    exponent = Fraction(0)
    if rates[p.id] > 0:
        exponent += rates[p.id] * theta
    elif theta > p.max_dwell:
        return None
    if rates[q.id] <= 0:
        exponent += rates[q.id] * q.max_dwell
    return exponent


def attractivity_exponent(
    model: SwitchedModel, rates: Dict[str, Fraction], t: Transition, sigma: Fraction
) -> Optional[Fraction]:
    """Like stability_exponent but reserving decay sigma per unit time"""
    theta = t.min_dwell or Fraction(0)
    p, q = model.mode(t.source), model.mode(t.target)
    if rates[p.id] > 0:
        exponent = (rates[p.id] - sigma) * theta
    else:
        if theta > p.max_dwell:
            return None
        exponent = -sigma * p.max_dwell
    if rates[q.id] <= 0:
        exponent += rates[q.id] * q.max_dwell
    return exponent


def gen_mlf_timed(
    model: SwitchedModel,
    assignment: LyapunovAssignment,
    families: Tuple[str, ...] = (STABILITY,),
) -> List[VerificationCondition]:
    """Positivity, rate and per-transition dwell conditions for a timed model"""
    _require_kind(model, MLF_TIMED, (Kind.TIMED,))
    assignment.require(model)
    rates, stable, _ = _rates(model, assignment)
    variables = model.variables

    sigma = None
    if ATTRACTIVITY in families:
        sigma = default_sigma(model, assignment)
        if sigma is None:
            raise VCGenError("attractivity conditions need at least one mode with a positive rate")
        smallest = min(rates[m] for m in stable)
        if not (0 < sigma < smallest):
            raise VCGenError(f"sigma must lie in (0, {smallest}), got {sigma}")

    vcs: List[VerificationCondition] = []
    for mode in model.modes:
        v = assignment[mode.id]
        domain = mode.domain.closure()
        vcs.extend(_positivity(model, MLF_TIMED, mode.id, (mode.id,), v, domain, origin_always=False))
        vcs.append(_radial(model, MLF_TIMED, mode.id, (mode.id,), v))
        derivative = lie_derivative(v, mode.field)
        vcs.append(
            make_vc(
                f"{mode.id}/rate",
                Origin(MLF_TIMED, "decay-rate", (mode.id,)),
                variables,
                domain,
                -derivative - v * rates[mode.id],
                description=f"L V <= -{format_rational(rates[mode.id])} V",
            )
        )

    for t in model.transitions:
        v_p, v_q = assignment[t.source], assignment[t.target]
        for family in families:
            if family == STABILITY:
                exponent = stability_exponent(model, rates, t)
                premise, suffix = "dwell", "dwell"
            elif family == ATTRACTIVITY:
                exponent = attractivity_exponent(model, rates, t, sigma)
                premise, suffix = "dwell-attractivity", "dwell-attr"
            else:
                raise VCGenError(f"unknown condition family '{family}'")
            label = Origin(MLF_TIMED, premise, (t.source, t.target))
            vc_id = f"{t.label}/{suffix}"
            if exponent is None:
                vcs.append(
                    make_vc(
                        vc_id, label, variables, Predicate.false(), v_p - v_q,
                        description="min dwell exceeds the source mode's max dwell",
                    )
                )
                continue
            target = ExpPoly({exponent: v_p.extend(variables)}) - ExpPoly.from_poly(v_q.extend(variables))
            vcs.append(
                make_vc(
                    vc_id, label, variables, Predicate.true(), target,
                    description=f"V_{t.target} <= exp({format_rational(exponent)}) V_{t.source}",
                )
            )
    logger.debug("gen_mlf_timed(%s): %d conditions, families %s", model.name, len(vcs), families)
    return vcs


@dataclass(frozen=True)
class RawSequent:
    """Unsimplified dwell obligation kept for audit"""

    id: str
    antecedents: Tuple[str, ...]
    succedent: str

    def __str__(self) -> str:
        return ", ".join(self.antecedents) + " |- " + self.succedent


def timed_raw_sequents(model: SwitchedModel, assignment: LyapunovAssignment) -> List[RawSequent]:
    """Per-transition obligations before the exponents are folded"""
    _require_kind(model, MLF_TIMED, (Kind.TIMED,))
    rates, _, _ = _rates(model, assignment)
    out = []
    for t in model.transitions:
        p, q = model.mode(t.source), model.mode(t.target)
        theta = format_rational(t.min_dwell or Fraction(0))
        lam_p, lam_q = format_rational(rates[p.id]), format_rational(rates[q.id])
        antecedents = [f"{theta} <= tau", f"V_{p.id}(x) <= exp(-({lam_p})*tau) * V_{p.id}(x0)"]
        if p.max_dwell is not None:
            antecedents.append(f"tau <= {format_rational(p.max_dwell)}")
        if rates[q.id] <= 0:
            succedent = (
                f"V_{q.id}(x) * exp(-({lam_q})*{format_rational(q.max_dwell)}) <= V_{p.id}(x0)"
            )
        else:
            succedent = f"V_{q.id}(x) <= V_{p.id}(x0)"
        out.append(RawSequent(f"{t.label}/raw", tuple(antecedents), succedent))
    return out
