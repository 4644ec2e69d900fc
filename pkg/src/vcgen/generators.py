"""
Proof-rule condition generators.

Each generator turns a model plus a Lyapunov assignment into the list of
arithmetic conditions whose joint validity proves the rule's conclusion.
"""

import logging
from collections import Counter
from itertools import combinations
from typing import Dict, List, Optional, Tuple

from src.core.errors import VCGenError
from src.core.polynomial import Poly, lie_derivative
from src.model.model import Kind, Mode, SwitchedModel
from src.model.predicate import Atom, Predicate, contradiction_in
from src.model.program import to_program
from src.vcgen.conditions import (
    LyapunovAssignment,
    Origin,
    VCKind,
    VerificationCondition,
    make_vc,
)

logger = logging.getLogger(__name__)

CLF = "clf"
CLF_RESTRICTED = "clf-restricted"
MLF_STATE = "mlf-state"
MLF_GUARDED = "mlf-guarded"
MLF_TIMED = "mlf-timed"
CONTROLLED_UNFOLD = "controlled-unfold"

RULES = (CLF, CLF_RESTRICTED, MLF_STATE, MLF_GUARDED, MLF_TIMED, CONTROLLED_UNFOLD)


def _origin_in(model: SwitchedModel, region: Predicate) -> bool:
    return region.closure().holds(model.origin())


def _positivity(
    model: SwitchedModel,
    rule: str,
    tag: str,
    modes: Tuple[str, ...],
    v: Poly,
    region: Predicate,
    origin_always: bool,
) -> List[VerificationCondition]:
    """V(0) = 0 and V > 0 away from the origin on the region"""
    variables = model.variables
    label = Origin(rule, "positive-definite", modes)
    vcs = []
    if origin_always or _origin_in(model, region):
        vcs.append(make_vc(f"{tag}/origin", label, variables, Predicate.true(), v, kind=VCKind.ORIGIN))
    vcs.append(make_vc(f"{tag}/positive", label, variables, region, v, strict=True, excluded_origin=True))
    return vcs


def _radial(model: SwitchedModel, rule: str, tag: str, modes: Tuple[str, ...], v: Poly) -> VerificationCondition:
    label = Origin(rule, "radially-unbounded", modes)
    return make_vc(f"{tag}/radial", label, model.variables, Predicate.true(), v, kind=VCKind.RADIAL)


def _lie(
    model: SwitchedModel,
    rule: str,
    mode: Mode,
    v: Poly,
    region: Predicate,
    origin_always: bool,
    premise: str = "lie-negative",
) -> List[VerificationCondition]:
    """L_f V (0) = 0 and L_f V < 0 away from the origin on the region"""
    variables = model.variables
    derivative = lie_derivative(v, mode.field)
    label = Origin(rule, premise, (mode.id,))
    vcs = []
    if origin_always or _origin_in(model, region):
        vcs.append(
            make_vc(f"{mode.id}/lie-origin", label, variables, Predicate.true(), derivative, kind=VCKind.ORIGIN)
        )
    vcs.append(
        make_vc(f"{mode.id}/lie", label, variables, region, -derivative, strict=True, excluded_origin=True)
    )
    return vcs


def _require_kind(model: SwitchedModel, rule: str, kinds: Tuple[Kind, ...]) -> None:
    if model.kind not in kinds:
        allowed = ", ".join(k.value for k in kinds)
        raise VCGenError(f"rule {rule} needs kind {allowed}, model '{model.name}' is {model.kind.value}")


def gen_clf(model: SwitchedModel, v: Poly) -> List[VerificationCondition]:
    """Common Lyapunov function: one V, decreasing along every mode on its domain"""
    _require_kind(model, CLF, (Kind.ARBITRARY, Kind.STATE))
    unknown = [u for u in v.used_variables() if u not in model.variables]
    if unknown:
        raise VCGenError(f"common Lyapunov function uses undeclared variable '{unknown[0]}'")
    v = v.extend(model.variables)
    everyone = model.mode_ids
    vcs = _positivity(model, CLF, "V", everyone, v, Predicate.true(), origin_always=True)
    vcs.append(_radial(model, CLF, "V", everyone, v))
    for mode in model.modes:
        vcs.extend(_lie(model, CLF, mode, v, mode.domain.closure(), origin_always=True))
    logger.debug("gen_clf(%s): %d conditions", model.name, len(vcs))
    return vcs


def _per_mode_premises(model: SwitchedModel, rule: str, assignment: LyapunovAssignment) -> List[VerificationCondition]:
    vcs: List[VerificationCondition] = []
    for mode in model.modes:
        v = assignment[mode.id]
        domain = mode.domain.closure()
        vcs.extend(_positivity(model, rule, mode.id, (mode.id,), v, domain, origin_always=False))
        vcs.append(_radial(model, rule, mode.id, (mode.id,), v))
        vcs.extend(_lie(model, rule, mode, v, domain, origin_always=False))
    return vcs


def gen_mlf_state(model: SwitchedModel, assignment: LyapunovAssignment) -> List[VerificationCondition]:
    """Multiple Lyapunov functions that agree wherever two domains overlap"""
    _require_kind(model, MLF_STATE, (Kind.STATE,))
    assignment.require(model)
    vcs = _per_mode_premises(model, MLF_STATE, assignment)
    for p, q in combinations(model.modes, 2):
        overlap = p.domain & q.domain
        difference = assignment[p.id] - assignment[q.id]
        vcs.append(
            make_vc(
                f"{p.id}~{q.id}/compat-ge",
                Origin(MLF_STATE, "compatible-ge", (p.id, q.id)),
                model.variables,
                overlap,
                difference,
            )
        )
        vcs.append(
            make_vc(
                f"{p.id}~{q.id}/compat-le",
                Origin(MLF_STATE, "compatible-le", (p.id, q.id)),
                model.variables,
                overlap,
                -difference,
            )
        )
    logger.debug("gen_mlf_state(%s): %d conditions", model.name, len(vcs))
    return vcs


def _transition_ids(labels: List[str]) -> List[str]:
    counts = Counter(labels)
    seen: Dict[str, int] = {}
    out = []
    for label in labels:
        if counts[label] == 1:
            out.append(label)
        else:
            seen[label] = seen.get(label, 0) + 1
            out.append(f"{label}#{seen[label]}")
    return out


def gen_mlf_guarded(model: SwitchedModel, assignment: LyapunovAssignment) -> List[VerificationCondition]:
    """Multiple Lyapunov functions that never increase across a guarded switch"""
    _require_kind(model, MLF_GUARDED, (Kind.GUARDED,))
    assignment.require(model)
    vcs = _per_mode_premises(model, MLF_GUARDED, assignment)
    ids = _transition_ids([t.label for t in model.transitions])
    for vc_id, t in zip(ids, model.transitions):
        vcs.append(
            make_vc(
                f"{vc_id}/descent",
                Origin(MLF_GUARDED, "descent", (t.source, t.target)),
                model.variables,
                t.guard,
                assignment[t.source] - assignment[t.target],
            )
        )
    logger.debug("gen_mlf_guarded(%s): %d conditions", model.name, len(vcs))
    return vcs


def gen_controlled_unfold(model: SwitchedModel, assignment: LyapunovAssignment) -> List[VerificationCondition]:
    """Guarded rule applied to every mode-switching path of the controller"""
    _require_kind(model, CONTROLLED_UNFOLD, (Kind.CONTROLLED,))
    assignment.require(model)
    for t in model.transitions:
        for var, _ in t.reset:
            if var in model.state_vars:
                raise VCGenError(
                    f"transition {t.label} resets state variable '{var}'; the controller may only write auxiliaries"
                )
    vcs = _per_mode_premises(model, CONTROLLED_UNFOLD, assignment)
    paths = to_program(model).paths()
    ids = _transition_ids([f"{p.source}->{p.target}" for p in paths])
    for vc_id, path in zip(ids, paths):
        after = assignment[path.target].substitute(dict(path.resets)) if path.resets else assignment[path.target]
        vcs.append(
            make_vc(
                f"{vc_id}/descent",
                Origin(CONTROLLED_UNFOLD, "descent", (path.source, path.target)),
                model.variables,
                path.hypothesis,
                assignment[path.source] - after,
                description=" ; ".join(f"{v} := {p}" for v, p in path.resets),
            )
        )
    logger.debug("gen_controlled_unfold(%s): %d conditions over %d paths", model.name, len(vcs), len(paths))
    return vcs


def region_obligations(region: Predicate, domain: Predicate) -> List[Atom]:
    """
    Region atoms a mode must keep invariant: atoms of the region disjuncts that
    are consistent with the closed domain, minus atoms over domain polynomials.
    """
    closed = domain.closure()
    domain_polys = {a.canonical()[0] for a in closed.atoms()}
    obligations: List[Atom] = []
    for region_part in region.disjuncts:
        consistent = False
        for domain_part in closed.disjuncts:
            if contradiction_in(region_part + domain_part) is None:
                consistent = True
                break
        if not consistent:
            continue
        for atom in region_part:
            if atom.op == "==" or atom.truth_value() is not None:
                continue
            if atom.canonical()[0] in domain_polys:
                continue
            if atom not in obligations:
                obligations.append(atom)
    return obligations


def gen_restricted_attractivity(
    model: SwitchedModel, v: Poly, region: Optional[Predicate] = None
) -> List[VerificationCondition]:
    """Lie decrease only inside an invariant region, plus the region's invariance"""
    _require_kind(model, CLF_RESTRICTED, (Kind.ARBITRARY, Kind.STATE))
    region = region if region is not None else (model.region or Predicate.true())
    v = v.extend(model.variables)
    vcs: List[VerificationCondition] = []
    for mode in model.modes:
        domain = mode.domain.closure()
        for k, atom in enumerate(region_obligations(region, mode.domain)):
            sense_strict = atom.is_strict()
            poly = atom.as_nonnegative()[0]
            vcs.append(
                make_vc(
                    f"{mode.id}/invariant[{k}]",
                    Origin(CLF_RESTRICTED, "region-invariant", (mode.id,)),
                    model.variables,
                    domain,
                    poly,
                    strict=sense_strict,
                    kind=VCKind.INVARIANCE,
                    field=mode.field,
                    description=f"{atom} stays true in mode {mode.id}",
                )
            )
        vcs.extend(_lie(model, CLF_RESTRICTED, mode, v, region & domain, origin_always=True, premise="restricted-lie"))
    logger.debug("gen_restricted_attractivity(%s): %d conditions", model.name, len(vcs))
    return vcs
