"""
Verification pipeline: candidates -> conditions -> verdicts -> report.
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from src.analysis.report import Report, build_report
from src.check.dispatcher import check_vc
from src.check.verdict import Verdict
from src.core.config import CheckerSettings
from src.core.errors import SynthesisError, UsageError, VCGenError
from src.model.model import Kind, SwitchedModel
from src.model.parser import parse_annotations, parse_predicate
from src.model.predicate import Predicate
from src.synth.synthesis import synth_common_quadratic, synth_multiple
from src.vcgen.conditions import LyapunovAssignment, VerificationCondition
from src.vcgen.generators import (
    CLF,
    CLF_RESTRICTED,
    CONTROLLED_UNFOLD,
    MLF_GUARDED,
    MLF_STATE,
    MLF_TIMED,
    RULES,
    gen_clf,
    gen_controlled_unfold,
    gen_mlf_guarded,
    gen_mlf_state,
    gen_restricted_attractivity,
)
from src.vcgen.timed import ATTRACTIVITY, STABILITY, gen_mlf_timed

logger = logging.getLogger(__name__)


def select_rule(model: SwitchedModel, assignment: LyapunovAssignment, region: Optional[Predicate] = None) -> str:
    """Proof rule implied by the model kind and the kind of candidate"""
    if model.kind == Kind.GUARDED:
        return MLF_GUARDED
    if model.kind == Kind.TIMED:
        return MLF_TIMED
    if model.kind == Kind.CONTROLLED:
        return CONTROLLED_UNFOLD
    common = assignment.is_common() and len(assignment.functions) == len(model.modes)
    if common and (region is not None or model.region is not None):
        return CLF_RESTRICTED
    if model.kind == Kind.ARBITRARY or common:
        return CLF
    return MLF_STATE


def obtain_assignment(
    model: SwitchedModel,
    source: str,
    settings: CheckerSettings,
    candidate_file: Optional[Path] = None,
) -> LyapunovAssignment:
    """Candidates from the model's annotations, an annotation file, or numeric synthesis"""
    if source == "annotation":
        return LyapunovAssignment.from_model(model)
    if source == "file":
        if candidate_file is None or not Path(candidate_file).exists():
            raise UsageError(f"Candidate file not found: {candidate_file}")
        per_mode, common = parse_annotations(Path(candidate_file).read_text(encoding="utf-8"), model)
        functions = {m: common for m in model.mode_ids} if common is not None else {}
        functions.update(per_mode)
        return LyapunovAssignment(functions, dict(model.rates), model.sigma)
    if source == "synthesize":
        candidates = synthesize(model, settings)
        if candidates is None:
            raise SynthesisError(f"no Lyapunov candidates found for '{model.name}'")
        return candidates
    raise UsageError(f"Unknown candidate source '{source}'")


def synthesize(model: SwitchedModel, settings: CheckerSettings) -> Optional[LyapunovAssignment]:
    if model.kind == Kind.TIMED:
        raise SynthesisError("timed models need annotated decay rates; candidates are not synthesized")
    if model.kind in (Kind.STATE, Kind.GUARDED):
        return synth_multiple(model, settings)
    common = synth_common_quadratic(model, settings)
    return LyapunovAssignment(common) if common is not None else None


def generate(
    model: SwitchedModel,
    rule: str,
    assignment: LyapunovAssignment,
    region: Optional[Predicate] = None,
    attractivity: bool = False,
) -> List[VerificationCondition]:
    if rule not in RULES:
        raise UsageError(f"Unknown rule '{rule}', expected one of {', '.join(RULES)}")
    if rule in (CLF, CLF_RESTRICTED):
        if not assignment.is_common() or len(assignment.functions) != len(model.modes):
            raise VCGenError(f"rule {rule} needs one Lyapunov function shared by every mode")
        v = next(iter(assignment.functions.values()))
        if rule == CLF:
            return gen_clf(model, v)
        return gen_restricted_attractivity(model, v, region)
    if rule == MLF_STATE:
        return gen_mlf_state(model, assignment)
    if rule == MLF_GUARDED:
        return gen_mlf_guarded(model, assignment)
    if rule == MLF_TIMED:
        families = (STABILITY, ATTRACTIVITY) if attractivity or model.sigma is not None else (STABILITY,)
        return gen_mlf_timed(model, assignment, families)
    return gen_controlled_unfold(model, assignment)


def _check_one(args: Tuple[VerificationCondition, CheckerSettings, int]) -> Tuple[Verdict, float]:
    vc, settings, seed = args
    start = time.perf_counter()
    verdict = check_vc(vc, settings, seed)
    return verdict, (time.perf_counter() - start) * 1000.0


def check_all(
    vcs: List[VerificationCondition], settings: CheckerSettings, seed: int = 0, jobs: int = 1
) -> List[Tuple[VerificationCondition, Verdict, float]]:
    """Verdicts in condition order; each condition gets its own seed so jobs never changes results"""
    work = [(vc, settings, seed + k) for k, vc in enumerate(vcs)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_check_one, work))
    else:
        outcomes = [_check_one(w) for w in work]
    results = []
    for vc, (verdict, millis) in zip(vcs, outcomes):
        logger.info("%s: %s", vc.id, verdict.status.value)
        results.append((vc, verdict, millis))
    return results


def verify(
    model: SwitchedModel,
    text: str,
    assignment: LyapunovAssignment,
    settings: CheckerSettings,
    seed: int = 0,
    rule: Optional[str] = None,
    region: Optional[str] = None,
    attractivity: bool = False,
    jobs: int = 1,
) -> Report:
    start = time.perf_counter()
    region_predicate = parse_predicate(region, model) if region else None
    rule = rule or select_rule(model, assignment, region_predicate)
    vcs = generate(model, rule, assignment, region_predicate, attractivity)
    logger.info("%s: %d conditions under %s", model.name, len(vcs), rule)
    results = check_all(vcs, settings, seed, jobs)
    candidates: Dict[str, object] = assignment.to_dict()
    return build_report(
        model.name,
        text,
        model.kind.value,
        rule,
        results,
        seed,
        candidates,
        (time.perf_counter() - start) * 1000.0,
    )
