"""
Machine-readable verification reports.

A report carries every condition it judged together with the verdict's
exact certificate or counterexample, so it can be replayed without the
model file or any numeric search.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ValidationError

from src.check.replay import ReplayResult, replay_verdict
from src.check.verdict import Status, Verdict
from src.core.errors import UsageError
from src.core.files import dumps_json
from src.vcgen.conditions import VerificationCondition
from src.vcgen.dump import vc_from_dict, vc_to_dict

logger = logging.getLogger(__name__)

TOOL_VERSION = "0.1.0"

PROVED = "Proved"
REFUTED_PREMISE = "Refuted-Premise"
INCONCLUSIVE = "Inconclusive"


class ModelInfo(BaseModel):
    name: str
    hash: str
    kind: str


class VCEntry(BaseModel):
    id: str
    origin: Dict[str, Any]
    statement: str
    verdict: str
    certificate: Optional[Dict[str, Any]] = None
    counterexample: Optional[Dict[str, Any]] = None
    reason: Optional[str] = None
    millis: Optional[float] = None
    condition: Dict[str, Any]


class Report(BaseModel):
    version: str = TOOL_VERSION
    model: ModelInfo
    rule: str
    candidates: Dict[str, Any] = {}
    vcs: List[VCEntry] = []
    overall: str
    seed: int
    millis: Optional[float] = None

    def counts(self) -> Dict[str, int]:
        out = {s.value: 0 for s in Status}
        for entry in self.vcs:
            out[entry.verdict] = out.get(entry.verdict, 0) + 1
        return out


def model_hash(text: str) -> str:
    return "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()


def overall_status(statuses: List[Status]) -> str:
    """Proved iff every condition is Proved; any refutation refutes a premise"""
    if statuses and all(s == Status.PROVED for s in statuses):
        return PROVED
    if any(s == Status.REFUTED for s in statuses):
        return REFUTED_PREMISE
    return INCONCLUSIVE


def vc_entry(vc: VerificationCondition, verdict: Verdict, millis: Optional[float]) -> VCEntry:
    data = verdict.to_dict()
    return VCEntry(
        id=vc.id,
        origin=vc.origin.to_dict(),
        statement=vc.statement(),
        verdict=data["verdict"],
        certificate=data["certificate"],
        counterexample=data["counterexample"],
        reason=data["reason"],
        millis=millis,
        condition=vc_to_dict(vc),
    )


def build_report(
    name: str,
    text: str,
    kind: str,
    rule: str,
    results: List[tuple],
    seed: int,
    candidates: Optional[Dict[str, Any]] = None,
    millis: Optional[float] = None,
) -> Report:
    """results holds (vc, verdict, millis) triples in condition order"""
    entries = [vc_entry(vc, verdict, ms) for vc, verdict, ms in results]
    return Report(
        model=ModelInfo(name=name, hash=model_hash(text), kind=kind),
        rule=rule,
        candidates=candidates or {},
        vcs=entries,
        overall=overall_status([verdict.status for _, verdict, _ in results]),
        seed=seed,
        millis=millis,
    )


def emit_report(report: Report, normalize: bool = False) -> str:
    """Stable JSON text; normalize drops timings so equal runs give equal bytes"""
    data = report.model_dump(mode="json")
    if normalize:
        data["millis"] = None
        for entry in data["vcs"]:
            entry["millis"] = None
    return dumps_json(data)


def load_report(path: Union[str, Path]) -> Report:
    report_path = Path(path)
    if not report_path.exists():
        raise UsageError(f"Report not found: {report_path}")
    try:
        with open(report_path, "r", encoding="utf-8") as f:
            return Report.model_validate(json.load(f))
    except (json.JSONDecodeError, ValidationError) as e:
        raise UsageError(f"{report_path} is not a verification report: {e}") from e


def replay_report(report: Report) -> List[ReplayResult]:
    """Re-check every stored certificate and counterexample exactly"""
    results = []
    for entry in report.vcs:
        vc = vc_from_dict(entry.condition)
        results.append(replay_verdict(vc, entry.model_dump(mode="json")))
    failed = [r for r in results if not r.ok]
    logger.info("replayed %d conditions, %d mismatches", len(results), len(failed))
    return results
