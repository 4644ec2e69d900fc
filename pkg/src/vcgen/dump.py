"""
JSON form of verification conditions.
"""

import json
from typing import Dict, List, Mapping

from src.core.expbound import ExpPoly
from src.core.polynomial import VectorField
from src.model.predicate import Predicate
from src.vcgen.conditions import Conclusion, Origin, VCKind, VerificationCondition


def vc_to_dict(vc: VerificationCondition) -> Dict[str, object]:
    data: Dict[str, object] = {
        "id": vc.id,
        "origin": vc.origin.to_dict(),
        "kind": vc.kind.value,
        "variables": list(vc.variables),
        "hypothesis": vc.hypothesis.to_dict(),
        "target": vc.target.to_dict(),
        "strict": vc.strict,
        "excluded_origin": vc.excluded_origin,
        "statement": vc.statement(),
    }
    if vc.field is not None:
        data["field"] = vc.field.to_dict()
    if vc.description:
        data["description"] = vc.description
    return data


def vc_from_dict(data: Mapping[str, object]) -> VerificationCondition:
    origin = data["origin"]
    return VerificationCondition(
        id=data["id"],
        origin=Origin(origin["rule"], origin["premise"], tuple(origin["modes"])),
        variables=tuple(data["variables"]),
        hypothesis=Predicate.from_dict(data["hypothesis"]),
        conclusion=Conclusion(ExpPoly.from_dict(data["target"]), bool(data["strict"])),
        kind=VCKind(data["kind"]),
        excluded_origin=bool(data["excluded_origin"]),
        field=VectorField.from_dict(data["field"]) if "field" in data else None,
        description=data.get("description", ""),
    )


def dump_vcs(vcs: List[VerificationCondition]) -> str:
    return json.dumps([vc_to_dict(vc) for vc in vcs], indent=2, ensure_ascii=False)
