"""
Verdicts, certificates and counterexamples.

Certificates hold only exact data (ints, Fractions rendered as strings,
nested lists and dicts), so a report can be re-checked without trusting any
floating-point computation.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Mapping, Optional, Tuple

from src.core.polynomial import format_rational


class Status(str, Enum):
    PROVED = "Proved"
    REFUTED = "Refuted"
    INCONCLUSIVE = "Inconclusive"


class CertificateKind(str, Enum):
    PD_FACTORIZATION = "PDFactorization"
    SOS_DECOMPOSITION = "SOSDecomposition"
    EXP_COMPARISON = "ExpComparison"
    VACUOUS = "Vacuous"
    IDENTITY = "Identity"


def exact_data(value: Any) -> Any:
    """Normalize certificate payloads; floats and foreign objects are rejected"""
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, Mapping):
        return {str(k): exact_data(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [exact_data(v) for v in value]
    raise TypeError(f"certificates hold exact data only, got {type(value).__name__}")


@dataclass(frozen=True)
class Certificate:
    kind: CertificateKind
    data: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "data", exact_data(self.data))

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, **self.data}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Certificate":
        payload = {k: v for k, v in data.items() if k != "kind"}
        return cls(CertificateKind(data["kind"]), payload)


@dataclass(frozen=True)
class Counterexample:
    vc_id: str
    point: Dict[str, Fraction]
    value: Optional[Fraction] = None
    enclosure: Optional[Tuple[Fraction, Fraction]] = None

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "vc": self.vc_id,
            "point": {v: format_rational(x) for v, x in self.point.items()},
        }
        if self.value is not None:
            data["value"] = format_rational(self.value)
            data["value_float"] = f"{float(self.value):.6e}"
        if self.enclosure is not None:
            data["enclosure"] = [format_rational(self.enclosure[0]), format_rational(self.enclosure[1])]
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Counterexample":
        enclosure = data.get("enclosure")
        return cls(
            data["vc"],
            {v: Fraction(x) for v, x in data["point"].items()},
            Fraction(data["value"]) if data.get("value") is not None else None,
            (Fraction(enclosure[0]), Fraction(enclosure[1])) if enclosure else None,
        )


@dataclass(frozen=True)
class Verdict:
    status: Status
    certificate: Optional[Certificate] = None
    counterexample: Optional[Counterexample] = None
    reason: str = ""

    def __post_init__(self):
        if self.status == Status.PROVED and self.certificate is None:
            raise ValueError("a Proved verdict needs a certificate")
        if self.status == Status.REFUTED and self.counterexample is None:
            raise ValueError("a Refuted verdict needs a counterexample")

    @classmethod
    def proved(cls, kind: CertificateKind, **data) -> "Verdict":
        return cls(Status.PROVED, certificate=Certificate(kind, data))

    @classmethod
    def refuted(cls, counterexample: Counterexample, reason: str = "") -> "Verdict":
        return cls(Status.REFUTED, counterexample=counterexample, reason=reason)

    @classmethod
    def inconclusive(cls, reason: str) -> "Verdict":
        return cls(Status.INCONCLUSIVE, reason=reason)

    @property
    def is_proved(self) -> bool:
        return self.status == Status.PROVED

    def to_dict(self) -> Dict[str, Any]:
        return {
            "verdict": self.status.value,
            "certificate": self.certificate.to_dict() if self.certificate else None,
            "counterexample": self.counterexample.to_dict() if self.counterexample else None,
            "reason": self.reason or None,
        }
