"""
Verification conditions and Lyapunov assignments.

A condition reads: for all quantified variables, hypothesis implies
target >= 0 (or > 0 when strict). Origin conditions instead state that the
target vanishes at the origin, radial conditions that it is radially
unbounded, and invariance conditions that a polynomial keeps its sign along
a mode's flow.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple

from src.core.errors import VCGenError
from src.core.expbound import ExpPoly
from src.core.polynomial import Poly, VectorField, format_rational
from src.model.model import Kind, SwitchedModel
from src.model.predicate import Predicate


class VCKind(str, Enum):
    INEQUALITY = "inequality"
    ORIGIN = "origin"
    RADIAL = "radial"
    INVARIANCE = "invariance"


@dataclass(frozen=True)
class Origin:
    """Which rule premise, for which modes, a condition discharges"""

    rule: str
    premise: str
    modes: Tuple[str, ...]

    def to_dict(self) -> Dict[str, object]:
        return {"rule": self.rule, "premise": self.premise, "modes": list(self.modes)}


@dataclass(frozen=True)
class Conclusion:
    target: ExpPoly
    strict: bool

    @property
    def comparison(self) -> str:
        return ">" if self.strict else ">="

    @property
    def polynomial(self) -> Poly:
        if not self.target.is_rational():
            raise ValueError("conclusion has exponential coefficients")
        return self.target.rational_part()


@dataclass(frozen=True)
class VerificationCondition:
    id: str
    origin: Origin
    variables: Tuple[str, ...]
    hypothesis: Predicate
    conclusion: Conclusion
    kind: VCKind = VCKind.INEQUALITY
    excluded_origin: bool = False
    field: Optional[VectorField] = None
    description: str = ""

    @property
    def strict(self) -> bool:
        return self.conclusion.strict

    @property
    def target(self) -> ExpPoly:
        return self.conclusion.target

    def free_variables(self) -> Tuple[str, ...]:
        used = set(self.hypothesis.used_variables()) | set(self.target.used_variables())
        return tuple(v for v in self.variables if v in used)

    def statement(self) -> str:
        """One-line human-readable form"""
        if self.kind == VCKind.ORIGIN:
            return f"({self.target}) == 0 at the origin"
        if self.kind == VCKind.RADIAL:
            return f"({self.target}) -> oo as |x| -> oo"
        if self.kind == VCKind.INVARIANCE:
            return f"{self.hypothesis} & ({self.target}) {self.conclusion.comparison} 0 is invariant"
        lhs = str(self.hypothesis)
        guard = " & x != 0" if self.excluded_origin else ""
        return f"{lhs}{guard} -> ({self.target}) {self.conclusion.comparison} 0"


@dataclass
class LyapunovAssignment:
    """Candidate functions per mode plus timed-rule rates"""

    functions: Dict[str, Poly]
    rates: Dict[str, Fraction] = field(default_factory=dict)
    sigma: Optional[Fraction] = None

    @classmethod
    def from_model(cls, model: SwitchedModel) -> "LyapunovAssignment":
        functions: Dict[str, Poly] = {}
        for mode_id in model.mode_ids:
            v = model.lyapunov_for(mode_id)
            if v is not None:
                functions[mode_id] = v.extend(model.variables)
        return cls(functions, dict(model.rates), model.sigma)

    @classmethod
    def common(cls, model: SwitchedModel, v: Poly) -> "LyapunovAssignment":
        return cls({m: v.extend(model.variables) for m in model.mode_ids})

    def require(self, model: SwitchedModel) -> None:
        for mode_id in model.mode_ids:
            if mode_id not in self.functions:
                raise VCGenError(f"missing Lyapunov function for mode '{mode_id}'")
            extra = [u for u in self.functions[mode_id].used_variables() if u not in model.variables]
            if extra:
                raise VCGenError(f"Lyapunov function of '{mode_id}' uses undeclared variable '{extra[0]}'")
        if model.kind == Kind.TIMED:
            for mode_id in model.mode_ids:
                if mode_id not in self.rates:
                    raise VCGenError(f"missing decay rate for mode '{mode_id}'")

    def __getitem__(self, mode_id: str) -> Poly:
        return self.functions[mode_id]

    def is_common(self) -> bool:
        values = list(self.functions.values())
        return bool(values) and all(v == values[0] for v in values[1:])

    def to_annotations(self) -> str:
        return "".join(f"lyapunov {m} : {v};\n" for m, v in self.functions.items())

    def to_dict(self) -> Dict[str, object]:
        return {
            "functions": {m: str(v) for m, v in self.functions.items()},
            "rates": {m: format_rational(r) for m, r in self.rates.items()},
            "sigma": format_rational(self.sigma) if self.sigma is not None else None,
        }


def condition_groups(vcs: List[VerificationCondition]) -> List[Tuple[str, Tuple[str, ...]]]:
    """Distinct (premise, modes) groups, in first-seen order"""
    seen: Dict[Tuple[str, Tuple[str, ...]], None] = {}
    for vc in vcs:
        seen.setdefault((vc.origin.premise, vc.origin.modes))
    return list(seen)


def make_vc(
    vc_id: str,
    origin: Origin,
    variables: Tuple[str, ...],
    hypothesis: Predicate,
    target,
    strict: bool = False,
    kind: VCKind = VCKind.INEQUALITY,
    excluded_origin: bool = False,
    field: Optional[VectorField] = None,
    description: str = "",
) -> VerificationCondition:
    if isinstance(target, Poly):
        target = ExpPoly.from_poly(target.extend(variables))
    return VerificationCondition(
        id=vc_id,
        origin=origin,
        variables=variables,
        hypothesis=hypothesis,
        conclusion=Conclusion(target, strict),
        kind=kind,
        excluded_origin=excluded_origin,
        field=field,
        description=description,
    )


def substitute_point(point: Mapping[str, Fraction], variables: Tuple[str, ...]) -> Dict[str, Fraction]:
    """Complete a partial point with zeros for unlisted variables"""
    return {v: Fraction(point.get(v, 0)) for v in variables}
