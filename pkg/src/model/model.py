"""
Switched-system model types.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from src.core.errors import ModelError
from src.core.polynomial import Poly, VectorField
from src.model.predicate import TRUE, Predicate

TIMER = "tau"


class Kind(str, Enum):
    ARBITRARY = "arbitrary"
    STATE = "state"
    GUARDED = "guarded"
    TIMED = "timed"
    CONTROLLED = "controlled"


@dataclass(frozen=True)
class Mode:
    id: str
    field: VectorField
    domain: Predicate = TRUE
    max_dwell: Optional[Fraction] = None


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    guard: Predicate = TRUE
    reset: Tuple[Tuple[str, Poly], ...] = ()
    min_dwell: Optional[Fraction] = None

    @property
    def label(self) -> str:
        return f"{self.source}->{self.target}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    code: str
    message: str
    line: Optional[int] = None
    column: Optional[int] = None

    def __str__(self) -> str:
        where = f"{self.line}:{self.column}: " if self.line is not None else ""
        return f"{where}{self.severity}[{self.code}] {self.message}"


@dataclass
class Diagnostics:
    """Errors reject a model; warnings only annotate it"""

    entries: List[Diagnostic] = field(default_factory=list)
    warnings: List[Diagnostic] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return not self.entries

    def error(self, code: str, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.entries.append(Diagnostic("error", code, message, line, column))

    def warn(self, code: str, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.warnings.append(Diagnostic("warning", code, message, line, column))

    def extend(self, other: "Diagnostics"):
        self.entries.extend(other.entries)
        self.warnings.extend(other.warnings)

    def codes(self) -> List[str]:
        return [d.code for d in self.entries]

    def __iter__(self):
        return iter(self.entries + self.warnings)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class SwitchedModel:
    name: str
    kind: Kind
    state_vars: Tuple[str, ...]
    modes: Tuple[Mode, ...]
    transitions: Tuple[Transition, ...] = ()
    aux_vars: Tuple[str, ...] = ()
    constants: Dict[str, Fraction] = field(default_factory=dict)
    lyapunov: Dict[str, Poly] = field(default_factory=dict)
    common_lyapunov: Optional[Poly] = None
    rates: Dict[str, Fraction] = field(default_factory=dict)
    sigma: Optional[Fraction] = None
    region: Optional[Predicate] = None

    @property
    def variables(self) -> Tuple[str, ...]:
        """State, auxiliary, then the dwell timer for timed models"""
        timer = (TIMER,) if self.kind == Kind.TIMED else ()
        return self.state_vars + self.aux_vars + timer

    @property
    def mode_ids(self) -> Tuple[str, ...]:
        return tuple(m.id for m in self.modes)

    def mode(self, mode_id: str) -> Mode:
        for m in self.modes:
            if m.id == mode_id:
                return m
        raise ModelError(f"Unknown mode '{mode_id}'")

    def transitions_from(self, mode_id: str) -> List[Transition]:
        return [t for t in self.transitions if t.source == mode_id]

    def lyapunov_for(self, mode_id: str) -> Optional[Poly]:
        if mode_id in self.lyapunov:
            return self.lyapunov[mode_id]
        return self.common_lyapunov

    def origin(self) -> Dict[str, Fraction]:
        return {v: Fraction(0) for v in self.variables}

    def with_changes(self, **changes) -> "SwitchedModel":
        return replace(self, **changes)
