"""
Float-compiled view of a switched model for simulation.
"""

import logging
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from src.core.errors import SimulationError
from src.core.polynomial import Poly, compile_polys
from src.model.model import TIMER, Kind, SwitchedModel
from src.model.predicate import Predicate
from src.model.program import ControllerIR, Evolve, Seq, to_program
from src.vcgen.conditions import LyapunovAssignment

logger = logging.getLogger(__name__)


class CompiledPredicate:
    """Signed slack of a DNF predicate at a float point"""

    def __init__(self, predicate: Predicate, variables: Sequence[str]):
        self.predicate = predicate
        atoms = [a for d in predicate.disjuncts for a in d]
        self._values = compile_polys([a.poly for a in atoms], variables) if atoms else None
        self._layout = []
        k = 0
        for d in predicate.disjuncts:
            self._layout.append([(k + i, a.op) for i, a in enumerate(d)])
            k += len(d)

    def margin(self, x: np.ndarray) -> float:
        """max over disjuncts of the smallest atom slack; >= 0 on the closure"""
        if not self._layout:
            return float("-inf")
        values = self._values(*x) if self._values is not None else ()
        best = float("-inf")
        for conjunct in self._layout:
            worst = float("inf")
            for k, op in conjunct:
                v = values[k]
                slack = -v if op in ("<", "<=") else v if op in (">", ">=") else -abs(v)
                worst = min(worst, slack)
            best = max(best, worst)
        return best

    def holds(self, x: np.ndarray, tolerance: float = 0.0) -> bool:
        return self.margin(x) >= -tolerance


class CompiledModel:
    """Vector fields, domains, controller and Lyapunov values as float callables"""

    def __init__(self, model: SwitchedModel, assignment: Optional[LyapunovAssignment] = None):
        self.model = model
        self.variables = model.variables
        self.index = {v: i for i, v in enumerate(self.variables)}
        self.state_slice = slice(0, len(model.state_vars))
        self.timer_index = self.index.get(TIMER) if model.kind == Kind.TIMED else None
        self.ir: ControllerIR = to_program(model)

        self._rhs: Dict[str, Callable[..., tuple]] = {}
        for mode in model.modes:
            self._rhs[mode.id] = compile_polys([mode.field[v] for v in self.variables], self.variables)

        self._predicates: Dict[Predicate, CompiledPredicate] = {}
        self._polys: Dict[Poly, Callable[..., tuple]] = {}
        self.domains: Dict[str, CompiledPredicate] = {}
        for node in self.ir.plant.branches:
            evolve = node.items[-1] if isinstance(node, Seq) else node
            if isinstance(evolve, Evolve):
                self.domains[evolve.mode] = self.predicate(evolve.domain)

        if assignment is None:
            assignment = LyapunovAssignment.from_model(model)
        self.lyapunov_ids = [m for m in model.mode_ids if m in assignment.functions]
        self._lyapunov = (
            compile_polys([assignment[m] for m in self.lyapunov_ids], self.variables) if self.lyapunov_ids else None
        )

    @property
    def mode_ids(self):
        return self.model.mode_ids

    def predicate(self, p: Predicate) -> CompiledPredicate:
        if p not in self._predicates:
            self._predicates[p] = CompiledPredicate(p, self.variables)
        return self._predicates[p]

    def evaluate(self, p: Poly, x: np.ndarray) -> float:
        if p not in self._polys:
            self._polys[p] = compile_polys([p], self.variables)
        return float(self._polys[p](*x)[0])

    def rhs(self, mode_id: str, x: np.ndarray) -> np.ndarray:
        return np.array(self._rhs[mode_id](*x), dtype=float)

    def domain_margin(self, mode_id: str, x: np.ndarray) -> float:
        return self.domains[mode_id].margin(x)

    def lyapunov_values(self, x: np.ndarray) -> Dict[str, float]:
        if self._lyapunov is None:
            return {}
        return dict(zip(self.lyapunov_ids, (float(v) for v in self._lyapunov(*x))))

    def state_norm(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(x[self.state_slice]))

    def initial_vector(self, x0: Union[Mapping[str, float], Sequence[float]]) -> np.ndarray:
        """Full variable vector from state values; auxiliaries and timer start at 0"""
        x = np.zeros(len(self.variables))
        if isinstance(x0, Mapping):
            unknown = [v for v in x0 if v not in self.index]
            if unknown:
                raise SimulationError(f"initial state names undeclared variable '{unknown[0]}'")
            for v, value in x0.items():
                x[self.index[v]] = float(value)
        else:
            values = [float(v) for v in x0]
            if len(values) != len(self.model.state_vars):
                raise SimulationError(
                    f"initial state has {len(values)} values for {len(self.model.state_vars)} state variables"
                )
            x[self.state_slice] = values
        if not np.all(np.isfinite(x)):
            raise SimulationError("initial state must be finite")
        return x


def compile_model(
    model: Union[SwitchedModel, CompiledModel], assignment: Optional[LyapunovAssignment] = None
) -> CompiledModel:
    if isinstance(model, CompiledModel):
        return model
    return CompiledModel(model, assignment)


def state_names(compiled: CompiledModel) -> List[str]:
    return list(compiled.model.state_vars + compiled.model.aux_vars)
