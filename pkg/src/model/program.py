"""
Hybrid-program form of a switched model.

Every kind compiles to init; loop(controller; plant) over a small set of
nodes. The controller of guarded, timed and controlled models is a choice
per current mode between its outgoing transitions and an implicit stay
branch (Skip).
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

from src.core.polynomial import Poly, VectorField
from src.model.model import TIMER, Kind, SwitchedModel
from src.model.predicate import Predicate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Test:
    predicate: Predicate


@dataclass(frozen=True)
class ModeTest:
    mode: str


@dataclass(frozen=True)
class Assign:
    var: str
    value: Poly


@dataclass(frozen=True)
class SetMode:
    mode: str
    transition: Optional[int] = None


@dataclass(frozen=True)
class Evolve:
    mode: str
    field: VectorField
    domain: Predicate


@dataclass(frozen=True)
class Seq:
    items: Tuple["Node", ...]


@dataclass(frozen=True)
class Choice:
    branches: Tuple["Node", ...]


@dataclass(frozen=True)
class Loop:
    body: "Node"


Node = Union[Skip, Test, ModeTest, Assign, SetMode, Evolve, Seq, Choice, Loop]


@dataclass(frozen=True)
class ControllerPath:
    """One root-to-leaf controller branch that switches modes"""

    source: str
    tests: Tuple[Predicate, ...]
    resets: Tuple[Tuple[str, Poly], ...]
    target: str
    transition: Optional[int] = None

    @property
    def hypothesis(self) -> Predicate:
        return Predicate.conj(*self.tests)


@dataclass(frozen=True)
class ControllerIR:
    init: Node
    controller: Node
    plant: Node
    mode_ids: Tuple[str, ...]

    def program(self) -> Node:
        return Seq((self.init, Loop(Seq((self.controller, self.plant)))))

    def paths(self) -> List[ControllerPath]:
        """Mode-switching branches of the controller; stay branches yield none"""
        found: List[ControllerPath] = []
        for mode_id in self.mode_ids:
            _walk(self.controller, mode_id, mode_id, (), (), found)
        return found

    def render(self) -> str:
        return render(self.program())


def _walk(node: Node, source: str, current: Optional[str], tests, resets, found) -> List[tuple]:
    """Symbolic execution returning (mode, tests, resets) outcomes; switches are collected in found"""
    if isinstance(node, Skip):
        return [(current, tests, resets)]
    if isinstance(node, ModeTest):
        return [(current, tests, resets)] if node.mode == current else []
    if isinstance(node, Test):
        return [(current, tests + (node.predicate,), resets)]
    if isinstance(node, Assign):
        return [(current, tests, resets + ((node.var, node.value),))]
    if isinstance(node, SetMode):
        found.append(ControllerPath(source, tests, resets, node.mode, node.transition))
        return [(node.mode, tests, resets)]
    if isinstance(node, Seq):
        states = [(current, tests, resets)]
        for item in node.items:
            nxt = []
            for mode, t, r in states:
                nxt.extend(_walk(item, source, mode, t, r, found))
            states = nxt
        return states
    if isinstance(node, Choice):
        out = []
        for branch in node.branches:
            out.extend(_walk(branch, source, current, tests, resets, found))
        return out
    raise TypeError(f"Controller cannot contain {type(node).__name__}")


def _switch_branch(model: SwitchedModel, index: int) -> Node:
    t = model.transitions[index]
    steps: List[Node] = []
    if model.kind == Kind.TIMED:
        theta = t.min_dwell or 0
        tau = Poly.variable(model.variables, TIMER)
        steps.append(Test(Predicate.atom(Poly.constant(model.variables, theta) - tau, "<=")))
        steps.append(Assign(TIMER, Poly.zero(model.variables)))
    elif t.guard.disjuncts != ((),):
        steps.append(Test(t.guard))
    for var, value in t.reset:
        steps.append(Assign(var, value))
    steps.append(SetMode(t.target, index))
    return Seq(tuple(steps))


def to_program(model: SwitchedModel) -> ControllerIR:
    """Compile a model into its init; loop(controller; plant) form"""
    pick_any = Choice(tuple(SetMode(m) for m in model.mode_ids))
    if model.kind == Kind.TIMED:
        init: Node = Seq((Assign(TIMER, Poly.zero(model.variables)), pick_any))
    else:
        init = pick_any

    if model.kind in (Kind.ARBITRARY, Kind.STATE):
        controller: Node = pick_any
    else:
        per_mode = []
        for mode_id in model.mode_ids:
            branches = [
                _switch_branch(model, i) for i, t in enumerate(model.transitions) if t.source == mode_id
            ]
            branches.append(Skip())
            per_mode.append(Seq((ModeTest(mode_id), Choice(tuple(branches)))))
        controller = Choice(tuple(per_mode))

    plants = []
    for mode in model.modes:
        domain = mode.domain
        if model.kind == Kind.TIMED and mode.max_dwell is not None:
            tau = Poly.variable(model.variables, TIMER)
            domain = domain & Predicate.atom(tau - mode.max_dwell, "<=")
        plants.append(Seq((ModeTest(mode.id), Evolve(mode.id, mode.field, domain))))
    plant = Choice(tuple(plants))

    return ControllerIR(init, controller, plant, model.mode_ids)


def render(node: Node) -> str:
    """Readable program text with the mode written as the variable 'mode'"""
    if isinstance(node, Skip):
        return "skip"
    if isinstance(node, Test):
        return f"?({node.predicate})"
    if isinstance(node, ModeTest):
        return f"?mode = {node.mode}"
    if isinstance(node, Assign):
        return f"{node.var} := {node.value}"
    if isinstance(node, SetMode):
        return f"mode := {node.mode}"
    if isinstance(node, Evolve):
        eqs = ", ".join(f"{v}' = {p}" for v, p in node.field.items())
        if node.domain.disjuncts == ((),):
            return f"{{{eqs}}}"
        return f"{{{eqs} & {node.domain}}}"
    if isinstance(node, Seq):
        return "; ".join(render(i) for i in node.items)
    if isinstance(node, Choice):
        return "{" + " ++ ".join(render(b) for b in node.branches) + "}"
    if isinstance(node, Loop):
        return "{" + render(node.body) + "}*"
    raise TypeError(f"Unknown program node {type(node).__name__}")
