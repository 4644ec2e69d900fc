"""
Concrete execution of the controller part of a model's hybrid program.

Tests are checked with a small tolerance so states located on a boundary
by event bisection still enable the branches that boundary belongs to.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from src.model.program import Assign, Choice, ModeTest, Node, Seq, SetMode, Skip, Test
from src.sim.compiled import CompiledModel

logger = logging.getLogger(__name__)


@dataclass
class Outcome:
    """One way the controller can leave mode/state"""

    mode: str
    state: np.ndarray
    transition: Optional[int] = None
    switched: bool = False

    @property
    def label(self) -> str:
        return self.mode if self.transition is None else f"{self.mode} (transition {self.transition})"


def execute(compiled: CompiledModel, node: Node, mode: Optional[str], x: np.ndarray, tolerance: float) -> List[Outcome]:
    """All outcomes of node from (mode, x); branches with failing tests yield nothing"""
    return [Outcome(m, s, tr, sw) for m, s, tr, sw in _run(compiled, node, mode, x, None, False, tolerance)]


def _run(compiled, node, mode, x, transition, switched, tolerance):
    if isinstance(node, Skip):
        return [(mode, x, transition, switched)]
    if isinstance(node, ModeTest):
        return [(mode, x, transition, switched)] if node.mode == mode else []
    if isinstance(node, Test):
        if compiled.predicate(node.predicate).holds(x, tolerance):
            return [(mode, x, transition, switched)]
        return []
    if isinstance(node, Assign):
        y = x.copy()
        y[compiled.index[node.var]] = compiled.evaluate(node.value, x)
        return [(mode, y, transition, switched)]
    if isinstance(node, SetMode):
        moved = node.mode != mode or node.transition is not None
        return [(node.mode, x, node.transition, switched or moved)]
    if isinstance(node, Seq):
        states = [(mode, x, transition, switched)]
        for item in node.items:
            states = [out for s in states for out in _run(compiled, item, s[0], s[1], s[2], s[3], tolerance)]
        return states
    if isinstance(node, Choice):
        return [out for b in node.branches for out in _run(compiled, b, mode, x, transition, switched, tolerance)]
    raise TypeError(f"Controller cannot execute {type(node).__name__}")


def _can_evolve(compiled: CompiledModel, outcome: Outcome, tolerance: float) -> bool:
    return compiled.domain_margin(outcome.mode, outcome.state) >= -tolerance


def initial_options(compiled: CompiledModel, x: np.ndarray, tolerance: float) -> List[Outcome]:
    """Modes the program may start flowing in from x"""
    outcomes = execute(compiled, compiled.ir.init, None, x, tolerance)
    return [o for o in outcomes if _can_evolve(compiled, o, tolerance)]


def switch_options(compiled: CompiledModel, mode: str, x: np.ndarray, tolerance: float) -> List[Outcome]:
    """Controller branches that change mode or fire a transition, and whose target can flow"""
    outcomes = execute(compiled, compiled.ir.controller, mode, x, tolerance)
    return [o for o in outcomes if o.switched and _can_evolve(compiled, o, tolerance)]


def option_keys(options: List[Outcome]) -> frozenset:
    return frozenset((o.mode, o.transition) for o in options)
