"""
Switching policies: how a simulation resolves the model's nondeterminism.

A policy is asked at three kinds of moments: at the start ("initial"), when
the active mode can no longer flow ("forced"), when a new controller branch
becomes enabled ("enabled"), and after every regular step ("step"). Options
are always legal controller outcomes; a policy only picks among them.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.core.config import SimulationSettings
from src.core.errors import SimulationError
from src.model.model import Kind
from src.sim.compiled import CompiledModel
from src.sim.interpreter import Outcome

logger = logging.getLogger(__name__)


@dataclass
class SwitchContext:
    compiled: CompiledModel
    mode: Optional[str]
    x: np.ndarray
    t: float
    dwell: float
    dt: float
    rng: np.random.Generator


class SwitchingPolicy(ABC):
    name = "policy"

    def initial(self, ctx: SwitchContext, options: List[Outcome]) -> Optional[Outcome]:
        return self._pick(ctx, options)

    def forced(self, ctx: SwitchContext, options: List[Outcome]) -> Optional[Outcome]:
        return self._pick(ctx, options)

    def enabled(self, ctx: SwitchContext, options: List[Outcome]) -> Optional[Outcome]:
        return None

    @abstractmethod
    def step(self, ctx: SwitchContext, options: List[Outcome]) -> Optional[Outcome]:
        """Spontaneous switch after a regular step, or None to stay"""

    def watches_guards(self) -> bool:
        return False

    def step_limit(self, t: float, h: float) -> float:
        return h

    def _pick(self, ctx: SwitchContext, options: List[Outcome]) -> Optional[Outcome]:
        if not options:
            return None
        return options[int(ctx.rng.integers(len(options)))]


class RandomDwellPolicy(SwitchingPolicy):
    """Uniform choice among legal switches, attempted at Poisson times after a minimum hold"""

    name = "random"

    def __init__(self, rate: float = 1.0, hold: float = 0.01):
        if rate < 0 or hold < 0:
            raise ValueError(f"rate and hold must be nonnegative, got {rate} and {hold}")
        self.rate = rate
        self.hold = hold

    def step(self, ctx: SwitchContext, options: List[Outcome]) -> Optional[Outcome]:
        if not options or ctx.dwell < self.hold or self.rate == 0:
            return None
        if ctx.rng.random() >= 1.0 - math.exp(-self.rate * ctx.dt):
            return None
        return self._pick(ctx, options)


class GuardDrivenPolicy(SwitchingPolicy):
    """Fires a transition as soon as its guard becomes enabled"""

    name = "guard"

    def watches_guards(self) -> bool:
        return True

    def initial(self, ctx: SwitchContext, options: List[Outcome]) -> Optional[Outcome]:
        if not options:
            return None
        for o in options:
            if o.mode == ctx.compiled.mode_ids[0]:
                return o
        return options[0]

    def enabled(self, ctx: SwitchContext, options: List[Outcome]) -> Optional[Outcome]:
        return self._pick(ctx, options)

    def step(self, ctx: SwitchContext, options: List[Outcome]) -> Optional[Outcome]:
        return None


def _growth(ctx: SwitchContext, outcome: Outcome) -> float:
    """d/dt |x|^2 in the outcome's mode"""
    s = ctx.compiled.state_slice
    return 2.0 * float(outcome.state[s] @ ctx.compiled.rhs(outcome.mode, outcome.state)[s])


class GreedyAdversarialPolicy(SwitchingPolicy):
    """Always flows in the legal mode that increases |x|^2 fastest"""

    name = "greedy"

    def __init__(self, hold: float = 0.01):
        self.hold = hold

    def _best(self, ctx: SwitchContext, options: List[Outcome]) -> Optional[Outcome]:
        if not options:
            return None
        return max(options, key=lambda o: _growth(ctx, o))

    def initial(self, ctx: SwitchContext, options: List[Outcome]) -> Optional[Outcome]:
        return self._best(ctx, options)

    def forced(self, ctx: SwitchContext, options: List[Outcome]) -> Optional[Outcome]:
        return self._best(ctx, options)

    def step(self, ctx: SwitchContext, options: List[Outcome]) -> Optional[Outcome]:
        if ctx.dwell < self.hold:
            return None
        best = self._best(ctx, options)
        if best is None:
            return None
        here = Outcome(ctx.mode, ctx.x)
        return best if _growth(ctx, best) > _growth(ctx, here) + 1e-12 else None


class ScriptedPolicy(SwitchingPolicy):
    """Explicit schedule of (time, mode) switches; illegal entries are skipped with a warning"""

    name = "scripted"

    def __init__(self, initial_mode: str, schedule: Sequence[Tuple[float, str]] = ()):
        times = [t for t, _ in schedule]
        if any(b <= a for a, b in zip(times, times[1:])) or any(t <= 0 for t in times):
            raise ValueError("schedule times must be positive and strictly increasing")
        self.initial_mode = initial_mode
        self.schedule = list(schedule)
        self._next = 0

    def initial(self, ctx: SwitchContext, options: List[Outcome]) -> Optional[Outcome]:
        self._next = 0
        for o in options:
            if o.mode == self.initial_mode:
                return o
        raise SimulationError(f"scripted initial mode '{self.initial_mode}' cannot start from the initial state")

    def step_limit(self, t: float, h: float) -> float:
        if self._next < len(self.schedule):
            return max(0.0, min(h, self.schedule[self._next][0] - t))
        return h

    def forced(self, ctx: SwitchContext, options: List[Outcome]) -> Optional[Outcome]:
        if self._next < len(self.schedule):
            wanted = self.schedule[self._next][1]
            for o in options:
                if o.mode == wanted:
                    self._next += 1
                    return o
        return options[0] if options else None

    def step(self, ctx: SwitchContext, options: List[Outcome]) -> Optional[Outcome]:
        if self._next >= len(self.schedule) or ctx.t < self.schedule[self._next][0] - 1e-12:
            return None
        wanted = self.schedule[self._next][1]
        self._next += 1
        for o in options:
            if o.mode == wanted:
                return o
        logger.warning("scripted switch to %s at t=%.6g is not enabled, staying in %s", wanted, ctx.t, ctx.mode)
        return None


POLICIES = ("random", "guard", "greedy")


def default_policy(kind: Kind, settings: Optional[SimulationSettings] = None) -> SwitchingPolicy:
    settings = settings or SimulationSettings()
    if kind in (Kind.ARBITRARY, Kind.STATE):
        return RandomDwellPolicy(settings.switch_rate, settings.hold_steps * settings.dt)
    return GuardDrivenPolicy()


def make_policy(name: str, kind: Kind, settings: Optional[SimulationSettings] = None) -> SwitchingPolicy:
    settings = settings or SimulationSettings()
    hold = settings.hold_steps * settings.dt
    if name == "default":
        return default_policy(kind, settings)
    if name == "random":
        return RandomDwellPolicy(settings.switch_rate, hold)
    if name == "guard":
        return GuardDrivenPolicy()
    if name == "greedy":
        return GreedyAdversarialPolicy(hold)
    raise ValueError(f"Unknown policy '{name}', expected one of default, {', '.join(POLICIES)}")
