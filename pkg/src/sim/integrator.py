"""
Fixed-step RK4 simulation of switched executions with event location.

Domain exits and newly enabled controller branches inside a step are found
by bisection on the step length, so switches happen at the located event
time rather than at the next grid point.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.config import SimulationSettings
from src.model.model import SwitchedModel
from src.sim.compiled import CompiledModel, compile_model
from src.sim.interpreter import initial_options, option_keys, switch_options
from src.sim.policies import SwitchContext, SwitchingPolicy, default_policy
from src.vcgen.conditions import LyapunovAssignment

logger = logging.getLogger(__name__)

DIVERGENCE_NORM = 1e8
MAX_IMMEDIATE_EVENTS = 50


@dataclass
class SwitchEvent:
    time: float
    source: Optional[str]
    target: Optional[str]
    reason: str
    transition: Optional[int] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            "time": self.time,
            "source": self.source,
            "target": self.target,
            "reason": self.reason,
            "transition": self.transition,
        }


@dataclass
class Trace:
    """Samples of one execution; mode is constant between consecutive events"""

    variables: Tuple[str, ...]
    state_vars: Tuple[str, ...]
    policy: str
    seed: int
    times: List[float] = field(default_factory=list)
    modes: List[str] = field(default_factory=list)
    states: List[np.ndarray] = field(default_factory=list)
    dwell: List[float] = field(default_factory=list)
    lyapunov: Dict[str, List[float]] = field(default_factory=dict)
    events: List[SwitchEvent] = field(default_factory=list)
    end: str = "horizon"
    horizon: float = 0.0
    dt: float = 0.0

    def __len__(self) -> int:
        return len(self.times)

    @property
    def stuck(self) -> bool:
        return self.end == "stuck"

    def state_array(self) -> np.ndarray:
        if not self.states:
            return np.zeros((0, len(self.variables)))
        return np.vstack(self.states)

    def norms(self) -> np.ndarray:
        n = len(self.state_vars)
        return np.array([float(np.linalg.norm(x[:n])) for x in self.states])

    def active_values(self) -> List[Optional[float]]:
        """Value of the active mode's Lyapunov function at every sample"""
        return [
            self.lyapunov[m][k] if m in self.lyapunov else None for k, m in enumerate(self.modes)
        ]

    def record(self, t: float, mode: str, x: np.ndarray, dwell: float, values: Mapping[str, float]) -> None:
        if self.times and t <= self.times[-1]:
            self.modes[-1] = mode
            self.states[-1] = x.copy()
            self.dwell[-1] = dwell
            for m, v in values.items():
                self.lyapunov[m][-1] = v
            return
        self.times.append(t)
        self.modes.append(mode)
        self.states.append(x.copy())
        self.dwell.append(dwell)
        for m, v in values.items():
            self.lyapunov.setdefault(m, []).append(v)

    def summary(self) -> Dict[str, object]:
        norms = self.norms()
        return {
            "policy": self.policy,
            "seed": self.seed,
            "samples": len(self.times),
            "events": len(self.events),
            "end": self.end,
            "final_time": self.times[-1] if self.times else 0.0,
            "max_norm": float(norms.max()) if len(norms) else 0.0,
            "final_norm": float(norms[-1]) if len(norms) else 0.0,
        }


def rk4_step(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> np.ndarray:
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def bisect_event(
    advance: Callable[[float], np.ndarray],
    happened: Callable[[np.ndarray], bool],
    h: float,
    iterations: int,
    width: float,
) -> Tuple[float, float]:
    """(lo, hi) with happened false at lo and true at hi; happened(advance(h)) must be true"""
    lo, hi = 0.0, h
    for _ in range(iterations):
        if hi - lo <= width:
            break
        mid = 0.5 * (lo + hi)
        if happened(advance(mid)):
            hi = mid
        else:
            lo = mid
    return lo, hi


class Simulator:
    """One execution of a compiled model under a policy"""

    def __init__(
        self,
        compiled: CompiledModel,
        policy: SwitchingPolicy,
        settings: SimulationSettings,
        seed: int = 0,
    ):
        self.compiled = compiled
        self.policy = policy
        self.settings = settings
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.tolerance = settings.domain_tolerance

    def _ctx(self, mode, x, t, dwell, dt) -> SwitchContext:
        return SwitchContext(self.compiled, mode, x, t, dwell, dt, self.rng)

    def _outside(self, mode: str) -> Callable[[np.ndarray], bool]:
        return lambda y: self.compiled.domain_margin(mode, y) < -self.tolerance

    def run(self, x0: np.ndarray, horizon: float, dt: float) -> Trace:
        compiled, settings = self.compiled, self.settings
        trace = Trace(
            compiled.variables, compiled.model.state_vars, self.policy.name, self.seed, horizon=horizon, dt=dt
        )

        choice = self.policy.initial(self._ctx(None, x0, 0.0, 0.0, dt), initial_options(compiled, x0, self.tolerance))
        if choice is None:
            trace.record(0.0, "", x0, 0.0, compiled.lyapunov_values(x0))
            trace.events.append(SwitchEvent(0.0, None, None, "stuck"))
            trace.end = "stuck"
            return trace

        mode, x = choice.mode, choice.state
        t, dwell = 0.0, 0.0
        trace.events.append(SwitchEvent(0.0, None, mode, "initial", choice.transition))
        trace.record(t, mode, x, dwell, compiled.lyapunov_values(x))
        enabled = frozenset()
        if self.policy.watches_guards():
            enabled = option_keys(switch_options(compiled, mode, x, self.tolerance))
        immediate = 0
        width = settings.event_tolerance * dt

        while t < horizon - 1e-12:
            h = self.policy.step_limit(t, min(dt, horizon - t))
            f = lambda y, m=mode: compiled.rhs(m, y)  # noqa: E731
            reason = "step"
            if h > 0:
                x_new = rk4_step(f, x, h)
                if not np.all(np.isfinite(x_new)) or compiled.state_norm(x_new) > DIVERGENCE_NORM:
                    if np.all(np.isfinite(x_new)):
                        trace.record(t + h, mode, x_new, dwell + h, compiled.lyapunov_values(x_new))
                    trace.end = "diverged"
                    break

                event_at, event_kind = None, None
                outside = self._outside(mode)
                if outside(x_new):
                    lo, _ = bisect_event(lambda s: rk4_step(f, x, s), outside, h, settings.bisection_iterations, width)
                    event_at, event_kind = lo, "forced"
                if self.policy.watches_guards():
                    now = option_keys(switch_options(compiled, mode, x_new, self.tolerance))
                    if now - enabled:

                        def fresh(y, m=mode, before=enabled):
                            return bool(option_keys(switch_options(compiled, m, y, self.tolerance)) - before)

                        _, hi = bisect_event(
                            lambda s: rk4_step(f, x, s), fresh, h, settings.bisection_iterations, width
                        )
                        if event_at is None or hi < event_at:
                            event_at, event_kind = hi, "enabled"
                    else:
                        enabled = now

                if event_at is not None:
                    immediate = immediate + 1 if event_at <= width else 0
                    if immediate > MAX_IMMEDIATE_EVENTS:
                        logger.debug("switching without time progress at t=%.6g, stopping", t)
                        trace.events.append(SwitchEvent(t, mode, None, "stuck"))
                        trace.end = "stuck"
                        break
                    x = rk4_step(f, x, event_at)
                    t += event_at
                    dwell += event_at
                    reason = event_kind
                else:
                    x, t, dwell = x_new, t + h, dwell + h
                    immediate = 0
                trace.record(t, mode, x, dwell, compiled.lyapunov_values(x))

            options = switch_options(compiled, mode, x, self.tolerance)
            ctx = self._ctx(mode, x, t, dwell, dt)
            if reason == "forced":
                chosen = self.policy.forced(ctx, options)
                if chosen is None:
                    trace.events.append(SwitchEvent(t, mode, None, "stuck"))
                    trace.end = "stuck"
                    break
            elif reason == "enabled":
                new = [o for o in options if (o.mode, o.transition) not in enabled]
                chosen = self.policy.enabled(ctx, new)
            else:
                chosen = self.policy.step(ctx, options)

            if chosen is not None:
                trace.events.append(SwitchEvent(t, mode, chosen.mode, reason, chosen.transition))
                mode, x, dwell = chosen.mode, chosen.state, 0.0
                trace.record(t, mode, x, dwell, compiled.lyapunov_values(x))
            if self.policy.watches_guards():
                enabled = option_keys(switch_options(compiled, mode, x, self.tolerance))
            if self._settled(mode, x):
                trace.end = "settled"
                break

        logger.debug("simulation ended (%s) at t=%.6g after %d events", trace.end, t, len(trace.events))
        return trace

    def _settled(self, mode: str, x: np.ndarray) -> bool:
        if self.settings.settle_norm <= 0 or self.compiled.state_norm(x) >= self.settings.settle_norm:
            return False
        return float(np.linalg.norm(self.compiled.rhs(mode, x))) < self.settings.settle_norm


def simulate(
    model: Union[SwitchedModel, CompiledModel],
    x0: Union[Mapping[str, float], Sequence[float]],
    policy: Optional[SwitchingPolicy] = None,
    horizon: Optional[float] = None,
    dt: Optional[float] = None,
    seed: int = 0,
    settings: Optional[SimulationSettings] = None,
    assignment: Optional[LyapunovAssignment] = None,
) -> Trace:
    """Simulate from x0; the trace ends at the horizon, when stuck, settled or diverged"""
    settings = settings or SimulationSettings()
    compiled = compile_model(model, assignment)
    horizon = settings.horizon if horizon is None else horizon
    dt = settings.dt if dt is None else dt
    if dt <= 0 or horizon <= 0:
        raise ValueError(f"dt and horizon must be positive, got {dt} and {horizon}")
    policy = policy or default_policy(compiled.model.kind, settings)
    x = compiled.initial_vector(x0)
    return Simulator(compiled, policy, settings, seed).run(x, horizon, dt)
