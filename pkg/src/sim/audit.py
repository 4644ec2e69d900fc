"""
Independent legality audit of simulated traces.

Re-checks a trace against the model directly (domains, guards and dwell
bounds) without going through the simulator's controller interpreter.
"""

import logging
from typing import List

from src.model.model import Kind, SwitchedModel
from src.sim.compiled import CompiledModel, compile_model
from src.sim.integrator import Trace

logger = logging.getLogger(__name__)


def audit_trace(model: SwitchedModel, trace: Trace, tolerance: float = 1e-6) -> List[str]:
    """Problems found in the trace; empty when every sample and switch is legal"""
    compiled: CompiledModel = compile_model(model)
    problems: List[str] = []

    for a, b in zip(trace.times, trace.times[1:]):
        if b <= a:
            problems.append(f"time does not increase at t={b}")
            break

    for k, (mode, x) in enumerate(zip(trace.modes, trace.states)):
        if not mode:
            continue
        domain = model.mode(mode).domain
        if compiled.predicate(domain).margin(x) < -tolerance:
            problems.append(f"sample {k} at t={trace.times[k]:.6g} lies outside the domain of '{mode}'")
        max_dwell = model.mode(mode).max_dwell
        if model.kind == Kind.TIMED and max_dwell is not None and trace.dwell[k] > float(max_dwell) + tolerance:
            problems.append(f"sample {k} exceeds the maximum dwell {max_dwell} of '{mode}'")

    times = {t: k for k, t in enumerate(trace.times)}
    dwell_before = _dwell_at_events(trace)
    for e, dwell in zip(trace.events, dwell_before):
        if e.transition is None or e.source is None:
            continue
        t = model.transitions[e.transition]
        if t.source != e.source or t.target != e.target:
            problems.append(f"event at t={e.time:.6g} does not match transition {t.label}")
            continue
        if model.kind == Kind.TIMED and t.min_dwell is not None and dwell + tolerance < float(t.min_dwell):
            problems.append(f"{t.label} fired after {dwell:.6g}, before its minimum dwell {t.min_dwell}")
        if model.kind != Kind.TIMED and not t.reset and e.time in times:
            x = trace.states[times[e.time]]
            if compiled.predicate(t.guard).margin(x) < -tolerance:
                problems.append(f"{t.label} fired at t={e.time:.6g} with its guard false")
    if problems:
        logger.warning("trace audit found %d problems", len(problems))
    return problems


def _dwell_at_events(trace: Trace) -> List[float]:
    """Time spent in the source mode before each event"""
    out = []
    last = 0.0
    for e in trace.events:
        out.append(e.time - last)
        if e.target is not None:
            last = e.time
    return out
