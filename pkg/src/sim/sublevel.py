"""
Trace-level check of the sublevel trapping property.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Union

from src.sim.compiled import CompiledModel
from src.sim.integrator import Trace
from src.vcgen.conditions import LyapunovAssignment

logger = logging.getLogger(__name__)

STEP_TOLERANCE = 1e-6


@dataclass
class SublevelResult:
    ok: bool
    index: Optional[int] = None
    time: Optional[float] = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> Dict[str, object]:
        return {"ok": self.ok, "index": self.index, "time": self.time, "reason": self.reason}


def _fill_values(trace: Trace, assignment: LyapunovAssignment, compiled: Optional[CompiledModel]) -> None:
    if compiled is None:
        raise ValueError("a compiled model is needed to evaluate the assignment on the trace")
    fresh = CompiledModel(compiled.model, assignment)
    trace.lyapunov = {m: [] for m in fresh.lyapunov_ids}
    for x in trace.states:
        for m, v in fresh.lyapunov_values(x).items():
            trace.lyapunov[m].append(v)


def check_trace_sublevel(
    trace: Trace,
    assignment: Optional[LyapunovAssignment],
    level: Union[Fraction, float],
    tolerance: float = STEP_TOLERANCE,
    compiled: Optional[CompiledModel] = None,
) -> SublevelResult:
    """Active V stays below level and does not increase while its mode stays active"""
    if assignment is not None and compiled is not None:
        _fill_values(trace, assignment, compiled)
    level = float(level)
    event_times = {round(e.time, 12) for e in trace.events}
    active = trace.active_values()

    for k, value in enumerate(active):
        if value is None:
            return SublevelResult(False, k, trace.times[k], f"no Lyapunov value for mode '{trace.modes[k]}'")
        if value >= level:
            return SublevelResult(False, k, trace.times[k], f"V_{trace.modes[k]} = {value:.6g} is not below {level:g}")
        if k == 0 or trace.modes[k] != trace.modes[k - 1] or round(trace.times[k], 12) in event_times:
            continue
        if value > active[k - 1] + tolerance:
            return SublevelResult(
                False, k, trace.times[k], f"V_{trace.modes[k]} increased from {active[k - 1]:.6g} to {value:.6g}"
            )
    logger.debug("sublevel check passed on %d samples", len(active))
    return SublevelResult(True)
