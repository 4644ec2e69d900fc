"""
Static well-formedness checks for parsed models.
"""

import logging

from src.model.model import Diagnostics, Kind, SwitchedModel

logger = logging.getLogger(__name__)


def well_formed(model: SwitchedModel) -> Diagnostics:
    """Check the kind-specific shape of a model; empty entries means accepted"""
    diagnostics = Diagnostics()
    kind = model.kind
    mode_ids = [m.id for m in model.modes]

    if not model.modes:
        diagnostics.error("no-modes", "model declares no modes")
    seen = set()
    for mode_id in mode_ids:
        if mode_id in seen:
            diagnostics.error("duplicate", f"duplicate mode id '{mode_id}'")
        seen.add(mode_id)

    for t in model.transitions:
        for endpoint in (t.source, t.target):
            if endpoint not in seen:
                diagnostics.error("unknown-mode", f"transition {t.label} refers to unknown mode '{endpoint}'")

    if kind in (Kind.ARBITRARY, Kind.STATE) and model.transitions:
        diagnostics.error("kind-shape", f"{kind.value} models switch without explicit transitions")
    if kind == Kind.ARBITRARY:
        for mode in model.modes:
            if mode.domain.disjuncts != ((),):
                diagnostics.error("kind-shape", f"arbitrary switching takes no domain, mode '{mode.id}' has one")

    for mode in model.modes:
        if mode.max_dwell is not None and kind != Kind.TIMED:
            diagnostics.error("kind-shape", f"max dwell on mode '{mode.id}' needs kind timed")
        if mode.max_dwell is not None and mode.max_dwell <= 0:
            diagnostics.error("dwell", f"max dwell of '{mode.id}' must be positive")

    for t in model.transitions:
        if t.min_dwell is not None and kind != Kind.TIMED:
            diagnostics.error("kind-shape", f"min dwell on {t.label} needs kind timed")
        if t.min_dwell is not None and t.min_dwell < 0:
            diagnostics.error("dwell", f"min dwell of {t.label} must be nonnegative")
        if kind == Kind.GUARDED and t.reset:
            diagnostics.error("kind-shape", f"guarded transition {t.label} cannot reset variables")
        if kind == Kind.TIMED and (t.reset or t.guard.disjuncts != ((),)):
            diagnostics.error("kind-shape", f"timed transition {t.label} takes only dwell bounds")
        for var, _ in t.reset:
            if var in model.state_vars:
                diagnostics.error(
                    "reset-state",
                    f"transition {t.label} resets state variable '{var}'; only auxiliary variables may be reset",
                )
            elif var not in model.variables:
                diagnostics.error("unknown-variable", f"transition {t.label} resets undeclared '{var}'")

    if model.aux_vars and kind not in (Kind.CONTROLLED,):
        diagnostics.error("kind-shape", f"auxiliary variables need kind controlled, not {kind.value}")

    if kind == Kind.TIMED:
        has_dwell = any(m.max_dwell is not None for m in model.modes) or any(
            t.min_dwell is not None for t in model.transitions
        )
        if not has_dwell:
            diagnostics.error("timed-dwell", "timed kind requires dwell data (mindwell or maxdwell)")

    origin = model.origin()
    if model.modes and not any(m.domain.closure().holds(origin) for m in model.modes):
        diagnostics.error("origin", "no mode domain contains the origin")

    for mode in model.modes:
        if mode.domain.closure_is_approximate():
            diagnostics.warn(
                "closure",
                f"domain of '{mode.id}' relaxes strict atoms into a strictly larger closed set",
            )
    for t in model.transitions:
        if t.guard.closure_is_approximate():
            diagnostics.warn("closure", f"guard of {t.label} relaxes strict atoms into a larger closed set")

    if model.region is not None and kind not in (Kind.STATE, Kind.ARBITRARY):
        diagnostics.warn("region", f"region annotation is ignored for kind {kind.value}")

    for entry in diagnostics.entries:
        logger.debug("well_formed(%s): %s", model.name, entry)
    return diagnostics
