"""
Model-to-model rewrites.
"""

import logging

from src.core.errors import ModelError
from src.core.polynomial import Poly, VectorField
from src.model.model import Kind, Mode, SwitchedModel
from src.model.predicate import Predicate

logger = logging.getLogger(__name__)


def ghost_split(model: SwitchedModel, mode_id: str, split: Poly) -> SwitchedModel:
    """
    Replace mode p by p1 (domain & split <= 0) and p2 (domain & split >= 0).

    Both copies keep p's vector field, so the set of executions is unchanged
    while each half may carry its own Lyapunov function.
    """
    if model.kind != Kind.STATE:
        raise ModelError(f"ghost split needs a state-dependent model, got {model.kind.value}")
    original = model.mode(mode_id)
    unknown = [v for v in split.used_variables() if v not in model.variables]
    if unknown:
        raise ModelError(f"ghost split polynomial uses undeclared variable '{unknown[0]}'")
    existing = set(model.mode_ids)
    first, second = f"{mode_id}1", f"{mode_id}2"
    for new_id in (first, second):
        if new_id in existing:
            raise ModelError(f"ghost split of '{mode_id}' would shadow existing mode '{new_id}'")

    split = split.extend(model.variables)
    low = Mode(first, original.field, original.domain & Predicate.atom(split, "<="), original.max_dwell)
    high = Mode(second, original.field, original.domain & Predicate.atom(split, ">="), original.max_dwell)

    modes = []
    for m in model.modes:
        if m.id == mode_id:
            modes.extend([low, high])
        else:
            modes.append(m)

    lyapunov = dict(model.lyapunov)
    if mode_id in lyapunov:
        v = lyapunov.pop(mode_id)
        lyapunov[first] = v
        lyapunov[second] = v
    rates = dict(model.rates)
    if mode_id in rates:
        rate = rates.pop(mode_id)
        rates[first] = rate
        rates[second] = rate

    logger.debug("ghost split of %s into %s and %s by %s", mode_id, first, second, split)
    return model.with_changes(modes=tuple(modes), lyapunov=lyapunov, rates=rates)


def as_arbitrary(model: SwitchedModel) -> SwitchedModel:
    """Forget domains, guards, dwell bounds and auxiliary state: switching becomes arbitrary"""
    state = model.state_vars
    modes = []
    for m in model.modes:
        rhs = {}
        for v in state:
            p = m.field[v]
            extra = [u for u in p.used_variables() if u not in state]
            if extra:
                raise ModelError(f"mode '{m.id}' dynamics depend on non-state variable '{extra[0]}'")
            rhs[v] = p.extend(state)
        modes.append(Mode(m.id, VectorField(state, rhs)))
    lyapunov = {k: v.extend(state) for k, v in model.lyapunov.items() if set(v.used_variables()) <= set(state)}
    common = model.common_lyapunov
    if common is not None and set(common.used_variables()) <= set(state):
        common = common.extend(state)
    else:
        common = None
    return model.with_changes(
        kind=Kind.ARBITRARY,
        modes=tuple(modes),
        transitions=(),
        aux_vars=(),
        region=None,
        lyapunov=lyapunov,
        common_lyapunov=common,
    )
