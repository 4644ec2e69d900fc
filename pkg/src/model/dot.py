"""
Graphviz DOT rendering of a model's mode graph.
"""

from typing import List

from src.model.model import Kind, SwitchedModel


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def emit_dot(model: SwitchedModel) -> str:
    """Modes as boxes labelled with their ODEs and domains, transitions as edges"""
    lines: List[str] = [f'digraph "{_escape(model.name)}" {{', "  rankdir=LR;", "  node [shape=box];"]
    for mode in model.modes:
        label = [mode.id]
        for v in model.state_vars + model.aux_vars:
            label.append(f"{v}' = {mode.field[v]}")
        if mode.domain.disjuncts != ((),):
            label.append(f"domain: {mode.domain}")
        if mode.max_dwell is not None:
            label.append(f"maxdwell {mode.max_dwell}")
        if mode.id in model.lyapunov:
            label.append(f"V = {model.lyapunov[mode.id]}")
        text = "\\n".join(_escape(part) for part in label)
        lines.append(f'  "{_escape(mode.id)}" [label="{text}"];')

    for t in model.transitions:
        parts = []
        if t.guard.disjuncts != ((),):
            parts.append(str(t.guard))
        if t.reset:
            parts.append(", ".join(f"{v} := {p}" for v, p in t.reset))
        if t.min_dwell is not None:
            parts.append(f"mindwell {t.min_dwell}")
        label = "\\n".join(_escape(p) for p in parts)
        lines.append(f'  "{_escape(t.source)}" -> "{_escape(t.target)}" [label="{label}"];')

    if model.kind in (Kind.ARBITRARY, Kind.STATE) and len(model.modes) > 1:
        lines.append(f'  label="{model.kind.value} switching";')
    lines.append("}")
    return "\n".join(lines) + "\n"
