"""
Numeric Lyapunov candidate synthesis.

Candidates come out rationalized but uncertified; the checker decides
whether they prove anything.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.check.sos import SOSProgram
from src.core.config import CheckerSettings
from src.core.errors import SynthesisError
from src.core.polynomial import Poly, lie_derivative, monomials_up_to
from src.model.model import Kind, SwitchedModel
from src.model.predicate import Atom, Predicate
from src.synth.numeric import NumericSolution, SolverStatus, rationalize, rationalize_value, rationalize_vector
from src.synth.sdp import LMIBlock, maximize_margin
from src.synth.templates import Template
from src.vcgen.conditions import LyapunovAssignment

logger = logging.getLogger(__name__)


def _symmetric_basis(n: int) -> List[np.ndarray]:
    basis = []
    for i in range(n):
        for j in range(i, n):
            e = np.zeros((n, n))
            e[i, j] = e[j, i] = 1.0
            basis.append(e)
    return basis


def lmi_common_quadratic(matrices: Sequence[np.ndarray], slack: float, trace_bound: float) -> NumericSolution:
    """P with P > slack*I and A^T P + P A < -slack*I for every A"""
    n = matrices[0].shape[0]
    basis = _symmetric_basis(n)
    eye = np.eye(n)
    blocks = [LMIBlock(-slack * eye, np.array(basis), "P")]
    for k, a in enumerate(matrices):
        coefficients = np.array([-(a.T @ e + e @ a) for e in basis])
        blocks.append(LMIBlock(-slack * eye, coefficients, f"lie[{k}]"))
    blocks.append(LMIBlock(np.array([[trace_bound]]), np.array([[[-np.trace(e)]] for e in basis]), "trace"))
    solution = maximize_margin(blocks, len(basis))
    p = np.zeros((n, n))
    for w, e in zip(solution.values, basis):
        p += w * e
    return NumericSolution(p.ravel(), solution.margin, solution.status, solution.iterations, shape=(n, n))


def _quadratic_form(p_matrix, state: Sequence[str], variables: Sequence[str]) -> Poly:
    total = Poly.zero(tuple(variables))
    xs = [Poly.variable(tuple(variables), v) for v in state]
    for i, xi in enumerate(xs):
        for j, xj in enumerate(xs):
            if p_matrix[i][j]:
                total = total + xi * xj * p_matrix[i][j]
    return total


@dataclass
class _Condition:
    """fixed + sum_k w_k * linear[k] >= 0 on a conjunction of atoms"""

    label: str
    fixed: Poly
    linear: Dict[int, Poly]
    atoms: Tuple[Atom, ...] = ()


@dataclass
class _TemplateProblem:
    variables: Tuple[str, ...]
    templates: List[Template] = field(default_factory=list)
    offsets: List[int] = field(default_factory=list)
    conditions: List[_Condition] = field(default_factory=list)

    @property
    def unknowns(self) -> int:
        return sum(len(t) for t in self.templates)

    def add_template(self, template: Template) -> int:
        self.offsets.append(self.unknowns)
        self.templates.append(template)
        return len(self.templates) - 1

    def linear_map(self, t: int, transform=lambda p: p, scale: int = 1) -> Dict[int, Poly]:
        offset = self.offsets[t]
        return {offset + k: transform(b) * scale for k, b in enumerate(self.templates[t].basis_polys())}

    def require(self, label: str, fixed: Poly, linear: Dict[int, Poly], region: Predicate) -> None:
        for k, conjunct in enumerate(region.closure().simplified().disjuncts):
            self.conditions.append(_Condition(f"{label}[{k}]", fixed, linear, tuple(conjunct)))

    def solve(self, settings: CheckerSettings) -> Optional[List[Poly]]:
        program = SOSProgram(self.variables)
        per_unknown: List[Dict[int, Poly]] = [dict() for _ in range(self.unknowns)]
        n_vars = len(self.variables)
        md = settings.sos.multiplier_degree
        for i, cond in enumerate(self.conditions):
            program.add_fixed(cond.fixed, identity=i)
            for k, p in cond.linear.items():
                per_unknown[k][i] = per_unknown[k][i] + p if i in per_unknown[k] else p
            degree = max([cond.fixed.degree()] + [p.degree() for p in cond.linear.values()])
            top = max(2, degree + degree % 2)
            for j, atom in enumerate(cond.atoms):
                for g in atom.as_nonnegative():
                    if g.is_constant() or g.degree() > top:
                        continue
                    half = min(md // 2, (top - g.degree()) // 2)
                    program.add_block(f"{cond.label}/mult{j}", monomials_up_to(n_vars, half), g, identity=i)
            program.add_block(
                f"{cond.label}/square", monomials_up_to(n_vars, top // 2), Poly.constant(self.variables, 1), identity=i
            )
        for k, polys in enumerate(per_unknown):
            program.add_free(f"c{k}", polys)

        values = program.solve_numeric(settings.sos, settings.synthesis.trace_bound)
        if values is None:
            return None
        coefficients = rationalize_vector(values, settings.synthesis.denominator_bound)
        out = []
        for t, template in enumerate(self.templates):
            start = self.offsets[t]
            out.append(template.instantiate(coefficients[start:start + len(template)]))
        return out


def _norm(variables: Sequence[str], state: Sequence[str]) -> Poly:
    return sum((Poly.variable(tuple(variables), v) ** 2 for v in state), Poly.zero(tuple(variables)))


def _fields_linear(model: SwitchedModel) -> bool:
    state = set(model.state_vars)
    for mode in model.modes:
        if not mode.field.is_linear(model.state_vars):
            return False
        for v in model.state_vars:
            if not set(mode.field[v].used_variables()) <= state:
                return False
    return True


def synth_common_quadratic(
    model: SwitchedModel, settings: Optional[CheckerSettings] = None
) -> Optional[Dict[str, Poly]]:
    """One candidate V shared by all modes, or None"""
    settings = settings or CheckerSettings()
    synthesis = settings.synthesis
    if _fields_linear(model):
        matrices = [
            np.array([[float(c) for c in row] for row in mode.field.linear_matrix(model.state_vars)])
            for mode in model.modes
        ]
        solution = lmi_common_quadratic(matrices, synthesis.slack, synthesis.trace_bound)
        logger.info("common quadratic LMI: margin %.3e (%s)", solution.margin, solution.status.value)
        if solution.status != SolverStatus.OPTIMAL or solution.margin <= 0:
            return None
        p_matrix = rationalize(solution, synthesis.denominator_bound)
        v = _quadratic_form(p_matrix, model.state_vars, model.variables)
        return {mode_id: v for mode_id in model.mode_ids}

    logger.info("fields of %s are not linear, trying an SOS template", model.name)
    problem = _TemplateProblem(model.variables)
    t = problem.add_template(Template.polynomial("V", model.variables, model.state_vars, synthesis.template_degree))
    slack = _norm(model.variables, model.state_vars) * -rationalize_value(synthesis.slack, synthesis.denominator_bound)
    problem.require("positive", slack, problem.linear_map(t), Predicate.true())
    for mode in model.modes:
        problem.require(
            f"{mode.id}/lie",
            slack,
            problem.linear_map(t, lambda b, f=mode.field: lie_derivative(b, f), -1),
            mode.domain,
        )
    found = problem.solve(settings)
    if found is None:
        return None
    return {mode_id: found[0] for mode_id in model.mode_ids}


def synth_multiple(model: SwitchedModel, settings: Optional[CheckerSettings] = None) -> Optional[LyapunovAssignment]:
    """Per-mode candidates coupled by compatibility (state) or descent (guarded) premises"""
    settings = settings or CheckerSettings()
    if model.kind not in (Kind.STATE, Kind.GUARDED):
        raise SynthesisError(
            f"multiple Lyapunov synthesis needs a state or guarded model, '{model.name}' is {model.kind.value}"
        )
    if len(model.modes) == 1:
        common = synth_common_quadratic(model, settings)
        return LyapunovAssignment(common) if common is not None else None

    synthesis = settings.synthesis
    problem = _TemplateProblem(model.variables)
    index = {}
    for mode in model.modes:
        index[mode.id] = problem.add_template(
            Template.polynomial(f"V_{mode.id}", model.variables, model.state_vars, synthesis.template_degree)
        )
    slack = _norm(model.variables, model.state_vars) * -rationalize_value(synthesis.slack, synthesis.denominator_bound)
    zero = Poly.zero(model.variables)

    for mode in model.modes:
        t = index[mode.id]
        problem.require(f"{mode.id}/positive", slack, problem.linear_map(t), mode.domain)
        problem.require(
            f"{mode.id}/lie",
            slack,
            problem.linear_map(t, lambda b, f=mode.field: lie_derivative(b, f), -1),
            mode.domain,
        )

    def difference(p: str, q: str, sign: int) -> Dict[int, Poly]:
        linear = problem.linear_map(index[p], scale=sign)
        linear.update(problem.linear_map(index[q], scale=-sign))
        return linear

    if model.kind == Kind.STATE:
        modes = model.modes
        for i, p in enumerate(modes):
            for q in modes[i + 1:]:
                overlap = p.domain & q.domain
                if overlap.is_false():
                    continue
                problem.require(f"{p.id}~{q.id}/ge", zero, difference(p.id, q.id, 1), overlap)
                problem.require(f"{p.id}~{q.id}/le", zero, difference(p.id, q.id, -1), overlap)
    else:
        for t in model.transitions:
            if t.source == t.target:
                continue
            problem.require(f"{t.label}/descent", zero, difference(t.source, t.target, 1), t.guard)

    found = problem.solve(settings)
    if found is None:
        logger.info("no multiple Lyapunov candidates for %s", model.name)
        return None
    return LyapunovAssignment({mode.id: found[index[mode.id]] for mode in model.modes})
