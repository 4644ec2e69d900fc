"""
Sum-of-squares certificates with an exact final check.

For one hypothesis disjunct with equalities e_j and inequalities g_i >= 0 a
certificate is an exact identity

    target - eps * N - sum_i s_i * g_i - sum_{i<j} s_ij * g_i * g_j - s_0
        == sum_j h_j * e_j

where every s is z^T Q z with Q a rational PSD matrix, eps > 0 for strict
conclusions and N is the squared norm (or 1). The numeric solver only
proposes Gram matrices: the linear constraints are solved exactly first, so
rounding the remaining free parameters keeps the identity exact, and PSD-ness
is then decided by an exact LDL^T.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from src.check.equalities import Combo, EqualityReducer, split_disjunct
from src.check.verdict import CertificateKind, Verdict
from src.core.config import CheckerSettings, SosSettings
from src.core.linalg import LinearSolution, ldl_decompose, solve_affine
from src.core.polynomial import Monomial, Poly, monomials_up_to
from src.model.model import TIMER
from src.model.predicate import Atom, contradiction_in
from src.synth.numeric import NumericSolution
from src.synth.sdp import LMIBlock, maximize_margin
from src.vcgen.conditions import VerificationCondition

logger = logging.getLogger(__name__)


@dataclass
class GramBlock:
    """s(x) = z^T Q z, entering identity `identity` as sign * s(x) * multiplier"""

    label: str
    basis: List[Monomial]
    multiplier: Poly
    sign: int = -1
    protected: bool = False
    owner: object = None
    identity: int = 0


@dataclass
class SOSSolution:
    grams: Dict[int, List[List[Fraction]]]
    free: List[Fraction]
    blocks: List[GramBlock]
    margin: float


class SOSProgram:
    """
    Polynomial identities whose unknowns are Gram matrices and free scalars
    shared between them; identity i reads

        fixed_i + sum_k w_k * free_poly_k,i + sum_(b in i) sign_b * s_b * multiplier_b == 0
    """

    def __init__(self, variables: Sequence[str]):
        self.variables = tuple(variables)
        self.blocks: List[GramBlock] = []
        self.free_labels: List[str] = []
        self.free_polys: List[Dict[int, Poly]] = []
        self.fixed: Dict[int, Poly] = {}

    def add_fixed(self, p: Poly, identity: int = 0) -> None:
        current = self.fixed.get(identity, Poly.zero(self.variables))
        self.fixed[identity] = (current + p).extend(self.variables)

    def add_free(self, label: str, p: Union[Poly, Mapping[int, Poly]]) -> int:
        """New scalar unknown w_k; p is its coefficient polynomial per identity"""
        polys = {0: p} if isinstance(p, Poly) else dict(p)
        self.free_labels.append(label)
        self.free_polys.append({i: q.extend(self.variables) for i, q in polys.items()})
        return len(self.free_labels) - 1

    def add_block(
        self,
        label: str,
        basis: List[Monomial],
        multiplier: Poly,
        sign: int = -1,
        protected: bool = False,
        owner: object = None,
        identity: int = 0,
    ) -> int:
        self.blocks.append(
            GramBlock(label, list(basis), multiplier.extend(self.variables), sign, protected, owner, identity)
        )
        return len(self.blocks) - 1

    def block_polynomial(self, b: int, gram: List[List[Fraction]]) -> Poly:
        block = self.blocks[b]
        return gram_polynomial(self.variables, block.basis, gram)

    def _columns(self) -> Dict[tuple, int]:
        cols: Dict[tuple, int] = {}
        for k in range(len(self.free_labels)):
            cols[("free", k)] = len(cols)
        for b, block in enumerate(self.blocks):
            n = len(block.basis)
            for i in range(n):
                for j in range(i, n):
                    cols[("gram", b, i, j)] = len(cols)
        return cols

    def linear_system(self) -> Tuple[Dict[tuple, int], Optional[LinearSolution]]:
        cols = self._columns()
        rows: Dict[Tuple[int, Monomial], Dict[int, Fraction]] = {}
        constants: Dict[Tuple[int, Monomial], Fraction] = {}

        def bump(key: Tuple[int, Monomial], col: int, value: Fraction):
            row = rows.setdefault(key, {})
            row[col] = row.get(col, Fraction(0)) + value

        for identity, fixed in self.fixed.items():
            for mono, c in fixed.terms.items():
                constants[(identity, mono)] = constants.get((identity, mono), Fraction(0)) + c
                rows.setdefault((identity, mono), {})
        for k, polys in enumerate(self.free_polys):
            for identity, p in polys.items():
                for mono, c in p.terms.items():
                    bump((identity, mono), cols[("free", k)], c)
        for b, block in enumerate(self.blocks):
            mult_terms = block.multiplier.terms
            n = len(block.basis)
            for i in range(n):
                for j in range(i, n):
                    pair = tuple(a + c for a, c in zip(block.basis[i], block.basis[j]))
                    factor = block.sign * (1 if i == j else 2)
                    col = cols[("gram", b, i, j)]
                    for mono, c in mult_terms.items():
                        bump((block.identity, tuple(a + d for a, d in zip(pair, mono))), col, factor * c)

        row_list = []
        rhs = []
        for key, row in rows.items():
            clean = {c: v for c, v in row.items() if v != 0}
            row_list.append(clean)
            rhs.append(-constants.get(key, Fraction(0)))
        return cols, solve_affine(row_list, rhs, len(cols))

    def _lmi_blocks(self, cols, linear: LinearSolution, trace_bound: float) -> List[LMIBlock]:
        m = linear.free_dimension
        particular = np.array([float(x) for x in linear.particular])
        basis = np.array([[float(x) for x in vec] for vec in linear.basis]).T if m else np.zeros((len(cols), 0))
        out = []
        trace_const = 0.0
        trace_coeffs = np.zeros(m)
        for b, block in enumerate(self.blocks):
            n = len(block.basis)
            idx = np.zeros((n, n), dtype=int)
            for i in range(n):
                for j in range(i, n):
                    idx[i, j] = idx[j, i] = cols[("gram", b, i, j)]
            constant = particular[idx]
            coefficients = np.transpose(basis[idx], (2, 0, 1)) if m else np.zeros((0, n, n))
            out.append(LMIBlock(constant, coefficients, block.label))
            trace_const += float(np.trace(constant))
            if m:
                trace_coeffs += np.trace(coefficients, axis1=1, axis2=2)
        cap = LMIBlock(
            np.array([[trace_bound - trace_const]]),
            (-trace_coeffs).reshape(m, 1, 1),
            "trace-bound",
        )
        out.append(cap)
        return out

    def _exact(self, cols, linear: LinearSolution, w: np.ndarray, bounds: Sequence[int]) -> Optional[SOSSolution]:
        for bound in bounds:
            w_rat = [Fraction(float(x)).limit_denominator(bound) for x in w]
            u = linear.point(w_rat)
            grams: Dict[int, List[List[Fraction]]] = {}
            ok = True
            for b, block in enumerate(self.blocks):
                n = len(block.basis)
                q = [[u[cols[("gram", b, min(i, j), max(i, j))]] for j in range(n)] for i in range(n)]
                result = ldl_decompose(q)
                if not result.semidefinite or (block.protected and not result.definite):
                    ok = False
                    break
                grams[b] = q
            if ok:
                free = [u[cols[("free", k)]] for k in range(len(self.free_labels))]
                return SOSSolution(grams, free, list(self.blocks), 0.0)
        return None

    def _prune(self, lmi_blocks: List[LMIBlock], w: np.ndarray, tolerance: float) -> bool:
        """Drop basis monomials whose Gram diagonal vanishes; True if anything changed"""
        pruned = False
        keep_blocks: List[GramBlock] = []
        for block, lmi in zip(self.blocks, lmi_blocks):
            if block.protected:
                keep_blocks.append(block)
                continue
            diag = np.diag(lmi.value(w))
            keep = [z for z, d in zip(block.basis, diag) if d > tolerance]
            if len(keep) < len(block.basis):
                pruned = True
            if keep:
                block.basis = keep
                keep_blocks.append(block)
        self.blocks = keep_blocks
        return pruned

    @staticmethod
    def _scale(lmi_blocks: List[LMIBlock], w: np.ndarray) -> float:
        diagonals = [float(np.max(np.abs(np.diag(b.value(w))))) for b in lmi_blocks[:-1] if b.size]
        return max([1.0] + diagonals)

    def solve(self, settings: SosSettings, trace_bound: float = 1e4) -> Optional[SOSSolution]:
        """Numeric search, vanishing-diagonal pruning, exact rounding"""
        for round_index in range(settings.max_rounds):
            cols, linear = self.linear_system()
            if linear is None:
                logger.debug("SOS identity has no exact solution (round %d)", round_index)
                return None
            blocks = self._lmi_blocks(cols, linear, trace_bound)
            numeric: NumericSolution = maximize_margin(blocks, linear.free_dimension)
            w = numeric.values
            scale = self._scale(blocks, w)
            logger.debug("SOS round %d: %d params, margin %.3e", round_index, linear.free_dimension, numeric.margin)

            if numeric.margin > -1e-7 * scale:
                exact = self._exact(cols, linear, w, settings.denominator_bounds)
                if exact is not None:
                    exact.margin = numeric.margin
                    return exact
            if not self._prune(blocks, w, settings.prune_tolerance * scale):
                return None
        return None

    def solve_numeric(self, settings: SosSettings, trace_bound: float = 1e4) -> Optional[np.ndarray]:
        """Float values of the free unknowns at a strictly feasible point, untrusted"""
        for _ in range(settings.max_rounds):
            cols, linear = self.linear_system()
            if linear is None:
                return None
            blocks = self._lmi_blocks(cols, linear, trace_bound)
            numeric = maximize_margin(blocks, linear.free_dimension)
            if numeric.margin > settings.margin_tolerance:
                particular = np.array([float(x) for x in linear.particular])
                if linear.free_dimension:
                    basis = np.array([[float(x) for x in vec] for vec in linear.basis]).T
                    u = particular + basis @ numeric.values
                else:
                    u = particular
                return np.array([u[cols[("free", k)]] for k in range(len(self.free_labels))])
            scale = self._scale(blocks, numeric.values)
            if not self._prune(blocks, numeric.values, settings.prune_tolerance * scale):
                logger.debug("numeric SOS margin %.3e too small", numeric.margin)
                return None
        return None


def gram_polynomial(variables: Sequence[str], basis: List[Monomial], gram: List[List[Fraction]]) -> Poly:
    terms: Dict[Monomial, Fraction] = {}
    n = len(basis)
    for i in range(n):
        for j in range(n):
            if gram[i][j]:
                mono = tuple(a + b for a, b in zip(basis[i], basis[j]))
                terms[mono] = terms.get(mono, Fraction(0)) + gram[i][j]
    return Poly(variables, terms)


def _even_ceiling(d: int) -> int:
    return d + (d % 2)


def _basis_to_data(basis: List[Monomial]) -> List[List[int]]:
    return [list(m) for m in basis]


def _combo_data(combo: Combo, equalities: List[Tuple[Poly, Tuple[int, ...]]]) -> List[Dict[str, object]]:
    return [
        {"atoms": list(equalities[j][1]), "poly": equalities[j][0].to_dict(), "quotient": q.to_dict()}
        for j, q in sorted(combo.items())
        if not q.is_zero()
    ]


def certify_disjunct(
    target: Poly,
    atoms: Sequence[Atom],
    strict: bool,
    norm_variables: Sequence[str],
    settings: SosSettings,
    free_terms: Sequence[Tuple[str, Poly]] = (),
    norm_power: int = 1,
) -> Optional[Dict[str, object]]:
    """
    Exact certificate that target >= 0 (> 0 when strict) on the set cut out
    by atoms. Strictness is certified against eps * N with N the squared norm
    over norm_variables raised to norm_power, or N = 1 without them.
    free_terms adds unknown scalar coefficients (w_k * poly) to the target,
    e.g. a Darboux cofactor. Returns certificate data or None.
    """
    contradiction = contradiction_in(list(atoms))
    if contradiction is not None:
        return {"contradiction": list(contradiction)}

    equalities, inequalities = split_disjunct(atoms)
    reducer = EqualityReducer([e for e, _ in equalities])
    if reducer.inconsistent is not None:
        value, combo = reducer.inconsistent
        return {"inconsistent": {"value": value, "equalities": _combo_data(combo, equalities)}}

    variables = tuple(
        dict.fromkeys(
            target.variables
            + tuple(v for atom in atoms for v in atom.poly.variables)
            + tuple(v for _, p in free_terms for v in p.variables)
        )
    )
    norm = Poly.constant(variables, 1)
    if norm_variables:
        norm = sum((Poly.variable(variables, v) ** 2 for v in norm_variables), Poly.zero(variables)) ** norm_power

    target_red, target_combo = reducer.reduce(target.extend(variables))
    norm_red, norm_combo = reducer.reduce(norm)
    free_red = []
    for label, p in free_terms:
        p_red, p_combo = reducer.reduce(p.extend(variables))
        free_red.append((label, p, p_red, p_combo))

    constraints: List[Tuple[Tuple[int, ...], Poly]] = []
    for g, i in inequalities:
        constraints.append(((i,), g.extend(variables)))
    reduced_constraints = []
    for atom_ids, g in constraints:
        g_red, g_combo = reducer.reduce(g)
        if g_red.is_constant():
            if g_red.constant_term() < 0:
                return {
                    "inconsistent": {
                        "value": g_red.constant_term(),
                        "constraint": list(atom_ids),
                        "equalities": _combo_data(g_combo, equalities),
                    }
                }
            continue
        reduced_constraints.append((atom_ids, g, g_red, g_combo))

    if not free_terms and target_red.is_zero() and not strict:
        return {
            "equalities": _combo_data(target_combo, equalities),
            "constraints": [],
            "epsilon": None,
            "square": None,
            "variables": list(variables),
        }

    pairs = []
    limited = reduced_constraints[: settings.max_products]
    for a, b in combinations(limited, 2):
        g = a[1] * b[1]
        g_red, g_combo = reducer.reduce(g)
        if not g_red.is_constant():
            pairs.append((a[0] + b[0], g, g_red, g_combo))

    all_constraints = reduced_constraints + pairs
    used = set(target_red.used_variables())
    for _, _, g_red, _ in all_constraints:
        used.update(g_red.used_variables())
    for _, _, p_red, _ in free_red:
        used.update(p_red.used_variables())
    if strict:
        used.update(norm_red.used_variables())
    program_vars = tuple(v for v in variables if v in used)

    multiplier_degrees = list(range(0, min(settings.multiplier_degree, settings.multiplier_degree_cap) + 1, 2))
    degrees = [target_red.degree()] + [p.degree() for _, _, p, _ in free_red]
    if strict:
        degrees.append(norm_red.degree())
    base_degree = max(degrees)
    top = max(2, _even_ceiling(max(base_degree, 0)))

    for md in multiplier_degrees:
        program = SOSProgram(program_vars)
        program.add_fixed(target_red.extend(program_vars))
        for label, _, p_red, _ in free_red:
            program.add_free(label, p_red.extend(program_vars))
        n_vars = len(program_vars)
        if strict:
            program.add_block(
                "epsilon", [(0,) * n_vars], norm_red.extend(program_vars), protected=True, owner="epsilon"
            )
        for entry in all_constraints:
            atom_ids, g, g_red, g_combo = entry
            deg = g_red.degree()
            if deg > top:
                continue
            half = min(md // 2, (top - deg) // 2)
            basis = monomials_up_to(n_vars, half)
            program.add_block(f"mult{list(atom_ids)}", basis, g_red.extend(program_vars), owner=entry)
        program.add_block("square", monomials_up_to(n_vars, top // 2), Poly.constant(program_vars, 1), owner="square")

        scale = float(max(Fraction(1), target_red.max_abs_coefficient()))
        trace_bound = 1e3 * scale * max(1, len(program.blocks))
        solution = program.solve(settings, trace_bound=trace_bound)
        if solution is None:
            logger.debug("no certificate with multiplier degree %d", md)
            continue

        grams = solution.grams
        total_combo: Combo = dict(target_combo)

        def add(combo: Combo, factor: Poly):
            for j, q in combo.items():
                term = q * factor
                total_combo[j] = total_combo[j] + term if j in total_combo else term

        epsilon = None
        constraint_data = []
        square = None
        for b_idx, block in enumerate(program.blocks):
            owner = block.owner
            s = program.block_polynomial(b_idx, grams[b_idx])
            gram_data = {"basis": _basis_to_data(block.basis), "gram": grams[b_idx], "variables": list(program_vars)}
            if owner == "epsilon":
                epsilon = {"value": grams[b_idx][0][0], "norm": norm.to_dict()}
                add(norm_combo, -s)
            elif owner == "square":
                square = gram_data
            else:
                atom_ids, g, g_red, g_combo = owner
                add(g_combo, -s)
                constraint_data.append({"atoms": list(atom_ids), "poly": g.to_dict(), **gram_data})
        free_values = []
        for (label, p, p_red, p_combo), value in zip(free_red, solution.free):
            add(p_combo, Poly.constant(variables, value))
            free_values.append({"label": label, "value": value, "poly": p.to_dict()})

        total_combo = {j: q for j, q in total_combo.items() if not q.is_zero()}
        data: Dict[str, object] = {
            "variables": list(variables),
            "multiplier_degree": md,
            "equalities": _combo_data(total_combo, equalities),
            "constraints": constraint_data,
            "epsilon": epsilon,
            "square": square,
        }
        if free_values:
            data["free"] = free_values
        return data
    return None


def excluded_norm_variables(vc: VerificationCondition) -> Tuple[str, ...]:
    """Variables whose joint vanishing is excluded; the timer never counts"""
    if not (vc.strict and vc.excluded_origin):
        return ()
    return tuple(v for v in vc.variables if v != TIMER)


def check_sos_certificate(
    vc: VerificationCondition, settings: Optional[CheckerSettings] = None
) -> Verdict:
    """Search an exact SOS certificate for every hypothesis disjunct"""
    settings = settings or CheckerSettings()
    if not vc.target.is_rational():
        return Verdict.inconclusive("exponential coefficients need the enclosure checker")
    target = vc.conclusion.polynomial
    norm_variables = excluded_norm_variables(vc)

    disjuncts = []
    for k, conjunct in enumerate(vc.hypothesis.disjuncts):
        data = certify_disjunct(target, conjunct, vc.strict, norm_variables, settings.sos)
        if data is None:
            return Verdict.inconclusive(f"no SOS certificate for hypothesis disjunct {k}")
        disjuncts.append({"disjunct": k, **data})
    return Verdict.proved(CertificateKind.SOS_DECOMPOSITION, disjuncts=disjuncts)
