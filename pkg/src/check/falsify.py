"""
Counterexample search for verification conditions.

Points are screened in floating point and every candidate is re-checked in
exact rational arithmetic before it is reported, so a returned
Counterexample always replays.
"""

import logging
import math
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.check.sos import excluded_norm_variables
from src.check.verdict import Counterexample
from src.core.config import FalsifySettings, SymbolicSettings
from src.core.polynomial import compile_polys
from src.model.predicate import Predicate
from src.vcgen.conditions import VCKind, VerificationCondition, substitute_point

logger = logging.getLogger(__name__)

CONFIRM_PER_BATCH = 16


def variable_bounds(hypothesis: Predicate, variables: Sequence[str], box: float) -> Dict[str, Tuple[float, float]]:
    """Sampling box per variable, tightened by single-variable linear atoms of a conjunctive hypothesis"""
    bounds = {v: (-box, box) for v in variables}
    if len(hypothesis.disjuncts) != 1:
        return bounds
    for atom in hypothesis.disjuncts[0]:
        used = atom.poly.used_variables()
        if len(used) != 1 or atom.poly.degree() != 1 or atom.op == "==":
            continue
        v = used[0]
        a = float(atom.poly.coefficient({v: 1}))
        c = float(atom.poly.constant_term())
        edge = -c / a
        lo, hi = bounds[v]
        # a*v + c >= 0 reads v >= edge for a > 0
        lower_side = (atom.op in (">", ">=")) == (a > 0)
        if lower_side and edge > lo:
            lo = edge
        elif not lower_side and edge < hi:
            hi = edge
        if lo <= hi:
            bounds[v] = (lo, hi)
    return bounds


class Falsifier:
    """Seeded sampler for one condition"""

    def __init__(self, vc: VerificationCondition, settings: FalsifySettings, exp_terms: int = 30):
        self.vc = vc
        self.settings = settings
        self.exp_terms = exp_terms
        self.names = list(vc.free_variables())
        self.norm_names = [v for v in excluded_norm_variables(vc) if v in self.names]
        self.bounds = variable_bounds(vc.hypothesis, self.names, settings.box)
        self.parts = sorted(vc.target.exp_parts().items()) + [(Fraction(0), vc.target.rational_part())]
        self.atoms = [list(d) for d in vc.hypothesis.disjuncts]
        flat = [a.poly for d in self.atoms for a in d]
        self._target_fn = compile_polys([p for _, p in self.parts], self.names)
        self._atom_fn = compile_polys(flat, self.names) if flat else None
        self.evaluations = 0

    # float screening

    def _target(self, x: np.ndarray) -> np.ndarray:
        values = self._target_fn(*x.T)
        total = np.zeros(x.shape[0])
        for (r, _), v in zip(self.parts, values):
            total = total + math.exp(float(r)) * np.broadcast_to(v, total.shape)
        return total

    def _hypothesis_margin(self, x: np.ndarray) -> np.ndarray:
        n = x.shape[0]
        if not self.atoms:
            return np.full(n, -np.inf)
        if self._atom_fn is None:
            return np.zeros(n)
        values = [np.broadcast_to(v, (n,)) for v in self._atom_fn(*x.T)]
        best = np.full(n, -np.inf)
        k = 0
        for conjunct in self.atoms:
            worst = np.full(n, np.inf)
            for atom in conjunct:
                v = values[k]
                k += 1
                if atom.op in ("<", "<="):
                    slack = -v
                elif atom.op in (">", ">="):
                    slack = v
                else:
                    slack = -np.abs(v)
                worst = np.minimum(worst, slack)
            best = np.maximum(best, worst)
        return best

    # sampling

    def _uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        lo = np.array([self.bounds[v][0] for v in self.names])
        hi = np.array([self.bounds[v][1] for v in self.names])
        return lo + (hi - lo) * rng.random((n, len(self.names)))

    def _log_scaled(self, rng: np.random.Generator, n: int) -> np.ndarray:
        dims = (n, len(self.names))
        top = max(0, int(math.floor(math.log2(max(self.settings.box, 1.0)))))
        k = rng.integers(-top, self.settings.max_binary_exponent + 1, size=dims)
        sign = rng.choice([-1.0, 1.0], size=dims)
        x = sign * (1.0 + rng.random(dims)) * np.exp2(-k.astype(float))
        x[rng.random(dims) < self.settings.zero_probability] = 0.0
        return x

    def _local(self, rng: np.random.Generator, centers: np.ndarray, n: int) -> np.ndarray:
        picks = centers[rng.integers(0, len(centers), size=n)]
        scale = np.maximum(np.abs(picks), 1e-12) * 10.0 ** (-rng.uniform(0, 6, size=picks.shape))
        return picks + scale * rng.standard_normal(picks.shape)

    # exact confirmation

    def _snap_variants(self, x: np.ndarray) -> List[Dict[str, Fraction]]:
        exact = {v: Fraction(float(c)) for v, c in zip(self.names, x)}
        snapped = {}
        for v, c in zip(self.names, x):
            c = float(c)
            if abs(c) < 1e-300:
                snapped[v] = Fraction(0)
                continue
            power = round(math.log2(abs(c)))
            if abs(abs(c) / 2.0**power - 1.0) < 1e-6:
                snapped[v] = Fraction(2) ** power * (1 if c > 0 else -1)
            else:
                snapped[v] = Fraction(c).limit_denominator(10**6)
        return [snapped, exact]

    def confirm(self, point: Dict[str, Fraction]) -> Optional[Counterexample]:
        vc = self.vc
        full = substitute_point(point, vc.variables)
        if not vc.hypothesis.holds(full):
            return None
        if self.norm_names and all(full[v] == 0 for v in self.norm_names):
            return None
        if vc.target.is_rational():
            value = vc.conclusion.polynomial.evaluate(full)
            if value < 0 or (vc.strict and value == 0):
                return Counterexample(vc.id, full, value)
            return None
        lo, hi = vc.target.enclose_at(full, self.exp_terms)
        if hi < 0 or (vc.strict and hi <= 0):
            return Counterexample(vc.id, full, None, (lo, hi))
        return None

    def run(self, budget: int, seed: int) -> Optional[Counterexample]:
        rng = np.random.default_rng(seed)
        if not self.names:
            return self.confirm({})
        batch = max(1, min(self.settings.batch, budget))
        centers = np.zeros((1, len(self.names)))
        done = 0
        round_index = 0
        while done < budget:
            n = min(batch, budget - done)
            source = round_index % 3
            if source == 0:
                x = self._uniform(rng, n)
            elif source == 1:
                x = self._log_scaled(rng, n)
            else:
                x = self._local(rng, centers, n)
            round_index += 1
            done += n
            self.evaluations += n

            with np.errstate(all="ignore"):
                margin = self._hypothesis_margin(x)
                target = self._target(x)
            inside = margin >= 0
            if self.norm_names:
                idx = [self.names.index(v) for v in self.norm_names]
                inside &= np.any(x[:, idx] != 0, axis=1)
            scores = np.where(inside, target, np.inf)
            order = np.argsort(scores)
            for i in order[:CONFIRM_PER_BATCH]:
                if not np.isfinite(scores[i]) or scores[i] > 1e-9 * max(1.0, abs(float(target[i]))):
                    break
                for point in self._snap_variants(x[i]):
                    found = self.confirm(point)
                    if found is not None:
                        logger.info("counterexample for %s after %d samples", self.vc.id, done)
                        return found

            if np.any(inside):
                candidates = x[inside][np.argsort(target[inside])[:8]]
            else:
                candidates = x[np.argsort(-margin)[:8]]
            centers = np.vstack([centers, candidates])[-64:]
        logger.debug("no counterexample for %s in %d samples", self.vc.id, done)
        return None


def falsify(
    vc: VerificationCondition,
    budget: Optional[int] = None,
    seed: int = 0,
    settings: Optional[FalsifySettings] = None,
    symbolic: Optional[SymbolicSettings] = None,
) -> Optional[Counterexample]:
    """Search for an exact counterexample; None is not a proof"""
    settings = settings or FalsifySettings()
    budget = settings.budget if budget is None else budget
    if budget < 1:
        raise ValueError(f"falsify budget must be positive, got {budget}")
    if vc.kind != VCKind.INEQUALITY:
        return None
    exp_terms = (symbolic or SymbolicSettings()).exp_terms
    return Falsifier(vc, settings, exp_terms).run(budget, seed)
