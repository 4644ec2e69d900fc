"""Candidate synthesis and truncation."""

from fractions import Fraction

import numpy as np
import pytest

from conftest import model_from_text
from src.check.dispatcher import check_vc
from src.check.quadratic import check_pd_quadratic
from src.core.errors import SynthesisError
from src.core.linalg import gram_of_quadratic
from src.core.polynomial import Poly
from src.synth.numeric import NumericSolution, SolverStatus, rationalize, rationalize_value
from src.synth.sdp import LMIBlock, maximize_margin
from src.synth.synthesis import lmi_common_quadratic, synth_common_quadratic, synth_multiple
from src.synth.truncation import truncate_small_terms
from src.vcgen.generators import gen_clf

TWO_MODES = """
system pair {
  kind arbitrary;
  var x, y;
  mode a { ode { x' = -x + y; y' = -2*y } }
  mode b { ode { x' = -2*x; y' = x - y } }
}
"""


class TestTruncation:
    def test_cruise_candidate_loses_linear_terms(self, load, settings):
        model = load("cruise_pi")
        v = model.lyapunov["normal_PI"]
        truncated, report = truncate_small_terms(v, settings.synthesis.truncation_threshold)
        assert report["kept"] == 3
        assert sorted(d["monomial"] for d in report["dropped"]) == [[0, 1], [1, 0]]
        assert truncated.is_homogeneous(2)
        names = ["intV", "relV"]
        assert check_pd_quadratic(gram_of_quadratic(truncated, names), True, names).is_proved

    def test_negative_threshold(self, decay_model):
        with pytest.raises(ValueError):
            truncate_small_terms(Poly.variable(decay_model.variables, "x"), -1)

    def test_zero_polynomial(self, decay_model):
        with pytest.raises(SynthesisError):
            truncate_small_terms(Poly.zero(decay_model.variables), 1e-10)

    def test_nothing_dropped_without_small_terms(self, load):
        v = load("example7").lyapunov["p"]
        truncated, report = truncate_small_terms(v, 1e-10)
        assert truncated == v
        assert report["dropped"] == []


class TestRationalize:
    def test_bounded_denominator(self):
        assert rationalize_value(0.1, 10) == Fraction(1, 10)
        assert rationalize_value(1 / 3, 1000) == Fraction(1, 3)

    def test_non_finite(self):
        with pytest.raises(ValueError):
            rationalize_value(float("inf"), 10)

    def test_symmetric_matrix(self):
        solution = NumericSolution(np.array([1.0, 0.2500001, 0.2499999, 2.0]), 1.0, SolverStatus.OPTIMAL, shape=(2, 2))
        matrix = rationalize(solution, 1000)
        assert matrix == [[1, Fraction(1, 4)], [Fraction(1, 4), 2]]

    def test_polynomial(self):
        solution = NumericSolution(np.array([0.5, 2.0]), 1.0, SolverStatus.OPTIMAL,
                                   variables=("x",), monomials=[(2,), (0,)])
        p = rationalize(solution)
        assert p.coefficient({"x": 2}) == Fraction(1, 2)
        assert p.coefficient({}) == 2


class TestMarginSolver:
    def test_margin_is_capped_by_tightest_block(self):
        # diag(1, w - 1) and [3 - w]: the best margin is 1 at w = 2
        first = LMIBlock(np.diag([1.0, -1.0]), np.array([np.diag([0.0, 1.0])]))
        second = LMIBlock(np.array([[3.0]]), np.array([[[-1.0]]]))
        solution = maximize_margin([first, second], 1)
        assert solution.feasible
        assert solution.margin == pytest.approx(1.0, abs=1e-3)
        assert solution.values[0] == pytest.approx(2.0, abs=1e-2)

    def test_infeasible_blocks(self):
        block = LMIBlock(np.diag([1.0, -1.0]), np.zeros((0, 2, 2)))
        solution = maximize_margin([block], 0)
        assert not solution.feasible
        assert solution.status == SolverStatus.INFEASIBLE



class TestSynthesis:
    def test_lmi_finds_common_matrix(self):
        a = np.array([[-1.0, 1.0], [0.0, -2.0]])
        b = np.array([[-2.0, 0.0], [1.0, -1.0]])
        solution = lmi_common_quadratic([a, b], 1e-6, 1e3)
        assert solution.feasible
        p = np.asarray(solution.values).reshape(2, 2)
        assert np.all(np.linalg.eigvalsh(p) > 0)
        for m in (a, b):
            assert np.all(np.linalg.eigvalsh(m.T @ p + p @ m) < 0)

    def test_common_candidate_certifies(self, settings):
        model = model_from_text(TWO_MODES)
        candidates = synth_common_quadratic(model, settings)
        assert candidates is not None
        v = candidates["a"]
        assert candidates["b"] == v
        verdicts = [check_vc(vc, settings) for vc in gen_clf(model, v)]
        assert all(verdict.is_proved for verdict in verdicts)

    def test_no_common_candidate_for_unstable_mode(self, settings):
        model = model_from_text("system u { kind arbitrary; var x; mode m { ode { x' = x } } }")
        assert synth_common_quadratic(model, settings) is None

    def test_multiple_needs_switching_structure(self, load, settings):
        with pytest.raises(SynthesisError):
            synth_multiple(load("timed_demo"), settings)

    @pytest.mark.slow
    def test_multiple_candidates_for_example7(self, load, settings):
        assignment = synth_multiple(load("example7"), settings)
        assert assignment is not None
        assert set(assignment.functions) == {"p", "q"}
