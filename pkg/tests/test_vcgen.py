"""Condition generation for each proof rule."""

import json
from fractions import Fraction

import pytest

from conftest import model_from_text
from src.core.errors import VCGenError
from src.core.polynomial import Poly
from src.model.parser import parse_model
from src.vcgen.conditions import LyapunovAssignment, VCKind, condition_groups
from src.vcgen.dump import dump_vcs, vc_from_dict, vc_to_dict
from src.vcgen.generators import (
    gen_clf,
    gen_controlled_unfold,
    gen_mlf_guarded,
    gen_mlf_state,
    gen_restricted_attractivity,
)
from src.vcgen.timed import (
    ATTRACTIVITY,
    STABILITY,
    attractivity_exponent,
    default_sigma,
    gen_mlf_timed,
    stability_exponent,
    timed_raw_sequents,
)

GUARDED = """
system relay {
  kind guarded;
  var x, y;
  mode left { ode { x' = -x + y; y' = -x - y } }
  mode right { ode { x' = -x - y; y' = x - y } }
  transition left -> right when x >= 0;
  transition right -> left when x <= 0;
  lyapunov left : x^2 + y^2;
  lyapunov right : x^2 + y^2;
}
"""


def by_premise(vcs, premise):
    return [vc for vc in vcs if vc.origin.premise == premise]


class TestMultipleLyapunov:
    def test_example7_counts(self, load):
        model = load("example7")
        vcs = gen_mlf_state(model, LyapunovAssignment.from_model(model))
        # per mode: origin, positive, radial, lie-origin, lie; plus both compatibility directions
        assert len(vcs) == 12
        assert len(condition_groups(vcs)) == 3 * 2 + 2

    def test_example7_compatibility_difference(self, load):
        model = load("example7")
        vcs = gen_mlf_state(model, LyapunovAssignment.from_model(model))
        compat = by_premise(vcs, "compatible-ge")[0]
        x1, x2 = (Poly.variable(model.variables, n) for n in ("x1", "x2"))
        assert compat.conclusion.polynomial == x1 * x2 * Fraction(-33, 10)
        assert compat.hypothesis == model.mode("p").domain & model.mode("q").domain

    def test_canonical_max_pairs(self, load):
        model = load("canonical_max_fixed")
        vcs = gen_mlf_state(model, LyapunovAssignment.from_model(model))
        compat = [vc for vc in vcs if vc.origin.premise.startswith("compatible")]
        assert len(compat) == 12
        same = [vc for vc in compat if vc.conclusion.polynomial.is_zero()]
        # pairs with the same closed form compare equal functions
        assert len(same) == 2 * 2

    def test_origin_condition_only_where_origin_is_in_the_domain(self, load):
        model = load("canonical_max_fixed")
        vcs = gen_mlf_state(model, LyapunovAssignment.from_model(model))
        origin_modes = {vc.origin.modes[0] for vc in vcs if vc.kind == VCKind.ORIGIN}
        assert origin_modes == {"A1"}

    def test_missing_candidate(self, load):
        model = load("example7")
        assignment = LyapunovAssignment({"p": model.lyapunov["p"]})
        with pytest.raises(VCGenError):
            gen_mlf_state(model, assignment)


class TestCommonLyapunov:
    def test_brockett_lie_domains(self, load):
        model = load("brockett_event")
        vcs = gen_clf(model, model.common_lyapunov)
        lie = [vc for vc in vcs if vc.id.endswith("/lie")]
        assert [vc.origin.modes for vc in lie] == [("A",), ("B",), ("C",)]
        assert [str(vc.hypothesis) for vc in lie] == [str(model.mode(m).domain.closure()) for m in "ABC"]
        assert all(vc.strict and vc.excluded_origin for vc in lie)

    def test_wrong_kind(self, load):
        model = load("timed_demo")
        with pytest.raises(VCGenError):
            gen_clf(model, Poly.variable(model.variables, "x") ** 2)

    def test_restricted_attractivity(self, load):
        model = load("brockett_event")
        vcs = gen_restricted_attractivity(model, model.common_lyapunov)
        lie = by_premise(vcs, "restricted-lie")
        assert len([vc for vc in lie if vc.id.endswith("/lie")]) == 3
        invariants = by_premise(vcs, "region-invariant")
        assert invariants
        assert all(vc.kind == VCKind.INVARIANCE and vc.field is not None for vc in invariants)
        x, y, z = (Poly.variable(model.variables, n) for n in "xyz")
        mode_a = [vc for vc in invariants if vc.origin.modes == ("A",)]
        assert (x * x + y * y) / 2 - z in [vc.conclusion.polynomial for vc in mode_a]


class TestGuarded:
    def test_descent_per_transition(self):
        model = model_from_text(GUARDED)
        vcs = gen_mlf_guarded(model, LyapunovAssignment.from_model(model))
        descent = by_premise(vcs, "descent")
        assert [vc.id for vc in descent] == ["left->right/descent", "right->left/descent"]
        assert all(vc.conclusion.polynomial.is_zero() for vc in descent)

    def test_controlled_unfold_substitutes_resets(self):
        model = model_from_text(
            """
            system ctl {
              kind controlled;
              var x;
              aux u;
              mode slow { ode { x' = -x + u } }
              mode fast { ode { x' = -2*x } }
              transition slow -> fast when x >= 1 reset u := 0;
              transition fast -> slow when x <= 1/2 reset u := x/4;
              lyapunov slow : x^2 + u^2;
              lyapunov fast : x^2 + u^2;
            }
            """
        )
        vcs = gen_controlled_unfold(model, LyapunovAssignment.from_model(model))
        descent = {vc.id: vc for vc in by_premise(vcs, "descent")}
        assert set(descent) == {"slow->fast/descent", "fast->slow/descent"}
        x = Poly.variable(model.variables, "x")
        u = Poly.variable(model.variables, "u")
        assert descent["slow->fast/descent"].conclusion.polynomial == u * u
        assert descent["fast->slow/descent"].conclusion.polynomial == u * u - x * x / 16

    def test_unfold_needs_controlled_kind(self):
        model = model_from_text(GUARDED)
        with pytest.raises(VCGenError):
            gen_controlled_unfold(model, LyapunovAssignment.from_model(model))

    def test_controller_may_not_write_state(self):
        # well_formed flags this too; the generator must refuse it on its own
        model = parse_model(
            """
            system bad {
              kind controlled;
              var x;
              aux u;
              mode a { ode { x' = -x } }
              mode b { ode { x' = -x } }
              transition a -> b reset x := 0;
              lyapunov : x^2;
            }
            """
        )
        with pytest.raises(VCGenError):
            gen_controlled_unfold(model, LyapunovAssignment.from_model(model))


class TestTimed:
    def test_exponents(self, load):
        model = load("timed_demo")
        rates = {"s": Fraction(2), "u": Fraction(-2)}
        s_to_u, u_to_s = model.transitions
        assert stability_exponent(model, rates, s_to_u) == 0
        assert stability_exponent(model, rates, u_to_s) == 0
        assert attractivity_exponent(model, rates, s_to_u, Fraction(1)) == -1

    def test_short_dwell_exponent(self, load):
        model = load("timed_demo_short")
        rates = {"s": Fraction(2), "u": Fraction(-2)}
        assert stability_exponent(model, rates, model.transitions[0]) == Fraction(-6, 5)

    def test_families(self, load):
        model = load("timed_demo")
        assignment = LyapunovAssignment.from_model(model)
        stability = gen_mlf_timed(model, assignment, (STABILITY,))
        both = gen_mlf_timed(model, assignment, (STABILITY, ATTRACTIVITY))
        assert len(stability) == 10
        assert len(both) == 12
        assert default_sigma(model, assignment) == 1
        dwell = [vc for vc in stability if vc.id == "s->u/dwell"][0]
        assert dwell.target.is_zero()

    def test_unstable_mode_needs_max_dwell(self):
        model = model_from_text(
            """
            system t {
              kind timed;
              var x;
              mode s { ode { x' = -x } }
              mode u { ode { x' = x } }
              transition s -> u mindwell 1;
              transition u -> s;
              lyapunov : x^2;
              rate s : 2;
              rate u : -2;
            }
            """
        )
        with pytest.raises(VCGenError):
            gen_mlf_timed(model, LyapunovAssignment.from_model(model))

    def test_raw_sequents(self, load):
        model = load("timed_demo")
        raw = timed_raw_sequents(model, LyapunovAssignment.from_model(model))
        assert [s.id for s in raw] == ["s->u/raw", "u->s/raw"]
        assert "1 <= tau" in str(raw[0])
        assert "tau <= 1" in str(raw[1])


class TestDump:
    def test_conditions_survive_json(self, load):
        model = load("timed_demo_short")
        vcs = gen_mlf_timed(model, LyapunovAssignment.from_model(model))
        data = json.loads(dump_vcs(vcs))
        assert len(data) == len(vcs)
        for vc, entry in zip(vcs, data):
            again = vc_from_dict(entry)
            assert again.id == vc.id
            assert again.target == vc.target
            assert again.hypothesis == vc.hypothesis
            assert vc_to_dict(again) == entry
