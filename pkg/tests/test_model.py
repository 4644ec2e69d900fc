"""Model text format, well-formedness, transforms and the program form."""

from fractions import Fraction

import pytest

from conftest import model_from_text
from src.core.errors import ModelError
from src.core.polynomial import Poly
from src.model.dot import emit_dot
from src.model.model import Diagnostics, Kind
from src.model.parser import format_model, load_model, parse_annotations, parse_model, parse_predicate
from src.model.predicate import Predicate
from src.model.program import Choice, Evolve, SetMode, to_program
from src.model.transforms import as_arbitrary, ghost_split
from src.model.wellformed import well_formed


def diagnostics_for(text: str) -> Diagnostics:
    result = parse_model(text)
    if isinstance(result, Diagnostics):
        return result
    return well_formed(result)


class TestParse:
    def test_example7(self, load):
        model = load("example7")
        assert model.kind == Kind.STATE
        assert model.mode_ids == ("p", "q")
        assert model.mode("p").field["x1"].coefficient({"x1": 1}) == Fraction(-23, 5)
        assert model.lyapunov["p"].coefficient({"x1": 1, "x2": 1}) == Fraction(-33, 20)
        assert model.mode("p").domain.holds({"x1": 1, "x2": 2})
        assert not model.mode("p").domain.holds({"x1": -1, "x2": 2})

    def test_constants_are_folded(self, load):
        model = load("canonical_max_fixed")
        assert model.constants["gamma"] == -1
        assert model.constants["c"] == Fraction(1, 2)
        # y' = -(a - f) x - (b - g) y + gamma
        assert model.mode("B1").field["y"] == Poly(("x", "y"), {(1, 0): -1, (0, 1): -2, (0, 0): -1})

    def test_ghost_modes_replace_originals(self, load):
        model = load("canonical_max_fixed")
        assert model.mode_ids == ("A1", "A2", "B1", "B2")
        assert model.mode("A1").domain.holds({"x": 0, "y": 0})
        assert not model.mode("A2").domain.holds({"x": 0, "y": 0})
        assert model.mode("A2").domain.holds({"x": 1, "y": 0})

    def test_timed_model_gets_timer(self, load):
        model = load("timed_demo")
        assert model.variables == ("x", "tau")
        assert model.mode("u").max_dwell == 1
        assert model.transitions[0].min_dwell == 1
        assert model.mode("s").field["tau"] == Poly.constant(model.variables, 1)

    def test_region_annotation(self, load):
        model = load("brockett_event")
        assert model.region.holds({"x": 1, "y": 1, "z": Fraction(1, 2)})
        assert not model.region.holds({"x": 0, "y": 0, "z": 1})
        assert model.common_lyapunov is not None

    def test_negation_and_implication(self, load):
        model = load("example7")
        not_negative = parse_predicate("!(x1 < 0)", model)
        assert not_negative.holds({"x1": 0, "x2": 5})
        assert not not_negative.holds({"x1": -1, "x2": 0})
        implication = parse_predicate("x1 >= 0 -> x2 >= x1", model)
        assert implication.holds({"x1": -3, "x2": -9})
        assert implication.holds({"x1": 1, "x2": 2})
        assert not implication.holds({"x1": 2, "x2": 1})
        de_morgan = parse_predicate("!(x1 == 0 & x2 > 1)", model)
        assert de_morgan.holds({"x1": 1, "x2": 5})
        assert de_morgan.holds({"x1": 0, "x2": 1})
        assert not de_morgan.holds({"x1": 0, "x2": 2})

    def test_negated_domain_in_model(self):
        model = model_from_text(
            "system n { kind state; var x, z; "
            "mode a { ode { x' = -x; z' = -z } domain !(z < 0) } "
            "mode b { ode { x' = -x; z' = -z } domain z >= 0 -> x^2/2 >= z } }"
        )
        assert model.mode("a").domain.holds({"x": 0, "z": 0})
        assert not model.mode("a").domain.holds({"x": 0, "z": -1})
        assert not model.mode("b").domain.holds({"x": 1, "z": 1})

    def test_syntax_error_has_position(self):
        result = parse_model("system broken { var x; mode m { ode { x' = -x } ")
        assert isinstance(result, Diagnostics)
        assert result.codes() == ["syntax"]
        assert result.entries[0].line is not None

    def test_load_reports_missing_file(self, tmp_path):
        with pytest.raises(ModelError):
            load_model(tmp_path / "nothing.ssm")

    def test_format_round_trip(self, load):
        model = load("example7")
        again = model_from_text(format_model(model))
        assert again.mode_ids == model.mode_ids
        for mode_id in model.mode_ids:
            assert again.mode(mode_id).field == model.mode(mode_id).field
            assert again.mode(mode_id).domain == model.mode(mode_id).domain
        assert again.lyapunov == model.lyapunov

    def test_predicate_and_annotations(self, load):
        model = load("example7")
        region = parse_predicate("x1^2 + x2^2 <= 1", model)
        assert region.holds({"x1": Fraction(1, 2), "x2": 0})
        per_mode, common = parse_annotations("lyapunov p : x1^2 + x2^2; lyapunov : 2*x1^2 + x2^2;", model)
        assert set(per_mode) == {"p"}
        assert common.coefficient({"x1": 2}) == 2
        with pytest.raises(ModelError):
            parse_annotations("lyapunov r : x1^2;", model)


class TestWellFormed:
    def test_corpus_models_are_accepted(self, corpus):
        for path in sorted(corpus.glob("*.ssm")):
            assert well_formed(load_model(path, check=False)).accepted, path.name

    @pytest.mark.parametrize(
        "text, code",
        [
            ("system s { kind state; var x; mode m { ode { } } }", "missing-ode"),
            ("system s { kind state; var x; mode m { ode { y' = x } } }", "unknown-variable"),
            ("system s { kind state; var x; mode m { ode { x' = -x } } transition m -> m; }", "kind-shape"),
            ("system s { kind arbitrary; var x; mode m { ode { x' = -x } domain x >= 0 } }", "kind-shape"),
            ("system s { kind timed; var x; mode m { ode { x' = -x } } }", "timed-dwell"),
            ("system s { kind state; var x; mode m { ode { x' = -x } domain x >= 1 } }", "origin"),
            ("system s { kind guarded; var x; mode m { ode { x' = -x } } transition m -> n when x > 0; }",
             "unknown-mode"),
            ("system s { kind wobbly; var x; mode m { ode { x' = -x } } }", "kind"),
            ("system s { kind state; var x, x; mode m { ode { x' = -x } } }", "duplicate"),
            ("system s { kind state; var x; mode m { ode { x' = -x } } lyapunov z : x^2; }", "unknown-mode"),
        ],
    )
    def test_negative_fixtures(self, text, code):
        diagnostics = diagnostics_for(text)
        assert not diagnostics.accepted
        assert code in diagnostics.codes()

    def test_strict_domain_warns(self):
        diagnostics = diagnostics_for("system s { kind state; var x; mode m { ode { x' = -x } domain x > 0 & x < 0 } }")
        assert diagnostics.accepted
        assert [w.code for w in diagnostics.warnings] == ["closure"]

    def test_non_polynomial_expression(self):
        diagnostics = diagnostics_for("system s { kind state; var x; mode m { ode { x' = 1/x } } }")
        assert not diagnostics.accepted


class TestTransforms:
    def test_ghost_split_keeps_dynamics(self, load):
        model = load("example7")
        x1 = Poly.variable(model.variables, "x1")
        split = ghost_split(model, "p", x1)
        assert split.mode_ids == ("p1", "p2", "q")
        assert split.mode("p1").field == split.mode("p2").field == model.mode("p").field
        assert split.lyapunov["p1"] == split.lyapunov["p2"] == model.lyapunov["p"]

    def test_ghost_split_needs_state_kind(self, load):
        model = load("timed_demo")
        with pytest.raises(ModelError):
            ghost_split(model, "s", Poly.variable(model.variables, "x"))

    def test_ghost_split_rejects_shadowing(self):
        model = model_from_text(
            "system s { kind state; var x; mode p { ode { x' = -x } } mode p1 { ode { x' = -2*x } } }"
        )
        with pytest.raises(ModelError):
            ghost_split(model, "p", Poly.variable(model.variables, "x"))

    def test_as_arbitrary_forgets_domains(self, load):
        model = as_arbitrary(load("example7"))
        assert model.kind == Kind.ARBITRARY
        assert all(m.domain == Predicate.true() for m in model.modes)
        assert well_formed(model).accepted


class TestProgram:
    def test_state_model_switches_freely(self, load):
        ir = to_program(load("example7"))
        assert isinstance(ir.controller, Choice)
        assert [b.mode for b in ir.controller.branches if isinstance(b, SetMode)] == ["p", "q"]

    def test_guarded_paths_carry_tests_and_resets(self):
        model = model_from_text(
            """
            system ctl {
              kind controlled;
              var x;
              aux u;
              mode slow { ode { x' = -x + u } }
              mode fast { ode { x' = -2*x } }
              transition slow -> fast when x >= 1 reset u := 0;
              transition fast -> slow when x <= 1/2;
            }
            """
        )
        paths = to_program(model).paths()
        assert [(p.source, p.target) for p in paths] == [("slow", "fast"), ("fast", "slow")]
        assert paths[0].resets[0][0] == "u"
        assert len(paths[0].tests) == 1

    def test_timed_plant_bounds_the_timer(self, load):
        ir = to_program(load("timed_demo"))
        evolve_u = ir.plant.branches[1].items[1]
        assert isinstance(evolve_u, Evolve)
        assert evolve_u.domain.holds({"x": 5, "tau": 1})
        assert not evolve_u.domain.holds({"x": 5, "tau": 2})
        assert "loop" in ir.render() or "*" in ir.render()


class TestDot:
    def test_example7_has_two_nodes(self, load):
        dot = emit_dot(load("example7"))
        assert dot.startswith('digraph "example7"')
        assert dot.count("[label=") == 2
        assert "->" not in dot

    def test_transitions_become_edges(self, load):
        dot = emit_dot(load("timed_demo"))
        assert '"s" -> "u"' in dot
        assert "mindwell 1" in dot
