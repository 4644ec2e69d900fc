"""Exact checking: quadratic forms, SOS, exponential bounds, falsification, replay."""

import random

import pytest

from src.check.dispatcher import check_vc
from src.check.exp_check import check_exp_vc
from src.check.falsify import falsify
from src.check.invariance import check_set_invariance
from src.check.quadratic import check_pd_quadratic
from src.check.replay import replay_verdict
from src.check.sos import check_sos_certificate
from src.check.verdict import CertificateKind, Status, Verdict
from src.core.polynomial import Poly
from src.model.parser import parse_predicate
from src.model.predicate import Predicate
from src.vcgen.conditions import LyapunovAssignment, Origin, VCKind, make_vc
from src.vcgen.generators import gen_clf, gen_mlf_state
from src.vcgen.timed import gen_mlf_timed

XY = ("x", "y")
LABEL = Origin("test", "positive-definite", ("m",))


def quadratic(a, b, c):
    x, y = Poly.variable(XY, "x"), Poly.variable(XY, "y")
    return x * x * a + x * y * (2 * b) + y * y * c


class TestQuadraticForms:
    def test_agrees_with_determinant_oracle(self):
        rng = random.Random(2024)
        for _ in range(500):
            a, b, c = (rng.randint(-5, 5) for _ in range(3))
            vc = make_vc("q", LABEL, XY, Predicate.true(), quadratic(a, b, c), strict=True, excluded_origin=True)
            verdict = check_vc(vc)
            if a > 0 and a * c - b * b > 0:
                assert verdict.status == Status.PROVED, (a, b, c)
                assert verdict.certificate.kind == CertificateKind.PD_FACTORIZATION
            else:
                assert verdict.status == Status.REFUTED, (a, b, c)
                point = verdict.counterexample.point
                assert any(point[v] != 0 for v in XY)
                assert vc.conclusion.polynomial.evaluate(point) <= 0

    def test_semidefinite_accepted_when_not_strict(self):
        verdict = check_pd_quadratic([[1, 1], [1, 1]], strict=False)
        assert verdict.is_proved
        assert check_pd_quadratic([[1, 1], [1, 1]], strict=True).status == Status.REFUTED

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            check_pd_quadratic([[1, 2], [0, 1]])

    def test_hypothesis_blocks_fast_refutation(self, decay_model):
        # x^2 - 1 >= 0 is false near 0 but the hypothesis keeps x away from it
        x = Poly.variable(decay_model.variables, "x")
        hypothesis = parse_predicate("x >= 1", decay_model)
        vc = make_vc("h", LABEL, decay_model.variables, hypothesis, x * x - 1)
        verdict = check_vc(vc)
        assert verdict.is_proved


class TestPipeline:
    def test_example7_all_proved(self, load, settings):
        model = load("example7")
        vcs = gen_mlf_state(model, LyapunovAssignment.from_model(model))
        verdicts = [check_vc(vc, settings) for vc in vcs]
        assert all(v.is_proved for v in verdicts), [(vc.id, v.reason) for vc, v in zip(vcs, verdicts)]
        for vc, verdict in zip(vcs, verdicts):
            assert replay_verdict(vc, verdict.to_dict()).ok, vc.id

    def test_vacuous_hypothesis(self, decay_model):
        hypothesis = parse_predicate("x > 0 & x < 0", decay_model)
        x = Poly.variable(decay_model.variables, "x")
        vc = make_vc("v", LABEL, decay_model.variables, hypothesis, -x * x)
        verdict = check_vc(vc)
        assert verdict.certificate.kind == CertificateKind.VACUOUS
        assert replay_verdict(vc, verdict.to_dict()).ok

    def test_origin_value(self, decay_model):
        x = Poly.variable(decay_model.variables, "x")
        vc = make_vc("o", LABEL, decay_model.variables, Predicate.true(), x * x + 1, kind=VCKind.ORIGIN)
        verdict = check_vc(vc)
        assert verdict.status == Status.REFUTED
        assert verdict.counterexample.value == 1

    def test_quartic_needs_sos(self, decay_model):
        x = Poly.variable(decay_model.variables, "x")
        vc = make_vc("s", LABEL, decay_model.variables, Predicate.true(), x ** 4 + x * x, strict=True,
                     excluded_origin=True)
        verdict = check_vc(vc)
        assert verdict.certificate.kind == CertificateKind.SOS_DECOMPOSITION
        assert replay_verdict(vc, verdict.to_dict()).ok

    def test_sos_search_directly(self, decay_model, settings):
        x = Poly.variable(decay_model.variables, "x")
        vc = make_vc("s", LABEL, decay_model.variables, Predicate.true(), x ** 4 + 1)
        verdict = check_sos_certificate(vc, settings)
        assert verdict.is_proved
        assert replay_verdict(vc, verdict.to_dict()).ok

    def test_multiplier_degree_setting_is_honoured(self, decay_model, settings):
        x = Poly.variable(decay_model.variables, "x")
        vc = make_vc("s", LABEL, decay_model.variables, parse_predicate("x >= 0", decay_model), x ** 3 + x)
        verdict = check_sos_certificate(vc, settings)
        assert verdict.is_proved
        assert verdict.certificate.data["disjuncts"][0]["multiplier_degree"] == 2
        assert replay_verdict(vc, verdict.to_dict()).ok
        constant_multipliers = settings.with_overrides({"sos.multiplier_degree": 0})
        assert not check_sos_certificate(vc, constant_multipliers).is_proved

    def test_brockett_common_function(self, load, settings):
        model = load("brockett_event")
        verdicts = {vc.id: check_vc(vc, settings) for vc in gen_clf(model, model.common_lyapunov)}
        assert verdicts["V/positive"].is_proved
        assert verdicts["V/radial"].is_proved
        # L V vanishes on the z axis, so strict decrease fails away from the origin
        assert not verdicts["A/lie"].is_proved


class TestFalsify:
    def test_cruise_candidate_goes_negative(self, load, settings):
        model = load("cruise_pi")
        vcs = gen_mlf_state(model, LyapunovAssignment.from_model(model))
        positive = [vc for vc in vcs if vc.id == "normal_PI/positive"][0]
        counterexample = falsify(positive, seed=0, settings=settings.falsify, symbolic=settings.symbolic)
        assert counterexample is not None
        assert positive.hypothesis.holds(counterexample.point)
        assert positive.conclusion.polynomial.evaluate(counterexample.point) == counterexample.value
        assert counterexample.value < 0

    def test_budget_must_be_positive(self, decay_model):
        x = Poly.variable(decay_model.variables, "x")
        vc = make_vc("b", LABEL, decay_model.variables, Predicate.true(), x * x)
        with pytest.raises(ValueError):
            falsify(vc, budget=0)

    def test_true_condition_survives(self, decay_model):
        x = Poly.variable(decay_model.variables, "x")
        vc = make_vc("t", LABEL, decay_model.variables, Predicate.true(), x * x + 1)
        assert falsify(vc, budget=2000, seed=3) is None

    def test_same_seed_same_answer(self, decay_model):
        x = Poly.variable(decay_model.variables, "x")
        vc = make_vc("d", LABEL, decay_model.variables, Predicate.true(), x * x - 1)
        first, second = falsify(vc, seed=5), falsify(vc, seed=5)
        assert first is not None
        assert first.point == second.point


class TestExponentialConditions:
    def test_exact_dwell_is_identity(self, load, settings):
        model = load("timed_demo")
        vcs = {vc.id: vc for vc in gen_mlf_timed(model, LyapunovAssignment.from_model(model))}
        verdict = check_vc(vcs["s->u/dwell"], settings)
        assert verdict.is_proved
        assert verdict.certificate.kind == CertificateKind.IDENTITY

    def test_short_dwell_refuted_by_enclosure(self, load, settings):
        model = load("timed_demo_short")
        vcs = {vc.id: vc for vc in gen_mlf_timed(model, LyapunovAssignment.from_model(model))}
        vc = vcs["s->u/dwell"]
        verdict = check_vc(vc, settings)
        assert verdict.status == Status.REFUTED
        assert verdict.counterexample.point["x"] != 0
        assert replay_verdict(vc, verdict.to_dict()).ok

    def test_rational_targets_pass_straight_through(self, decay_model, settings):
        x = Poly.variable(decay_model.variables, "x")
        vc = make_vc("s", LABEL, decay_model.variables, Predicate.true(), x * x, strict=True, excluded_origin=True)
        calls = []

        def checker(inner, s):
            calls.append(inner.id)
            return check_vc(inner, s)

        assert check_exp_vc(vc, checker, settings).is_proved
        assert calls == ["s"]

    def test_rates_hold(self, load, settings):
        model = load("timed_demo")
        for vc in gen_mlf_timed(model, LyapunovAssignment.from_model(model)):
            if vc.id.endswith("/rate"):
                assert check_vc(vc, settings).is_proved, vc.id


class TestInvariance:
    def test_brockett_region_boundary_is_darboux(self, load, settings):
        model = load("brockett_event")
        x, y, z = (Poly.variable(model.variables, n) for n in "xyz")
        verdict = check_set_invariance(model, "A", (x * x + y * y) / 2 - z, settings=settings)
        assert verdict.is_proved
        assert verdict.certificate.data["method"] == "darboux"

    def test_sense_is_checked(self, load):
        model = load("brockett_event")
        with pytest.raises(ValueError):
            check_set_invariance(model, "A", Poly.variable(model.variables, "z"), sense="<=")

    def test_replay_rejects_foreign_certificate(self, load, settings):
        model = load("example7")
        vcs = {vc.id: vc for vc in gen_mlf_state(model, LyapunovAssignment.from_model(model))}
        entry = check_vc(vcs["p/positive"], settings).to_dict()
        assert replay_verdict(vcs["p/positive"], entry).ok
        assert not replay_verdict(vcs["q/positive"], entry).ok

    def test_refuted_verdict_needs_counterexample(self):
        with pytest.raises(ValueError):
            Verdict(Status.REFUTED)
