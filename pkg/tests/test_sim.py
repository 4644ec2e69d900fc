"""Simulation, trace checks and empirical probes."""

import math

import numpy as np
import pytest

from conftest import model_from_text
from src.core.errors import SimulationError
from src.sim.audit import audit_trace
from src.sim.integrator import rk4_step, simulate
from src.sim.io import read_trace_csv, write_trace
from src.sim.policies import ScriptedPolicy, make_policy
from src.sim.probes import probe_attractivity, probe_stability
from src.sim.sublevel import check_trace_sublevel

UNSTABLE = "system grow { kind arbitrary; var x; mode m { ode { x' = x } } }"


def integrate(h, until=5.0):
    x = np.array([1.0])
    for _ in range(int(round(until / h))):
        x = rk4_step(lambda y: -y, x, h)
    return float(x[0])


class TestIntegrator:
    def test_rk4_accuracy(self):
        assert abs(integrate(0.01) - math.exp(-5)) <= 1e-6

    def test_rk4_is_fourth_order(self):
        coarse = abs(integrate(0.1) - math.exp(-5))
        fine = abs(integrate(0.05) - math.exp(-5))
        assert coarse / fine >= 12

    def test_rejects_bad_step(self, decay_model):
        with pytest.raises(ValueError):
            simulate(decay_model, [1.0], dt=0)

    def test_initial_state_shape(self, decay_model):
        with pytest.raises(SimulationError):
            simulate(decay_model, [1.0, 2.0])
        with pytest.raises(SimulationError):
            simulate(decay_model, {"y": 1.0})

    def test_unstable_run_diverges(self):
        trace = simulate(model_from_text(UNSTABLE), [1.0], horizon=40.0, dt=0.01)
        assert trace.end == "diverged"
        assert trace.summary()["max_norm"] > 1e8
        assert trace.norms()[-1] > 1e8


class TestSublevel:
    def test_example7_stays_trapped(self, load):
        model = load("example7")
        trace = simulate(model, {"x1": 0.1, "x2": 0.0}, horizon=2.0, seed=0)
        result = check_trace_sublevel(trace, None, 0.012)
        assert result, result.reason
        # V <= 0.012 and the smallest eigenvalue of V's Gram matrix is 0.175
        assert trace.summary()["max_norm"] <= (0.012 / 0.175) ** 0.5

    def test_timed_demo_is_legal(self, load):
        model = load("timed_demo")
        trace = simulate(model, {"x": 1.0}, horizon=5.0)
        assert audit_trace(model, trace) == []
        assert trace.events

    def test_growth_in_unstable_mode_is_caught(self, load):
        model = load("timed_demo")
        trace = simulate(model, {"x": 0.1}, policy=ScriptedPolicy("u"), horizon=0.5)
        assert set(trace.modes) == {"u"}
        result = check_trace_sublevel(trace, None, 1.0)
        assert not result
        assert "increased" in result.reason

    def test_scripted_schedule_must_increase(self):
        with pytest.raises(ValueError):
            ScriptedPolicy("p", [(1.0, "q"), (0.5, "p")])

    def test_unknown_policy(self, decay_model):
        with pytest.raises(ValueError):
            make_policy("sideways", decay_model.kind)


class TestTraceFiles:
    def test_csv_columns(self, decay_model, tmp_path):
        trace = simulate(decay_model, [1.0], horizon=0.1, dt=0.01)
        csv_path, events_path = write_trace(trace, tmp_path / "decay_trace")
        assert csv_path.name == "decay_trace.csv"
        assert events_path.name == "decay_trace.events.json"
        columns = read_trace_csv(csv_path)
        assert list(columns) == ["t", "mode", "x", "tau", "V_m"]
        assert columns["mode"][0] == "m"
        assert columns["x"][-1] == pytest.approx(math.exp(-0.1), abs=1e-8)
        assert columns["V_m"][-1] == pytest.approx(columns["x"][-1] ** 2)


class TestProbes:
    def test_decaying_model_keeps_full_delta(self, decay_model, settings):
        report = probe_stability(decay_model, [0.5], samples=20, settings=settings, horizon=2.0)
        entry = report.entries[0]
        assert report.ok
        assert entry.delta == 0.5
        assert entry.runs == 20

    @pytest.mark.slow
    def test_unstable_model_has_no_delta(self, settings):
        report = probe_stability(model_from_text(UNSTABLE), [0.5], samples=5, settings=settings, horizon=25.0)
        assert report.entries[0].delta is None
        assert report.violations

    @pytest.mark.slow
    @pytest.mark.parametrize(
        "name", ["example7", "canonical_max_fixed", "cruise_pi_truncated", "timed_demo", "brockett_event"]
    )
    def test_certified_fixtures_have_no_escapes(self, load, settings, name):
        report = probe_stability(load(name), [0.3], samples=200, settings=settings, horizon=5.0)
        assert report.ok
        assert report.entries[0].delta is not None

    @pytest.mark.slow
    def test_brockett_region_attracts(self, load, settings):
        report = probe_attractivity(load("brockett_event"), 0.5, 0.1, samples=100, settings=settings)
        assert report.ok, [v.to_dict() for v in report.violations]
        assert "no initial state in region" not in report.flags

    def test_same_seed_same_report(self, decay_model, settings):
        first = probe_attractivity(decay_model, 1.0, 0.1, samples=10, seed=4, settings=settings, horizon=5.0)
        second = probe_attractivity(decay_model, 1.0, 0.1, samples=10, seed=4, settings=settings, horizon=5.0)
        assert first.to_dict() == second.to_dict()
        # |x| < 1 reaches 0.1 before t = ln 10
        assert 0 < first.entries[0].T <= math.log(10) + 0.02

    def test_attractivity_arguments(self, decay_model):
        with pytest.raises(ValueError):
            probe_attractivity(decay_model, 0.0, 0.1)
