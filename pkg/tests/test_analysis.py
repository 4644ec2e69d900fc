"""Verification pipeline, reports, bench corpus and the command line."""

import json
import shutil

import pytest

from conftest import CORPUS, model_from_text
from src.analysis.bench import bench, bench_summary, fixtures, format_table
from src.analysis.cli import EXIT_ERROR, EXIT_OK, EXIT_REFUTED, main
from src.analysis.report import PROVED, REFUTED_PREMISE, emit_report, load_report, replay_report
from src.analysis.run_config import build_run_config
from src.analysis.runner import generate, obtain_assignment, select_rule, verify
from src.core.errors import SynthesisError, UsageError, VCGenError
from src.vcgen.conditions import LyapunovAssignment
from src.vcgen.generators import CLF, CLF_RESTRICTED, MLF_GUARDED, MLF_STATE, MLF_TIMED


def run_verify(load, settings, name, **kwargs):
    model = load(name)
    text = (CORPUS / f"{name}.ssm").read_text(encoding="utf-8")
    return verify(model, text, LyapunovAssignment.from_model(model), settings, **kwargs)


class TestRuleSelection:
    def test_rules_by_kind(self, load, decay_model):
        for name, rule in [
            ("example7", MLF_STATE),
            ("canonical_max_fixed", MLF_STATE),
            ("brockett_event", CLF_RESTRICTED),
            ("timed_demo", MLF_TIMED),
        ]:
            model = load(name)
            assert select_rule(model, LyapunovAssignment.from_model(model)) == rule, name
        assert select_rule(decay_model, LyapunovAssignment.from_model(decay_model)) == CLF

    def test_guarded_kind(self):
        model = model_from_text(
            "system g { kind guarded; var x; mode a { ode { x' = -x } } mode b { ode { x' = -x } } "
            "transition a -> b when x >= 0; lyapunov : x^2; }"
        )
        assert select_rule(model, LyapunovAssignment.from_model(model)) == MLF_GUARDED

    def test_common_rule_needs_common_function(self, load):
        model = load("example7")
        with pytest.raises(VCGenError):
            generate(model, CLF, LyapunovAssignment.from_model(model))

    def test_unknown_rule(self, load):
        model = load("example7")
        with pytest.raises(UsageError):
            generate(model, "nonsense", LyapunovAssignment.from_model(model))

    def test_timed_models_are_not_synthesized(self, load, settings):
        with pytest.raises(SynthesisError):
            obtain_assignment(load("timed_demo"), "synthesize", settings)

    def test_candidate_file(self, load, settings, tmp_path):
        path = tmp_path / "candidates.ssm"
        path.write_text("lyapunov : x1^2 + x2^2;\n", encoding="utf-8")
        assignment = obtain_assignment(load("example7"), "file", settings, path)
        assert assignment.is_common()
        with pytest.raises(UsageError):
            obtain_assignment(load("example7"), "file", settings, tmp_path / "missing.ssm")


class TestReports:
    def test_example7_report(self, load, settings):
        report = run_verify(load, settings, "example7")
        assert report.overall == PROVED
        assert report.rule == MLF_STATE
        assert len(report.vcs) == 12
        assert report.model.hash.startswith("sha256:")
        assert all(r.ok for r in replay_report(report))

    def test_short_dwell_refutes_a_premise(self, load, settings):
        report = run_verify(load, settings, "timed_demo_short")
        assert report.overall == REFUTED_PREMISE
        refuted = [e.id for e in report.vcs if e.verdict == "Refuted"]
        assert refuted == ["s->u/dwell"]

    def test_brockett_region_report(self, load, settings):
        report = run_verify(load, settings, "brockett_event")
        assert report.rule == CLF_RESTRICTED
        assert report.overall == PROVED, [(e.id, e.reason) for e in report.vcs if e.verdict != "Proved"]
        darboux = [e for e in report.vcs if e.certificate and e.certificate.get("method") == "darboux"]
        assert darboux

    def test_normalized_output_is_deterministic(self, load, settings):
        first = emit_report(run_verify(load, settings, "timed_demo", seed=3), normalize=True)
        second = emit_report(run_verify(load, settings, "timed_demo", seed=3), normalize=True)
        assert first == second
        assert json.loads(first)["millis"] is None

    def test_load_round_trip(self, load, settings, tmp_path):
        path = tmp_path / "report.json"
        path.write_text(emit_report(run_verify(load, settings, "example7")), encoding="utf-8")
        again = load_report(path)
        assert again.overall == PROVED
        assert all(r.ok for r in replay_report(again))

    def test_tampered_report_fails_replay(self, load, settings, tmp_path):
        data = json.loads(emit_report(run_verify(load, settings, "example7")))
        entry = next(e for e in data["vcs"] if e["id"] == "p/positive")
        entry["condition"]["target"] = next(e for e in data["vcs"] if e["id"] == "q/positive")["condition"]["target"]
        path = tmp_path / "report.json"
        path.write_text(json.dumps(data), encoding="utf-8")
        results = {r.vc_id: r for r in replay_report(load_report(path))}
        assert not results["p/positive"].ok

    def test_not_a_report(self, tmp_path):
        path = tmp_path / "report.json"
        path.write_text("{\"rule\": 1}", encoding="utf-8")
        with pytest.raises(UsageError):
            load_report(path)


class TestBench:
    @pytest.mark.slow
    def test_corpus_matches_expectations(self, settings):
        rows = bench(CORPUS, settings)
        summary = bench_summary(rows)
        assert summary["fixtures"] == len(fixtures(CORPUS))
        assert summary["mismatches"] == [], format_table(rows)

    @pytest.mark.slow
    def test_brockett_fixture_matches(self, tmp_path, settings):
        for suffix in (".ssm", ".expected.json"):
            shutil.copy(CORPUS / f"brockett_event{suffix}", tmp_path / f"brockett_event{suffix}")
        rows = bench(tmp_path, settings)
        assert [r.fixture for r in rows] == ["brockett_event"]
        assert rows[0].matches, format_table(rows)

    def test_mismatch_is_reported(self, tmp_path, settings):
        shutil.copy(CORPUS / "example7.ssm", tmp_path / "example7.ssm")
        (tmp_path / "example7.expected.json").write_text('{"overall": "Refuted-Premise"}', encoding="utf-8")
        (tmp_path / "unlisted.ssm").write_text("not a model", encoding="utf-8")
        rows = bench(tmp_path, settings)
        assert [r.fixture for r in rows] == ["example7"]
        assert not rows[0].matches
        assert "NO" in format_table(rows)

    def test_empty_corpus(self, tmp_path):
        with pytest.raises(UsageError):
            fixtures(tmp_path)


class TestRunConfig:
    def test_negative_budget(self):
        with pytest.raises(UsageError):
            build_run_config(command="verify", falsify_budget=0)

    def test_candidate_file_implies_file_source(self, tmp_path):
        config = build_run_config(command="verify", candidate_file=tmp_path / "c.ssm")
        assert config.candidates == "file"

    def test_file_source_needs_path(self):
        with pytest.raises(UsageError):
            build_run_config(command="verify", candidates="file")

    def test_out_overrides_directory(self, tmp_path):
        settings = build_run_config(command="render", out=tmp_path, sos_degree=4).settings()
        assert settings.output.directory == str(tmp_path)
        assert settings.sos.multiplier_degree == 4


class TestCommandLine:
    def test_verify_and_replay(self, tmp_path):
        out = tmp_path / "out"
        args = ["verify", str(CORPUS / "example7.ssm"), "--out", str(out), "--normalize"]
        assert main(args) == EXIT_OK
        report = out / "example7.report.json"
        first = report.read_bytes()
        assert main(args) == EXIT_OK
        assert report.read_bytes() == first
        assert main(["verify", "--replay", str(report), "--out", str(out)]) == EXIT_OK

    def test_falsify_cruise_positivity(self, tmp_path):
        code = main(["falsify", str(CORPUS / "cruise_pi.ssm"), "--vc", "positivity", "--out", str(tmp_path)])
        assert code == EXIT_REFUTED
        found = json.loads((tmp_path / "cruise_pi.counterexamples.json").read_text(encoding="utf-8"))
        assert found[0]["vc"].endswith("/positive")
        assert found[0]["value"].startswith("-")

    def test_falsify_unknown_condition(self, tmp_path):
        code = main(["falsify", str(CORPUS / "example7.ssm"), "--vc", "nothing", "--out", str(tmp_path)])
        assert code == EXIT_ERROR

    def test_render(self, tmp_path):
        assert main(["render", str(CORPUS / "timed_demo.ssm"), "--out", str(tmp_path)]) == EXIT_OK
        assert (tmp_path / "timed_demo.dot").read_text(encoding="utf-8").startswith('digraph "timed_demo"')

    def test_vcs_raw(self, tmp_path):
        assert main(["vcs", str(CORPUS / "timed_demo.ssm"), "--raw", "--out", str(tmp_path)]) == EXIT_OK
        dumped = json.loads((tmp_path / "timed_demo.vcs.json").read_text(encoding="utf-8"))
        assert {"s->u/dwell", "u->s/dwell"} <= {vc["id"] for vc in dumped}
        assert "|-" in (tmp_path / "timed_demo.sequents.txt").read_text(encoding="utf-8")

    def test_check_reports_bad_model(self, tmp_path, capsys):
        path = tmp_path / "bad.ssm"
        path.write_text("system s { kind state; var x; mode m { ode { } } }", encoding="utf-8")
        assert main(["check", str(path)]) == EXIT_ERROR
        assert "missing-ode" in capsys.readouterr().out
        assert main(["check", str(CORPUS / "example7.ssm")]) == EXIT_OK

    def test_check_accepts_negation_and_implication(self, capsys):
        assert main(["check", str(CORPUS / "brockett_event.ssm")]) == EXIT_OK
        assert "is well formed" in capsys.readouterr().out

    def test_simulate_writes_trace(self, tmp_path):
        code = main(
            ["simulate", str(CORPUS / "timed_demo.ssm"), "--x0", "x=1", "--horizon", "3", "--out", str(tmp_path)]
        )
        assert code == EXIT_OK
        assert (tmp_path / "timed_demo_trace.csv").exists()
        assert (tmp_path / "timed_demo_trace.events.json").exists()

    def test_bench_mismatch_exit(self, tmp_path):
        shutil.copy(CORPUS / "timed_demo.ssm", tmp_path / "timed_demo.ssm")
        (tmp_path / "timed_demo.expected.json").write_text('{"overall": "Inconclusive"}', encoding="utf-8")
        assert main(["bench", str(tmp_path), "--out", str(tmp_path / "out")]) == EXIT_REFUTED
        assert main(["bench", str(tmp_path / "out" / "empty"), "--out", str(tmp_path)]) == EXIT_ERROR

    def test_usage_errors(self, tmp_path):
        assert main(["verify", "--out", str(tmp_path)]) == EXIT_ERROR
        assert main(["verify", str(CORPUS / "example7.ssm"), "--falsify-budget", "0"]) == EXIT_ERROR
        assert main(["nonsense"]) == EXIT_ERROR
        assert main(["--help"]) == EXIT_OK
