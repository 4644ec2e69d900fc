#!/usr/bin/env python3
"""
Switched-System Stability Checker
Command-line driver

Subcommands: check, verify, synth, falsify, simulate, probe, render, bench, vcs.
Exit codes: 0 proved/success, 1 refuted premise or violation found,
2 inconclusive, 3 usage or model error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from src.analysis.bench import bench, bench_summary, format_table
from src.analysis.report import INCONCLUSIVE, PROVED, emit_report, load_report, replay_report
from src.analysis.run_config import RunConfig, build_run_config
from src.analysis.runner import generate, obtain_assignment, select_rule, synthesize, verify
from src.check.falsify import falsify
from src.core.config import CheckerSettings
from src.core.errors import SwitchCheckError, UsageError
from src.core.files import atomic_write_text, write_json
from src.model.dot import emit_dot
from src.model.model import Diagnostics, Kind, SwitchedModel
from src.model.parser import load_model, parse_model, parse_predicate
from src.model.wellformed import well_formed
from src.sim.audit import audit_trace
from src.sim.integrator import simulate
from src.sim.io import plot_trace, write_trace
from src.sim.policies import POLICIES, ScriptedPolicy, make_policy
from src.sim.probes import probe_attractivity, probe_stability
from src.sim.sublevel import check_trace_sublevel
from src.synth.truncation import truncate_small_terms
from src.vcgen.conditions import LyapunovAssignment
from src.vcgen.dump import dump_vcs
from src.vcgen.generators import RULES
from src.vcgen.timed import timed_raw_sequents

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_REFUTED = 1
EXIT_INCONCLUSIVE = 2
EXIT_ERROR = 3

DEFAULT_CORPUS = Path(__file__).resolve().parents[2] / "data" / "corpus"

# short names accepted by falsify --vc
PREMISE_ALIASES = {"positivity": "positive-definite", "lie": "lie-negative", "radial": "radially-unbounded"}


def _exit_for(overall: str) -> int:
    if overall == PROVED:
        return EXIT_OK
    if overall == INCONCLUSIVE:
        return EXIT_INCONCLUSIVE
    return EXIT_REFUTED


def _load(config: RunConfig) -> Tuple[SwitchedModel, str]:
    if config.model_path is None:
        raise UsageError(f"'{config.command}' needs a model file")
    model = load_model(config.model_path)
    return model, Path(config.model_path).read_text(encoding="utf-8")


def _output(settings: CheckerSettings, name: str) -> Path:
    return Path(settings.output.directory) / name


def _assignment(config: RunConfig, model: SwitchedModel, settings: CheckerSettings) -> LyapunovAssignment:
    return obtain_assignment(model, config.candidates, settings, config.candidate_file)


def _print_diagnostics(diagnostics: Diagnostics) -> None:
    for d in diagnostics:
        marker = "❌" if d.severity == "error" else "⚠️ "
        print(f"   {marker} {d}")


def cmd_check(config: RunConfig, settings: CheckerSettings) -> int:
    if config.model_path is None or not Path(config.model_path).exists():
        raise UsageError(f"Model file not found: {config.model_path}")
    print(f"🔍 Checking model: {config.model_path}")
    result = parse_model(Path(config.model_path).read_text(encoding="utf-8"))
    if isinstance(result, Diagnostics):
        _print_diagnostics(result)
        return EXIT_ERROR
    diagnostics = well_formed(result)
    _print_diagnostics(diagnostics)
    if not diagnostics.accepted:
        return EXIT_ERROR
    print(f"✅ Model '{result.name}' ({result.kind.value}) with {len(result.modes)} modes is well formed")
    return EXIT_OK


def cmd_verify(config: RunConfig, settings: CheckerSettings) -> int:
    if config.replay is not None:
        return _replay(config)
    model, text = _load(config)
    print(f"🔍 Verifying {model.name} ({model.kind.value})")
    assignment = _assignment(config, model, settings)
    report = verify(
        model, text, assignment, settings, config.seed, config.rule, config.region, config.attractivity, config.jobs
    )

    print(f"📋 Rule: {report.rule}, {len(report.vcs)} conditions")
    for entry in report.vcs:
        icon = {"Proved": "✅", "Refuted": "❌"}.get(entry.verdict, "❔")
        print(f"   {icon} {entry.id}: {entry.verdict}" + (f" ({entry.reason})" if entry.reason else ""))

    path = atomic_write_text(_output(settings, f"{model.name}.report.json"), emit_report(report, config.normalize))
    print(f"\n📊 Summary: {report.overall}")
    for status, count in report.counts().items():
        print(f"   {status}: {count}")
    print(f"💾 Results saved to: {path}")
    return _exit_for(report.overall)


def _replay(config: RunConfig) -> int:
    report = load_report(config.replay)
    print(f"🔁 Replaying {config.replay} ({len(report.vcs)} conditions)")
    results = replay_report(report)
    failed = [r for r in results if not r.ok]
    for r in failed:
        print(f"   ❌ {r.vc_id}: {r.message}")
    if failed:
        print(f"❌ Error: {len(failed)} of {len(results)} entries do not replay")
        return EXIT_ERROR
    print(f"✅ All {len(results)} entries replay; overall {report.overall}")
    return _exit_for(report.overall)


def cmd_synth(config: RunConfig, settings: CheckerSettings, truncate: bool = False) -> int:
    model, _ = _load(config)
    print(f"🔍 Synthesizing candidates for {model.name} ({model.kind.value})")
    assignment = synthesize(model, settings)
    if assignment is None:
        print("❔ No candidates found")
        return EXIT_INCONCLUSIVE
    if truncate:
        functions = {}
        for mode_id, v in assignment.functions.items():
            functions[mode_id], change = truncate_small_terms(v, settings.synthesis.truncation_threshold)
            if change["dropped"]:
                print(f"   ✂️  {mode_id}: dropped {len(change['dropped'])} small terms")
        assignment = LyapunovAssignment(functions, assignment.rates, assignment.sigma)
    text = assignment.to_annotations()
    print(text, end="")
    path = atomic_write_text(_output(settings, f"{model.name}.candidates.ssm"), text)
    print(f"💾 Results saved to: {path}")
    return EXIT_OK


def _select_vcs(config: RunConfig, settings: CheckerSettings):
    model, _ = _load(config)
    assignment = _assignment(config, model, settings)
    region = parse_predicate(config.region, model) if config.region else None
    rule = config.rule or select_rule(model, assignment, region)
    return model, assignment, generate(model, rule, assignment, region, config.attractivity)


def cmd_falsify(config: RunConfig, settings: CheckerSettings, name: Optional[str]) -> int:
    model, _, vcs = _select_vcs(config, settings)
    premise = PREMISE_ALIASES.get(name, name)
    chosen = [
        vc for vc in vcs
        if name is None or vc.id == name or name in vc.id.split("/") or vc.origin.premise == premise
    ]
    if not chosen:
        raise UsageError(f"No condition matches '{name}'; available: {', '.join(vc.id for vc in vcs)}")
    print(f"🔍 Falsifying {len(chosen)} condition(s) of {model.name}")
    found = []
    for vc in chosen:
        counterexample = falsify(vc, seed=config.seed, settings=settings.falsify, symbolic=settings.symbolic)
        if counterexample is None:
            print(f"   ❔ {vc.id}: no counterexample")
            continue
        print(f"   ❌ {vc.id}: violated at {counterexample.to_dict()['point']}")
        found.append(counterexample.to_dict())
    if not found:
        return EXIT_INCONCLUSIVE
    path = write_json(_output(settings, f"{model.name}.counterexamples.json"), found)
    print(f"💾 Results saved to: {path}")
    return EXIT_REFUTED


def _parse_point(text: str) -> object:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if all("=" in p for p in parts):
        return {k.strip(): float(v) for k, v in (p.split("=", 1) for p in parts)}
    if any("=" in p for p in parts):
        raise UsageError(f"mix of named and positional values in '{text}'")
    return [float(p) for p in parts]


def _parse_schedule(text: str) -> List[Tuple[float, str]]:
    schedule = []
    for item in text.split(","):
        when, _, mode = item.partition(":")
        if not mode:
            raise UsageError(f"schedule entries look like 'time:mode', got '{item}'")
        schedule.append((float(when), mode.strip()))
    return schedule


def cmd_simulate(config: RunConfig, settings: CheckerSettings, args: argparse.Namespace) -> int:
    model, _ = _load(config)
    if not args.x0:
        raise UsageError("simulate needs --x0")
    x0 = _parse_point(args.x0)
    if args.initial_mode:
        schedule = _parse_schedule(args.schedule) if args.schedule else []
        policy = ScriptedPolicy(args.initial_mode, schedule)
    else:
        policy = make_policy(args.policy, model.kind, settings.simulation)
    print(f"🔍 Simulating {model.name} with the {policy.name} policy")
    trace = simulate(model, x0, policy, args.horizon, args.dt, config.seed, settings.simulation)
    summary = trace.summary()
    print(f"   ⏱️  {summary['samples']} samples, {summary['events']} events, "
          f"ended by {trace.end} at t={summary['final_time']:.4g}")
    print(f"   📈 max |x| = {summary['max_norm']:.6g}, final |x| = {summary['final_norm']:.6g}")

    csv_path, events_path = write_trace(trace, _output(settings, f"{model.name}_trace"))
    print(f"💾 Results saved to: {csv_path} and {events_path}")
    if args.plot or settings.output.plot:
        png = plot_trace(trace, _output(settings, f"{model.name}_trace.png"), model.name)
        print(f"🎨 Plot saved to: {png}")

    status = EXIT_OK
    problems = audit_trace(model, trace)
    for p in problems:
        print(f"   ❌ {p}")
    if problems:
        status = EXIT_REFUTED
    if args.sublevel is not None:
        result = check_trace_sublevel(trace, None, args.sublevel)
        if result:
            print(f"✅ Active Lyapunov value stays below {args.sublevel} and never increases within a mode")
        else:
            print(f"❌ Sublevel violation at sample {result.index}: {result.reason}")
            status = EXIT_REFUTED
    return status


def cmd_probe(config: RunConfig, settings: CheckerSettings, args: argparse.Namespace) -> int:
    model, _ = _load(config)
    policies = args.policy_list or None
    if args.attractivity_delta is not None:
        region = parse_predicate(config.region, model) if config.region else None
        epsilon = args.epsilon[0] if args.epsilon else 0.1
        print(f"🔍 Attractivity probe on {model.name}: delta={args.attractivity_delta}, epsilon={epsilon}")
        report = probe_attractivity(
            model, args.attractivity_delta, epsilon, args.samples, config.seed, settings, region, policies
        )
    else:
        epsilons = args.epsilon or [0.3]
        print(f"🔍 Stability probe on {model.name}: epsilon in {epsilons}")
        report = probe_stability(model, epsilons, args.samples, config.seed, settings, policies)

    for entry in report.entries:
        print(
            f"   ε={entry.epsilon:g}: δ={entry.delta}, T={entry.T}, runs={entry.runs}, "
            f"stuck={entry.stuck}, violations={len(entry.violations)}"
        )
    for flag in report.flags:
        print(f"   ⚠️  {flag}")
    path = write_json(_output(settings, f"{model.name}.{report.probe}.json"), report.to_dict())
    print(f"💾 Results saved to: {path}")
    return EXIT_OK if report.ok else EXIT_REFUTED


def cmd_render(config: RunConfig, settings: CheckerSettings) -> int:
    model, _ = _load(config)
    path = atomic_write_text(_output(settings, f"{model.name}.dot"), emit_dot(model))
    print(f"💾 Results saved to: {path}")
    return EXIT_OK


def cmd_vcs(config: RunConfig, settings: CheckerSettings, raw: bool = False) -> int:
    model, assignment, vcs = _select_vcs(config, settings)
    path = atomic_write_text(_output(settings, f"{model.name}.vcs.json"), dump_vcs(vcs) + "\n")
    for vc in vcs:
        print(f"   • {vc.id}: {vc.statement()}")
    if raw and model.kind == Kind.TIMED:
        sequents = "\n".join(str(s) for s in timed_raw_sequents(model, assignment)) + "\n"
        raw_path = atomic_write_text(_output(settings, f"{model.name}.sequents.txt"), sequents)
        print(f"💾 Raw sequents saved to: {raw_path}")
    print(f"💾 Results saved to: {path}")
    return EXIT_OK


def cmd_bench(config: RunConfig, settings: CheckerSettings) -> int:
    corpus = config.model_path or DEFAULT_CORPUS
    print(f"🔍 Running corpus: {corpus}")
    rows = bench(corpus, settings, config.jobs)
    print(format_table(rows))
    summary = bench_summary(rows)
    if config.normalize:
        for row in summary["rows"]:
            row["seconds"] = None
    path = write_json(_output(settings, "bench.json"), summary)
    print(f"\n📊 Summary: {summary['matches']}/{summary['fixtures']} fixtures match expectations")
    print(f"💾 Results saved to: {path}")
    return EXIT_OK if not summary["mismatches"] else EXIT_REFUTED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", dest="config_path", help="JSON settings file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output directory")
    common.add_argument("--sos-degree", type=int, help="S-procedure multiplier degree")
    common.add_argument("--falsify-budget", type=int, help="falsifier sample budget")
    common.add_argument("--exp-terms", type=int, help="series terms for exponential enclosures")
    common.add_argument("--jobs", type=int, default=1, help="parallel condition checks")
    common.add_argument("--normalize", action="store_true", help="drop timings from written reports")
    common.add_argument("-v", "--verbose", action="count", default=0)

    candidates = argparse.ArgumentParser(add_help=False)
    candidates.add_argument("--rule", choices=RULES)
    candidates.add_argument("--candidates", choices=["annotation", "file", "synthesize"], default="annotation")
    candidates.add_argument("--candidate-file")
    candidates.add_argument("--region", help="restricted-attractivity region predicate")
    candidates.add_argument("--attractivity", action="store_true", help="add the timed attractivity family")

    parser = argparse.ArgumentParser(prog="switchcheck", description="Stability verification for switched systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="parse and well-formedness diagnostics")
    p.add_argument("model")
    p = sub.add_parser("verify", parents=[common, candidates], help="generate and check stability conditions")
    p.add_argument("model", nargs="?")
    p.add_argument("--replay", help="re-check a stored report instead of verifying")
    p = sub.add_parser("synth", parents=[common], help="synthesize Lyapunov candidates")
    p.add_argument("model")
    p.add_argument("--truncate", action="store_true", help="drop numerically insignificant terms")
    p = sub.add_parser("falsify", parents=[common, candidates], help="search counterexamples for conditions")
    p.add_argument("model")
    p.add_argument("--vc", help="condition id, id component or premise name")
    p = sub.add_parser("simulate", parents=[common], help="simulate one execution")
    p.add_argument("model")
    p.add_argument("--x0", help="initial state, 'x=1,y=0' or '1,0'")
    p.add_argument("--policy", default="default", choices=("default",) + POLICIES)
    p.add_argument("--initial-mode", help="use a scripted policy starting in this mode")
    p.add_argument("--schedule", help="scripted switches 'time:mode,...'")
    p.add_argument("--horizon", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--sublevel", type=float, help="check the active Lyapunov value stays below this level")
    p.add_argument("--plot", action="store_true")
    p = sub.add_parser("probe", parents=[common], help="empirical stability or attractivity probe")
    p.add_argument("model")
    p.add_argument("--epsilon", type=float, action="append")
    p.add_argument("--attractivity-delta", type=float, help="run the attractivity probe with this delta")
    p.add_argument("--samples", type=int)
    p.add_argument("--policy", dest="policy_list", action="append", choices=POLICIES)
    p.add_argument("--region", help="initial-state region for the attractivity probe")
    p = sub.add_parser("render", parents=[common], help="write the mode graph as DOT")
    p.add_argument("model")
    p = sub.add_parser("bench", parents=[common], help="run the fixture corpus")
    p.add_argument("corpus", nargs="?")
    p = sub.add_parser("vcs", parents=[common, candidates], help="dump generated conditions as JSON")
    p.add_argument("model")
    p.add_argument("--raw", action="store_true", help="also write unsimplified timed sequents")
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    model = getattr(args, "model", None) or getattr(args, "corpus", None)
    return build_run_config(
        command=args.command,
        model_path=model,
        candidates=getattr(args, "candidates", "annotation"),
        candidate_file=getattr(args, "candidate_file", None),
        rule=getattr(args, "rule", None),
        seed=args.seed,
        sos_degree=args.sos_degree,
        falsify_budget=args.falsify_budget,
        exp_terms=args.exp_terms,
        out=args.out,
        replay=getattr(args, "replay", None),
        region=getattr(args, "region", None),
        attractivity=getattr(args, "attractivity", False),
        jobs=args.jobs,
        normalize=args.normalize,
        config_path=args.config_path,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_ERROR
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        config = _run_config(args)
        settings = config.settings()
        command = config.command
        if command == "check":
            return cmd_check(config, settings)
        if command == "verify":
            return cmd_verify(config, settings)
        if command == "synth":
            return cmd_synth(config, settings, args.truncate)
        if command == "falsify":
            return cmd_falsify(config, settings, args.vc)
        if command == "simulate":
            return cmd_simulate(config, settings, args)
        if command == "probe":
            return cmd_probe(config, settings, args)
        if command == "render":
            return cmd_render(config, settings)
        if command == "bench":
            return cmd_bench(config, settings)
        return cmd_vcs(config, settings, args.raw)
    except SwitchCheckError as e:
        print(f"❌ Error: {e}")
        return EXIT_ERROR
    except (OSError, ValueError) as e:
        print(f"❌ Error: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
