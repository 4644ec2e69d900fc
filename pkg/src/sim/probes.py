"""
Empirical stability and attractivity probes.

These sample finitely many executions over a finite horizon; a clean report
is evidence, never a proof.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from src.core.config import CheckerSettings
from src.model.model import SwitchedModel
from src.model.predicate import Predicate
from src.sim.compiled import CompiledModel, compile_model
from src.sim.integrator import Simulator, Trace
from src.sim.interpreter import initial_options
from src.sim.policies import default_policy, make_policy

logger = logging.getLogger(__name__)

REGION_ATTEMPTS = 1000


@dataclass
class Violation:
    """Replayable description of one failing execution"""

    sample: int
    seed: int
    policy: str
    x0: List[float]
    time: float
    detail: str

    def to_dict(self) -> Dict[str, object]:
        return {
            "sample": self.sample,
            "seed": self.seed,
            "policy": self.policy,
            "x0": self.x0,
            "time": self.time,
            "detail": self.detail,
        }


@dataclass
class ProbeEntry:
    epsilon: float
    delta: Optional[float] = None
    T: Optional[float] = None
    max_norms: List[float] = field(default_factory=list)
    violations: List[Violation] = field(default_factory=list)
    stuck: int = 0
    runs: int = 0

    def to_dict(self) -> Dict[str, object]:
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "T": self.T,
            "runs": self.runs,
            "stuck": self.stuck,
            "max_norm": max(self.max_norms) if self.max_norms else None,
            "violations": [v.to_dict() for v in self.violations],
        }


@dataclass
class ProbeReport:
    probe: str
    model: str
    samples: int
    seed: int
    horizon: float
    dt: float
    entries: List[ProbeEntry] = field(default_factory=list)
    flags: List[str] = field(default_factory=list)

    @property
    def violations(self) -> List[Violation]:
        return [v for e in self.entries for v in e.violations]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> Dict[str, object]:
        return {
            "probe": self.probe,
            "model": self.model,
            "samples": self.samples,
            "seed": self.seed,
            "horizon": self.horizon,
            "dt": self.dt,
            "ok": self.ok,
            "flags": list(self.flags),
            "entries": [e.to_dict() for e in self.entries],
        }


def _sample_ball(rng: np.random.Generator, dim: int, radius: float) -> np.ndarray:
    """Uniform point strictly inside the open ball of the given radius"""
    direction = rng.standard_normal(dim)
    norm = float(np.linalg.norm(direction)) or 1.0
    r = radius * rng.random() ** (1.0 / dim) * (1.0 - 1e-9)
    return direction / norm * r


class _Sampler:
    """Per-sample RNG streams split from one seed so runs are order independent"""

    def __init__(self, compiled: CompiledModel, seed: int, samples: int, region: Optional[Predicate]):
        self.compiled = compiled
        self.seed = seed
        self.children = np.random.SeedSequence(seed).spawn(samples)
        self.region = compiled.predicate(region) if region is not None else None

    def initial_state(self, index: int, radius: float) -> Optional[np.ndarray]:
        rng = np.random.default_rng(self.children[index])
        n = len(self.compiled.model.state_vars)
        for _ in range(REGION_ATTEMPTS):
            x = np.zeros(len(self.compiled.variables))
            x[:n] = _sample_ball(rng, n, radius)
            if self.region is None or self.region.holds(x):
                return x
        return None

    def run_seed(self, index: int) -> int:
        return int(self.children[index].generate_state(1)[0])


def _policies(compiled: CompiledModel, settings: CheckerSettings, names: Optional[Sequence[str]]):
    if names:
        return [make_policy(n, compiled.model.kind, settings.simulation) for n in names]
    kind = compiled.model.kind
    first = default_policy(kind, settings.simulation)
    if first.name == "random":
        return [first, make_policy("greedy", kind, settings.simulation)]
    return [first]


def _run(compiled, policy, settings, seed, x, horizon, dt) -> Trace:
    return Simulator(compiled, policy, settings.simulation, seed).run(x, horizon, dt)


def _stability_level(compiled, sampler, policies, settings, epsilon, delta, samples, horizon, dt) -> ProbeEntry:
    entry = ProbeEntry(epsilon, delta)
    for i in range(samples):
        x = sampler.initial_state(i, delta)
        if x is None:
            continue
        policy = policies[i % len(policies)]
        seed = sampler.run_seed(i)
        trace = _run(compiled, policy, settings, seed, x, horizon, dt)
        entry.runs += 1
        if trace.stuck and len(trace) <= 1:
            entry.stuck += 1
        norms = trace.norms()
        peak = float(norms.max()) if len(norms) else 0.0
        entry.max_norms.append(peak)
        if peak >= epsilon:
            k = int(np.argmax(norms >= epsilon))
            entry.violations.append(
                Violation(
                    i, seed, policy.name, x.tolist(), trace.times[k] if trace.times else 0.0, f"|x| reached {peak:.6g}"
                )
            )
            break
    return entry


def probe_stability(
    model: Union[SwitchedModel, CompiledModel],
    epsilons: Sequence[float],
    samples: Optional[int] = None,
    seed: int = 0,
    settings: Optional[CheckerSettings] = None,
    policies: Optional[Sequence[str]] = None,
    horizon: Optional[float] = None,
    dt: Optional[float] = None,
) -> ProbeReport:
    """For each epsilon, the largest grid delta = epsilon/2^k with no sampled escape from the epsilon ball"""
    settings = settings or CheckerSettings()
    compiled = compile_model(model)
    samples = samples or settings.probe.samples
    horizon = horizon or settings.probe.horizon
    dt = dt or settings.probe.dt
    chosen = _policies(compiled, settings, policies)
    report = ProbeReport("stability", compiled.model.name, samples, seed, horizon, dt)

    for epsilon in epsilons:
        if epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        sampler = _Sampler(compiled, seed, samples, None)
        grid = [epsilon / 2**k for k in range(settings.probe.delta_levels + 1)]
        tried: Dict[int, ProbeEntry] = {}

        def level(k: int) -> ProbeEntry:
            if k not in tried:
                tried[k] = _stability_level(compiled, sampler, chosen, settings, epsilon, grid[k], samples, horizon, dt)
            return tried[k]

        lo, hi = 0, len(grid) - 1
        best: Optional[int] = None
        while lo <= hi:
            mid = (lo + hi) // 2
            if level(mid).violations:
                lo = mid + 1
            else:
                best = mid
                hi = mid - 1

        if best is None:
            entry = level(len(grid) - 1)
            entry.delta = None
        else:
            entry = level(best)
        logger.info("stability probe eps=%g: delta=%s", epsilon, entry.delta)
        report.entries.append(entry)
    return report


def probe_attractivity(
    model: Union[SwitchedModel, CompiledModel],
    delta: float,
    epsilon: float,
    samples: Optional[int] = None,
    seed: int = 0,
    settings: Optional[CheckerSettings] = None,
    region: Optional[Predicate] = None,
    policies: Optional[Sequence[str]] = None,
    horizon: Optional[float] = None,
    dt: Optional[float] = None,
) -> ProbeReport:
    """Largest time after which sampled executions stay inside the epsilon ball"""
    if delta <= 0 or epsilon <= 0:
        raise ValueError(f"delta and epsilon must be positive, got {delta} and {epsilon}")
    settings = settings or CheckerSettings()
    compiled = compile_model(model)
    samples = samples or settings.probe.samples
    horizon = horizon or settings.probe.horizon
    dt = dt or settings.probe.dt
    chosen = _policies(compiled, settings, policies)
    region = region if region is not None else compiled.model.region
    sampler = _Sampler(compiled, seed, samples, region)
    report = ProbeReport("attractivity", compiled.model.name, samples, seed, horizon, dt)
    entry = ProbeEntry(epsilon, delta, 0.0)

    for i in range(samples):
        x = sampler.initial_state(i, delta)
        if x is None:
            continue
        if not initial_options(compiled, x, settings.simulation.domain_tolerance):
            entry.runs += 1
            entry.stuck += 1
            continue
        policy = chosen[i % len(chosen)]
        seed_i = sampler.run_seed(i)
        trace = _run(compiled, policy, settings, seed_i, x, horizon, dt)
        entry.runs += 1
        norms = trace.norms()
        entry.max_norms.append(float(norms.max()))
        outside = np.nonzero(norms >= epsilon)[0]
        if trace.stuck:
            entry.stuck += 1
        if len(outside) == 0:
            continue
        last = int(outside[-1])
        if last == len(norms) - 1 and not trace.stuck:
            entry.violations.append(
                Violation(i, seed_i, policy.name, x.tolist(), trace.times[-1], f"|x| = {norms[-1]:.6g} at the horizon")
            )
            continue
        entry.T = max(entry.T, trace.times[min(last + 1, len(norms) - 1)])

    if entry.runs and entry.stuck == entry.runs:
        report.flags.append("all executions stuck")
    if entry.runs == 0:
        report.flags.append("no initial state in region")
    logger.info("attractivity probe: T=%.4g, %d violations in %d runs", entry.T, len(entry.violations), entry.runs)
    report.entries.append(entry)
    return report


def replay_violation(
    model: Union[SwitchedModel, CompiledModel], violation: Violation, horizon: float, dt: float,
    settings: Optional[CheckerSettings] = None,
) -> Trace:
    """Re-run the execution a violation describes"""
    settings = settings or CheckerSettings()
    compiled = compile_model(model)
    policy = make_policy(violation.policy, compiled.model.kind, settings.simulation)
    return _run(compiled, policy, settings, violation.seed, np.array(violation.x0), horizon, dt)
