"""
Benchmark harness over a corpus of model files with expected outcomes.

A fixture is a model file plus a '<stem>.expected.json' sidecar holding at
least {"overall": ...}; optional keys: rule, candidates, attractivity, seed.
"""

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union

from src.analysis.report import INCONCLUSIVE
from src.analysis.runner import obtain_assignment, verify
from src.core.config import CheckerSettings
from src.core.errors import SwitchCheckError, UsageError
from src.model.parser import load_model

logger = logging.getLogger(__name__)

MODEL_SUFFIX = ".ssm"
SIDECAR_SUFFIX = ".expected.json"


@dataclass
class BenchRow:
    fixture: str
    expected: str
    actual: str
    rule: str
    conditions: int
    seconds: float
    note: str = ""

    @property
    def matches(self) -> bool:
        return self.expected == self.actual

    def to_dict(self) -> Dict[str, object]:
        return {
            "fixture": self.fixture,
            "expected": self.expected,
            "actual": self.actual,
            "match": self.matches,
            "rule": self.rule,
            "conditions": self.conditions,
            "seconds": round(self.seconds, 3),
            "note": self.note,
        }


def fixtures(corpus: Union[str, Path]) -> List[Path]:
    """Model files in the corpus that carry an expectation sidecar"""
    root = Path(corpus)
    if not root.is_dir():
        raise UsageError(f"Corpus directory not found: {root}")
    found = [p for p in sorted(root.glob(f"*{MODEL_SUFFIX}")) if _sidecar(p).exists()]
    if not found:
        raise UsageError(f"No fixtures with {SIDECAR_SUFFIX} sidecars in {root}")
    return found


def _sidecar(model_path: Path) -> Path:
    return model_path.with_name(model_path.stem + SIDECAR_SUFFIX)


def run_fixture(model_path: Path, settings: CheckerSettings, jobs: int = 1) -> BenchRow:
    with open(_sidecar(model_path), "r", encoding="utf-8") as f:
        expected = json.load(f)
    start = time.perf_counter()
    rule = expected.get("rule") or ""
    try:
        model = load_model(model_path)
        text = model_path.read_text(encoding="utf-8")
        assignment = obtain_assignment(model, expected.get("candidates", "annotation"), settings)
        report = verify(
            model,
            text,
            assignment,
            settings,
            seed=int(expected.get("seed", 0)),
            rule=expected.get("rule"),
            attractivity=bool(expected.get("attractivity", False)),
            jobs=jobs,
        )
    except SwitchCheckError as e:
        logger.warning("%s: %s", model_path.name, e)
        return BenchRow(model_path.stem, expected["overall"], "Error", rule, 0, time.perf_counter() - start, str(e))
    counts = report.counts()
    note = ", ".join(f"{k}={v}" for k, v in counts.items() if v)
    return BenchRow(
        model_path.stem,
        expected["overall"],
        report.overall,
        report.rule,
        len(report.vcs),
        time.perf_counter() - start,
        note,
    )


def bench(corpus: Union[str, Path], settings: Optional[CheckerSettings] = None, jobs: int = 1) -> List[BenchRow]:
    settings = settings or CheckerSettings()
    rows = []
    for path in fixtures(corpus):
        row = run_fixture(path, settings, jobs)
        logger.info("%s: expected %s, got %s", row.fixture, row.expected, row.actual)
        rows.append(row)
    return rows


def format_table(rows: List[BenchRow]) -> str:
    headers = ["fixture", "expected", "actual", "rule", "VCs", "time (s)", "match"]
    body = [
        [r.fixture, r.expected, r.actual, r.rule, str(r.conditions), f"{r.seconds:.2f}", "yes" if r.matches else "NO"]
        for r in rows
    ]
    widths = [max(len(h), *(len(line[i]) for line in body)) if body else len(h) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)), "  ".join("-" * w for w in widths)]
    lines += ["  ".join(cell.ljust(w) for cell, w in zip(line, widths)) for line in body]
    return "\n".join(lines)


def bench_summary(rows: List[BenchRow]) -> Dict[str, object]:
    return {
        "fixtures": len(rows),
        "matches": sum(r.matches for r in rows),
        "mismatches": [r.fixture for r in rows if not r.matches],
        "inconclusive": [r.fixture for r in rows if r.actual == INCONCLUSIVE],
        "rows": [r.to_dict() for r in rows],
    }
