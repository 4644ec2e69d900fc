"""
Trace files: one CSV row per sample plus a JSON sidecar with the events.
"""

import csv
import io
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from src.core.files import atomic_write_text, write_json
from src.model.model import TIMER
from src.sim.integrator import Trace

logger = logging.getLogger(__name__)


def trace_header(trace: Trace) -> List[str]:
    names = [v for v in trace.variables if v != TIMER]
    return ["t", "mode"] + names + ["tau"] + [f"V_{m}" for m in trace.lyapunov]


def trace_to_csv(trace: Trace) -> str:
    """tau is the model timer for timed models and the time since the last switch otherwise"""
    names = [v for v in trace.variables if v != TIMER]
    columns = [trace.variables.index(v) for v in names]
    timer = trace.variables.index(TIMER) if TIMER in trace.variables else None
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(trace_header(trace))
    for k, t in enumerate(trace.times):
        x = trace.states[k]
        tau = x[timer] if timer is not None else trace.dwell[k]
        row = [repr(float(t)), trace.modes[k]] + [repr(float(x[c])) for c in columns] + [repr(float(tau))]
        row += [repr(float(values[k])) for values in trace.lyapunov.values()]
        writer.writerow(row)
    return buffer.getvalue()


def trace_events(trace: Trace) -> Dict[str, object]:
    return {
        "summary": trace.summary(),
        "horizon": trace.horizon,
        "dt": trace.dt,
        "events": [e.to_dict() for e in trace.events],
    }


def write_trace(trace: Trace, path: Union[str, Path]) -> Tuple[Path, Path]:
    """Write <path>.csv and <path>.events.json"""
    base = Path(path)
    if base.suffix == ".csv":
        base = base.with_suffix("")
    csv_path = atomic_write_text(base.with_suffix(".csv"), trace_to_csv(trace))
    events_path = write_json(base.parent / f"{base.name}.events.json", trace_events(trace))
    logger.info("trace written to %s", csv_path)
    return csv_path, events_path


def read_trace_csv(path: Union[str, Path]) -> Dict[str, List]:
    """Columns of a trace CSV; numeric columns as floats"""
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        columns: Dict[str, List] = {name: [] for name in header}
        for row in reader:
            for name, cell in zip(header, row):
                columns[name].append(cell if name == "mode" else float(cell))
    return columns


def plot_trace(trace: Trace, path: Union[str, Path], title: Optional[str] = None) -> Path:
    """State components and Lyapunov values over time as a PNG"""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    states = trace.state_array()
    panels = 2 if trace.lyapunov else 1
    fig, axes = plt.subplots(panels, 1, figsize=(10, 4 * panels), sharex=True, squeeze=False)
    ax = axes[0][0]
    for i, v in enumerate(trace.state_vars):
        ax.plot(trace.times, states[:, i], label=v)
    for e in trace.events[1:]:
        ax.axvline(e.time, color="grey", linewidth=0.5, alpha=0.5)
    ax.set_ylabel("state")
    ax.legend(loc="upper right")
    if trace.lyapunov:
        ax = axes[1][0]
        for m, values in trace.lyapunov.items():
            ax.plot(trace.times, values, label=f"V_{m}")
        ax.set_ylabel("Lyapunov value")
        ax.legend(loc="upper right")
    axes[-1][0].set_xlabel("t")
    fig.suptitle(title or f"{trace.policy} policy, seed {trace.seed} ({trace.end})")
    fig.tight_layout()
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(target, dpi=120)
    plt.close(fig)
    logger.info("plot written to %s", target)
    return target
