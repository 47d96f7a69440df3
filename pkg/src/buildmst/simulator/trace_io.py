"""Line-oriented trace records and the run summary."""

from __future__ import annotations

import json
import math

from buildmst.simulator.rounds import round_of
from buildmst.tree_metric import format_weight


def format_value(x) -> str:
    if x == math.inf:
        return "inf"
    return format_weight(x)


def trace_lines(trace, sample_every: int = 1):
    """Yield one ``step=...`` record per sampled configuration (the last one always)."""
    last = len(trace.samples) - 1
    for s in trace.samples:
        if s.step % sample_every and s.step != last:
            continue
        yield (
            f"step={s.step} phi={format_value(s.phi)} phi_tilde={format_value(s.phi_tilde)} "
            f"explicit={s.explicit} implicit={s.implicit} legal={int(s.legal)} "
            f"round={round_of(trace.round_starts, s.step)}"
        )


def summary_line(trace) -> str:
    outcome = "converged" if trace.outcome == "converged" else "budget"
    rounds = trace.rounds_to_legal if trace.rounds_to_legal is not None else trace.rounds
    steps = trace.converged_at if trace.converged_at is not None else trace.steps
    return f"outcome={outcome} steps={steps} rounds={rounds}"


def final_line(trace) -> str:
    return "final=" + json.dumps(trace.final.to_dict(), separators=(",", ":"))
