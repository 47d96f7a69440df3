"""Simulation kernel: apply schedule events, track potentials, assert invariants."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from buildmst.errors import InvariantViolation, ScheduleError
from buildmst.kernels import kernel_for
from buildmst.protocol import activate, merge_delivered
from buildmst.simulator import potentials
from buildmst.simulator.configuration import Configuration, Message, ScheduleEvent
from buildmst.simulator.rounds import round_boundaries, rounds_before
from buildmst.simulator.schedulers import Scheduler
from buildmst.tree_metric import Metric

INF = math.inf


def _step(c: Configuration, e: ScheduleEvent, m: Metric, order="id", rng=None, backend=None):
    node = e.node
    channel = c.channels[node]
    if e.delivered:
        wanted = {msg.seq for msg in e.delivered}
        if len(wanted) != len(e.delivered):
            raise ScheduleError(f"event delivers a message twice at node {node}")
        remaining = tuple(msg for msg in channel if msg.seq not in wanted)
        if len(channel) - len(remaining) != len(wanted):
            raise ScheduleError(f"event delivers messages not in the channel of {node}")
    else:
        remaining = channel
    state = merge_delivered(c.states[node], (msg.payload for msg in e.delivered))
    state, out = activate(state, m, order, rng, backend)

    states = dict(c.states)
    states[node] = state
    channels = dict(c.channels)
    channels[node] = remaining
    seq = c.next_seq
    sent = []
    for msg in out:
        new = Message(seq, msg.payload, c.step_index)
        seq += 1
        channels[msg.to] = channels[msg.to] + (new,)
        sent.append((msg.to, new))
    return Configuration(states, channels, c.step_index + 1, seq), tuple(sent)


def step(c: Configuration, e: ScheduleEvent, m: Metric, order="id", rng=None, backend=None) -> Configuration:
    """One activation: deliver ``e.delivered`` to ``e.node``, merge, run the protocol, post messages."""
    return _step(c, e, m, order, rng, backend)[0]


@dataclass
class Sample:
    step: int
    phi: object
    phi_tilde: object
    explicit: int
    implicit: int
    legal: bool


class Snapshot:
    """Everything the engine needs about one configuration, computed on pair ranks."""

    __slots__ = (
        "explicit_ranks",
        "implicit_ranks",
        "present",
        "chosen",
        "labels",
        "ncomp",
        "n_explicit",
        "n_implicit",
        "phi",
        "phi_tilde",
        "legal",
        "quiescent",
        "all_valid",
        "target",
    )


class Evaluator:
    def __init__(self, m: Metric, backend=None):
        self.m = m
        self.kernel = kernel_for(m, backend)
        self.n_pairs = len(m.pair_a)
        chosen, _, _ = self.kernel.spanning_forest(bytes([1]) * self.n_pairs)
        self.mst_ranks = frozenset(chosen)
        self.valid = bytearray(self.n_pairs)
        for r in chosen:
            self.valid[r] = 1
        self.mst_weight = self._weight(chosen)
        self._targets: dict = {}

    def _weight(self, ranks):
        scaled = self.m.scaled_weight
        return self.m.weight_from_scaled(sum(scaled[r] for r in ranks))

    def component_target(self, labels) -> frozenset:
        key = tuple(labels)
        target = self._targets.get(key)
        if target is None:
            groups: dict = {}
            for i, lab in enumerate(labels):
                groups.setdefault(lab, []).append(i)
            present = bytearray(self.n_pairs)
            rank = self.m.rank
            for members in groups.values():
                for x in members:
                    row = rank[x]
                    for y in members:
                        if x < y:
                            present[row[y]] = 1
            target = frozenset(self.kernel.spanning_forest(present)[0])
            self._targets[key] = target
        return target

    def evaluate(self, c: Configuration) -> Snapshot:
        index = self.m.index
        rank = self.m.rank
        explicit = set()
        n_explicit = 0
        for v, st in c.states.items():
            row = rank[index[v]]
            n_explicit += len(st.neighbors)
            for w in st.neighbors:
                explicit.add(row[index[w]])
        implicit = set()
        n_implicit = 0
        for v, ch in c.channels.items():
            if not ch:
                continue
            n_implicit += len(ch)
            row = rank[index[v]]
            for payload in {msg.payload for msg in ch}:
                r = row[index[payload]]
                if r >= 0:
                    implicit.add(r)
        present = bytearray(self.n_pairs)
        for r in explicit:
            present[r] = 1
        for r in implicit:
            present[r] = 1
        chosen, labels, ncomp = self.kernel.spanning_forest(present)

        s = Snapshot()
        s.explicit_ranks = frozenset(explicit)
        s.implicit_ranks = implicit
        s.present = present
        s.chosen = chosen
        s.labels = labels
        s.ncomp = ncomp
        s.n_explicit = n_explicit
        s.n_implicit = n_implicit
        s.phi = INF if ncomp > 1 else self._weight(chosen)
        worst = self.kernel.longest_invalid(present, self.valid)
        s.phi_tilde = 0 if worst < 0 else self.m.pair_weight[worst]
        s.all_valid = all(present[r] for r in self.mst_ranks)
        target = self.mst_ranks if ncomp == 1 else self.component_target(labels)
        s.target = target
        s.legal = s.explicit_ranks == target and implicit <= target
        s.quiescent = s.legal and self._quiescent(c, target)
        return s

    def _quiescent(self, c, target) -> bool:
        index, rank = self.m.index, self.m.rank
        for v, ch in c.channels.items():
            held = c.states[v].neighbors
            row = rank[index[v]]
            for msg in ch:
                if msg.payload != v and msg.payload not in held and row[index[msg.payload]] not in target:
                    return False
        return True


@dataclass
class SimulationTrace:
    nodes: tuple
    initial: Configuration
    events: list = field(default_factory=list)
    emitted: list = field(default_factory=list)
    samples: list = field(default_factory=list)
    outcome: str = "budget"
    converged_at: int | None = None
    final: Configuration | None = None
    round_starts: list = field(default_factory=list)
    mst_weight: object = 0

    @property
    def steps(self) -> int:
        return len(self.events)

    @property
    def rounds(self) -> int:
        return len(self.round_starts)

    @property
    def rounds_to_legal(self):
        if self.converged_at is None:
            return None
        return rounds_before(self.round_starts, self.converged_at)


def _violation(name, i, message, c, event=None):
    details = {"configuration": c.to_dict()}
    if event is not None:
        details["event"] = event.to_dict()
    return InvariantViolation(name, i, message, details)


def _check_step(ev: Evaluator, prev: Snapshot, cur: Snapshot, i, c, event, all_valid_seen, closed):
    """Per-step invariants between consecutive configurations ``i - 1`` and ``i``."""
    if cur.phi > prev.phi:
        raise _violation("phi-monotone", i, f"potential rose from {prev.phi} to {cur.phi}", c, event)
    if cur.phi != INF and cur.phi < ev.mst_weight:
        raise _violation("phi-lower-bound", i, f"potential {cur.phi} below MST weight {ev.mst_weight}", c, event)
    image: dict = {}
    for old, new in zip(prev.labels, cur.labels):
        if image.setdefault(old, new) != new:
            raise _violation("connectivity", i, "a component of the reference graph split", c, event)
    if all_valid_seen and cur.phi_tilde > prev.phi_tilde:
        raise _violation(
            "phi-tilde-monotone", i, f"longest invalid edge grew from {prev.phi_tilde} to {cur.phi_tilde}", c, event
        )
    if cur.phi != INF and cur.phi > ev.mst_weight and ev.kernel.find_witness(cur.chosen) is None:
        raise _violation("improvement-witness", i, f"no witness although potential {cur.phi} is suboptimal", c)
    if closed is not None and (not cur.legal or cur.explicit_ranks != closed):
        raise _violation("closure", i, "left the legal set or changed explicit edges after convergence", c, event)


def run(
    initial: Configuration,
    scheduler: Scheduler,
    m: Metric,
    budget: int | None = None,
    assertions: bool = True,
    order: str = "id",
    stop_at_convergence: bool = True,
    observer=None,
    backend=None,
) -> SimulationTrace:
    """Drive ``initial`` with ``scheduler`` until converged or ``budget`` events.

    With ``assertions`` on, every step is checked against the potential,
    connectivity, witness and closure invariants and an
    :class:`~buildmst.errors.InvariantViolation` is raised on the first
    failure.  ``observer(i, configuration)`` is called for every
    configuration, including the initial one.
    """
    initial.validate(m)
    n = len(m)
    if budget is None:
        budget = 50 * n * n
    scheduler.start(m.nodes, initial.step_index)
    order_rng = random.Random(f"order:{scheduler.policy}:{scheduler.seed}")
    ev = Evaluator(m, backend)
    trace = SimulationTrace(tuple(m.nodes), initial, mst_weight=ev.mst_weight)

    c = initial
    snap = ev.evaluate(c)
    trace.samples.append(Sample(0, snap.phi, snap.phi_tilde, snap.n_explicit, snap.n_implicit, snap.legal))
    if observer is not None:
        observer(0, c)
    all_valid_seen = snap.all_valid
    closed = None
    if snap.legal and snap.quiescent:
        trace.converged_at = 0
        closed = snap.explicit_ranks

    i = 0
    while i < budget and not (stop_at_convergence and trace.converged_at is not None):
        event = scheduler.next_event(c)
        c, sent = _step(c, event, m, order, order_rng, backend)
        i += 1
        trace.events.append(event)
        trace.emitted.append(sent)
        cur = ev.evaluate(c)
        if assertions:
            _check_step(ev, snap, cur, i, c, event, all_valid_seen, closed)
        snap = cur
        all_valid_seen = all_valid_seen or cur.all_valid
        trace.samples.append(Sample(i, cur.phi, cur.phi_tilde, cur.n_explicit, cur.n_implicit, cur.legal))
        if observer is not None:
            observer(i, c)
        if trace.converged_at is None and cur.legal and cur.quiescent:
            trace.converged_at = i
            closed = cur.explicit_ranks

    trace.final = c
    if trace.converged_at is not None:
        trace.outcome = "converged"
        if assertions and not potentials.is_converged(c, m):
            raise _violation("termination", i, "kernel reports convergence but the oracle disagrees", c)
    trace.round_starts = round_boundaries(trace)
    return trace
