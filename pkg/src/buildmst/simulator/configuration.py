"""Configurations: node states plus per-node channels of in-flight references."""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations

from buildmst.errors import ScheduleError
from buildmst.mst_oracle import edge, edge_set
from buildmst.protocol import NodeState
from buildmst.tree_metric import Metric

SHAPES = (
    "line",
    "star",
    "random-connected",
    "random-maybe-disconnected",
    "adversarial-long-edges",
)
SHAPE_ALIASES = {
    "random": "random-connected",
    "disconnected": "random-maybe-disconnected",
    "long-edges": "adversarial-long-edges",
}


@dataclass(frozen=True)
class Message:
    """One reference in flight. ``seq`` is unique per run; ``sent_at`` is a step index."""

    seq: int
    payload: int
    sent_at: int = 0


@dataclass(frozen=True)
class ScheduleEvent:
    node: int
    delivered: tuple = ()

    def to_dict(self) -> dict:
        return {"node": self.node, "delivered": [m.seq for m in self.delivered]}


@dataclass
class Configuration:
    """One global state. Treated as immutable: :func:`step` builds a new one."""

    states: dict
    channels: dict
    step_index: int = 0
    next_seq: int = 0

    @classmethod
    def from_references(cls, nodes, explicit=None, pending=None) -> "Configuration":
        """Build a configuration from ``{v: neighbours}`` and ``{v: [payloads in channel]}``."""
        explicit = explicit or {}
        pending = pending or {}
        nodes = sorted(nodes)
        unknown = (set(explicit) | set(pending)) - set(nodes)
        if unknown:
            raise ValueError(f"references held by unknown nodes {sorted(unknown)}")
        states = {v: NodeState(v, frozenset(explicit.get(v, ()))) for v in nodes}
        seq = 0
        channels = {}
        for v in nodes:
            msgs = []
            for payload in pending.get(v, ()):
                msgs.append(Message(seq, payload, 0))
                seq += 1
            channels[v] = tuple(msgs)
        return cls(states, channels, 0, seq)

    @property
    def nodes(self) -> list:
        return list(self.states)

    def channel_multiset(self, v) -> Counter:
        return Counter(m.payload for m in self.channels[v])

    def validate(self, metric: Metric) -> None:
        known = set(metric.nodes)
        if set(self.states) != known or set(self.channels) != known:
            raise ScheduleError("configuration node set differs from the overlay")
        for v, st in self.states.items():
            if st.id != v or not st.neighbors <= known:
                raise ScheduleError(f"state of {v} references unknown nodes")
        for v, ch in self.channels.items():
            if any(m.payload not in known for m in ch):
                raise ScheduleError(f"channel of {v} holds unknown references")

    def to_dict(self) -> dict:
        return {
            "step": self.step_index,
            "next_seq": self.next_seq,
            "states": {str(v): sorted(st.neighbors) for v, st in self.states.items()},
            "channels": {
                str(v): [[m.seq, m.payload, m.sent_at] for m in ch] for v, ch in self.channels.items()
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Configuration":
        states = {int(v): NodeState(int(v), frozenset(nbrs)) for v, nbrs in data["states"].items()}
        channels = {int(v): tuple(Message(*rec) for rec in ch) for v, ch in data["channels"].items()}
        for v in states:
            channels.setdefault(v, ())
        seqs = [m.seq for ch in channels.values() for m in ch]
        next_seq = data.get("next_seq", max(seqs, default=-1) + 1)
        return cls(states, channels, data.get("step", 0), next_seq)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False, separators=(",", ":"))


def explicit_edges(c: Configuration) -> set:
    return {(v, w) for v, st in c.states.items() for w in st.neighbors}


def implicit_edges(c: Configuration) -> Counter:
    return Counter((v, m.payload) for v, ch in c.channels.items() for m in ch)


def undirected_edges(c: Configuration) -> frozenset:
    pairs = explicit_edges(c) | set(implicit_edges(c))
    return edge_set((a, b) for a, b in pairs if a != b)


def undirected_explicit(c: Configuration) -> frozenset:
    return edge_set(explicit_edges(c))


# --- initial configurations ------------------------------------------------


def _random_tree_edges(nodes, rng) -> list:
    nodes = list(nodes)
    rng.shuffle(nodes)
    return [edge(nodes[rng.randrange(i)], nodes[i]) for i in range(1, len(nodes))]


def _extra_edges(nodes, rng, count, existing) -> list:
    pool = [e for e in combinations(sorted(nodes), 2) if e not in existing]
    rng.shuffle(pool)
    return pool[:count]


def _place(edges, nodes, rng, p_explicit=0.5) -> Configuration:
    """Scatter undirected edges over states and channels with random direction."""
    explicit: dict = {v: set() for v in nodes}
    pending: dict = {v: [] for v in nodes}
    for a, b in edges:
        if rng.random() < 0.5:
            a, b = b, a
        directions = [(a, b), (b, a)] if rng.random() < 0.2 else [(a, b)]
        for x, y in directions:
            if rng.random() < p_explicit:
                explicit[x].add(y)
            else:
                pending[x].append(y)
                if rng.random() < 0.2:
                    pending[x].append(y)
    for v in nodes:
        rng.shuffle(pending[v])
    return Configuration.from_references(nodes, explicit, pending)


def generate_initial(m: Metric, shape: str, seed: int = 0, components: int | None = None) -> Configuration:
    """Deterministic initial configuration of the given shape.

    ``random-maybe-disconnected`` splits the overlay into ``components``
    groups (default: 2 or 3, drawn from the seed) and connects each group
    internally; every other shape is weakly connected.
    """
    shape = SHAPE_ALIASES.get(shape, shape)
    if shape not in SHAPES:
        raise ValueError(f"unknown initial shape {shape!r}")
    rng = random.Random(f"initial:{shape}:{seed}")
    nodes = list(m.nodes)
    n = len(nodes)
    if shape == "star":
        hub = rng.choice(nodes)
        return Configuration.from_references(nodes, {hub: set(nodes) - {hub}})
    if shape == "line":
        order = nodes[:]
        rng.shuffle(order)
        return _place([edge(a, b) for a, b in zip(order, order[1:])], nodes, rng)
    if shape == "random-connected":
        base = _random_tree_edges(nodes, rng)
        base += _extra_edges(nodes, rng, n // 2, set(base))
        return _place(base, nodes, rng)
    if shape == "adversarial-long-edges":
        by_length = sorted(combinations(nodes, 2), key=lambda e: m.distance(*e), reverse=True)
        parent = {v: v for v in nodes}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        chosen, rest = [], []
        for a, b in by_length:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
                chosen.append((a, b))
            else:
                rest.append((a, b))
        return _place(chosen + rest[: n // 2], nodes, rng)
    # random-maybe-disconnected
    if components is None:
        components = rng.choice((2, 3))
    k = max(1, min(components, n))
    order = nodes[:]
    rng.shuffle(order)
    cuts = sorted(rng.sample(range(1, n), k - 1)) if k > 1 else []
    groups = [order[i:j] for i, j in zip([0] + cuts, cuts + [n])]
    edges = []
    for g in groups:
        base = _random_tree_edges(g, rng)
        edges += base + _extra_edges(g, rng, len(g) // 2, set(base))
    return _place(edges, nodes, rng)


def legal_configuration(m: Metric, target_edges, seed: int = 0, in_flight: bool = True) -> Configuration:
    """A configuration whose explicit edges project onto ``target_edges``.

    Each target edge is held in at least one direction; with ``in_flight``
    the channels additionally carry (possibly duplicated) target references.
    """
    rng = random.Random(f"legal:{seed}")
    nodes = list(m.nodes)
    explicit: dict = {v: set() for v in nodes}
    pending: dict = {v: [] for v in nodes}
    for a, b in sorted(target_edges):
        mode = rng.randrange(3)
        if mode != 1:
            explicit[a].add(b)
        if mode != 0:
            explicit[b].add(a)
        if in_flight:
            for x, y in ((a, b), (b, a)):
                pending[x].extend([y] * rng.randrange(3))
    for v in nodes:
        rng.shuffle(pending[v])
    return Configuration.from_references(nodes, explicit, pending)
