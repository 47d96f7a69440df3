"""Activation/delivery schedulers.

Every policy enforces weak fairness with horizon ``H``: each node is
activated at least once in every window of ``H`` consecutive events.  This is
done earliest-deadline-first: a node's deadline is its last activation plus
``H``, and once the deadlines leave no slack the most urgent node is forced.
Any message that has waited ``H`` steps is delivered at its receiver's next
activation, so every message is delivered within ``2H`` steps.
"""

from __future__ import annotations

import random

from buildmst.simulator.configuration import Configuration, ScheduleEvent

POLICIES = ("round-robin-full-delivery", "uniform-random-fair", "adversarial-starve")
POLICY_ALIASES = {
    "rr": "round-robin-full-delivery",
    "round-robin": "round-robin-full-delivery",
    "random": "uniform-random-fair",
    "adversarial": "adversarial-starve",
}


def resolve_policy(name: str) -> str:
    policy = POLICY_ALIASES.get(name, name)
    if policy not in POLICIES:
        raise ValueError(f"unknown scheduler policy {name!r}")
    return policy


class Scheduler:
    """Stateful event source; call :meth:`start` before drawing events."""

    def __init__(self, policy: str, seed: int = 0, horizon: int | None = None):
        self.policy = resolve_policy(policy)
        self.seed = seed
        self.horizon = horizon

    def __repr__(self) -> str:
        return f"Scheduler({self.policy!r}, seed={self.seed}, horizon={self.horizon})"

    def start(self, nodes, t0: int = 0) -> None:
        self.nodes = sorted(nodes)
        self.H = self.horizon if self.horizon is not None else 4 * len(self.nodes)
        if self.H < len(self.nodes):
            raise ValueError(f"fairness horizon {self.H} is shorter than the node count {len(self.nodes)}")
        self.rng = random.Random(f"scheduler:{self.policy}:{self.seed}")
        self.last = {v: t0 - 1 for v in self.nodes}
        self.cursor = 0
        self.hot = self.nodes[0]

    @property
    def delivery_bound(self) -> int:
        """Upper bound on the number of steps any message waits in a channel."""
        return 2 * self.H

    def _forced(self, t: int):
        deadlines = sorted((self.last[v] + self.H, v) for v in self.nodes)
        for i, (d, _) in enumerate(deadlines):
            if d - t <= i:
                return deadlines[0][1]
        return None

    def next_event(self, c: Configuration) -> ScheduleEvent:
        t = c.step_index
        H = self.H
        if self.policy == "round-robin-full-delivery":
            node = self.nodes[self.cursor]
            self.cursor = (self.cursor + 1) % len(self.nodes)
            delivered = c.channels[node]
        elif self.policy == "uniform-random-fair":
            node = self._forced(t)
            if node is None:
                node = self.rng.choice(self.nodes)
            delivered = [m for m in c.channels[node] if t - m.sent_at >= H or self.rng.random() < 0.5]
            self.rng.shuffle(delivered)
        else:
            # keep one node busy and starve everybody else until forced
            node = self._forced(t)
            if node is None:
                node = self.hot
            delivered = sorted(
                (m for m in c.channels[node] if t - m.sent_at >= H), key=lambda m: m.seq, reverse=True
            )
        self.last[node] = t
        self.hot = node
        return ScheduleEvent(node, tuple(delivered))
