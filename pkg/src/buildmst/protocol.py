"""The node program: delegate non-relative neighbours, introduce to the rest.

A node ``v`` walks a snapshot of its neighbour set.  For each ``w`` it looks
for a *live* neighbour ``u`` (one not yet delegated in this activation) with
``u < (v, w)``; if there is one, ``w`` is handed to the witness nearest to
``w`` and forgotten, otherwise ``v`` sends its own reference to ``w``.
"""

from __future__ import annotations

import random
from collections.abc import Iterable
from dataclasses import dataclass

from buildmst.kernels import kernel_for
from buildmst.tree_metric import Metric

ORDER_POLICIES = ("id", "distance", "random")


@dataclass(frozen=True)
class NodeState:
    id: int
    neighbors: frozenset = frozenset()

    def __post_init__(self):
        nbrs = frozenset(self.neighbors)
        if self.id in nbrs:
            nbrs = nbrs - {self.id}
        object.__setattr__(self, "neighbors", nbrs)


@dataclass(frozen=True)
class OutMessage:
    to: int
    payload: int


def merge_delivered(state: NodeState, delivered: Iterable[int]) -> NodeState:
    """Union the delivered references into the neighbour set; self-references are dropped."""
    added = frozenset(delivered) - {state.id}
    if added <= state.neighbors:
        return state
    return NodeState(state.id, state.neighbors | added)


def neighbor_order(state: NodeState, m: Metric, order: str = "id", rng: random.Random | None = None) -> list:
    nbrs = sorted(state.neighbors)
    if order == "id":
        return nbrs
    if order == "distance":
        return sorted(nbrs, key=lambda w: m.distance(state.id, w))
    if order == "random":
        if rng is None:
            raise ValueError("random order needs an rng")
        rng.shuffle(nbrs)
        return nbrs
    raise ValueError(f"unknown order policy {order!r}; expected one of {ORDER_POLICIES}")


def activate(
    state: NodeState,
    m: Metric,
    order: str = "id",
    rng: random.Random | None = None,
    backend: str | None = None,
) -> tuple:
    """Run one activation on an already-merged state.

    Returns ``(new_state, messages)`` where messages appear in loop order.
    A delegation of ``w`` to ``u`` is ``OutMessage(to=u, payload=w)``; an
    introduction to ``w`` is ``OutMessage(to=w, payload=state.id)``.
    """
    if not state.neighbors:
        return state, []
    seq = neighbor_order(state, m, order, rng)
    index = m.index
    try:
        v = index[state.id]
        idx = [index[w] for w in seq]
    except KeyError as exc:
        raise AssertionError(f"node {state.id} holds a reference {exc.args[0]} outside the metric") from None
    targets = kernel_for(m, backend).select_delegates(v, idx)
    nodes = m.nodes
    messages = []
    removed = []
    for w, t in zip(seq, targets):
        if t < 0:
            messages.append(OutMessage(w, state.id))
        else:
            messages.append(OutMessage(nodes[t], w))
            removed.append(w)
    if removed:
        state = NodeState(state.id, state.neighbors.difference(removed))
    return state, messages
