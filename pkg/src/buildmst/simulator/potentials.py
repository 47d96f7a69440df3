"""Potentials and legality, computed straight from the MST oracle.

These are the slow, obviously-correct versions.  The engine evaluates the
same quantities through the rank kernels every step and can cross-check
against these.
"""

from __future__ import annotations

import math

from buildmst import mst_oracle
from buildmst.mst_oracle import DISCONNECTED, edge
from buildmst.simulator.configuration import (
    Configuration,
    explicit_edges,
    implicit_edges,
    undirected_edges,
    undirected_explicit,
)
from buildmst.tree_metric import Metric, is_relative_witness

INF = math.inf


def potential_phi(c: Configuration, m: Metric):
    """Weight of the MST of the undirected reference graph, or ``inf`` if it is disconnected."""
    tree = mst_oracle.mst_subgraph(m, undirected_edges(c))
    if tree is DISCONNECTED:
        return INF
    return mst_oracle.edges_weight(m, tree)


def potential_phi_tilde(c: Configuration, m: Metric, mst=None):
    """Length of the longest present pair that is not in the overlay-wide MST (0 if none)."""
    mst = mst_oracle.mst_complete(m) if mst is None else mst
    invalid = undirected_edges(c) - mst
    return max((m.distance(a, b) for a, b in invalid), default=0)


def component_targets(c: Configuration, m: Metric) -> frozenset:
    """Union of ``MST(V_i)`` over the components ``V_i`` of the reference graph."""
    target = set()
    for _, tree in mst_oracle.msf_components(m, undirected_edges(c)):
        target |= tree
    return frozenset(target)


def is_legal(c: Configuration, m: Metric) -> bool:
    """Explicit edges project exactly onto the per-component MSTs; in-flight ones lie inside them.

    One direction of each MST edge suffices.
    """
    target = component_targets(c, m)
    if undirected_explicit(c) != target:
        return False
    return all(edge(v, w) in target for v, w in implicit_edges(c) if v != w)


def is_quiescent(c: Configuration, m: Metric) -> bool:
    """Every in-flight reference is already held by its receiver or is an MST reference."""
    target = component_targets(c, m)
    for v, ch in c.channels.items():
        held = c.states[v].neighbors
        for msg in ch:
            if msg.payload != v and msg.payload not in held and edge(v, msg.payload) not in target:
                return False
    return True


def is_converged(c: Configuration, m: Metric) -> bool:
    return is_legal(c, m) and is_quiescent(c, m)


def witness_triple(c: Configuration, m: Metric):
    """Some ``(u, v, w)`` with u < (v,w) and both {v,u}, {v,w} in the MST of present edges."""
    tree = mst_oracle.mst_subgraph(m, undirected_edges(c))
    if tree is DISCONNECTED:
        return None
    adj: dict = {}
    for a, b in tree:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    for v in sorted(adj):
        for w in sorted(adj[v]):
            for u in sorted(adj[v]):
                if u != w and is_relative_witness(m, u, v, w):
                    return (u, v, w)
    return None

