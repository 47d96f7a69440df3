"""Centralised ground truth: MSTs over metric closures and edge subsets.

Everything here is deliberately simple (Kruskal over a plain union-find) and
independent of the compiled kernels, so the simulator's potentials can be
cross-checked against it.  Edges are normalised ``(a, b)`` tuples with
``a < b``; an :data:`EdgeSet` is a ``frozenset`` of them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from itertools import combinations
from typing import FrozenSet, Iterable, Tuple

from buildmst.tree_metric import Metric, format_weight, is_relative_witness

Edge = Tuple[int, int]
EdgeSet = FrozenSet[Edge]


class Connectivity(enum.Enum):
    DISCONNECTED = "disconnected"

    def __repr__(self) -> str:
        return "DISCONNECTED"


DISCONNECTED = Connectivity.DISCONNECTED


def edge(a: int, b: int) -> Edge:
    if a == b:
        raise ValueError(f"self-loop {a}")
    return (a, b) if a < b else (b, a)


def edge_set(pairs: Iterable) -> EdgeSet:
    return frozenset(edge(a, b) for a, b in pairs)


class DisjointSet:
    def __init__(self, items: Iterable):
        self.parent = {x: x for x in items}

    def find(self, x):
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def _kruskal(m: Metric, nodes, candidates) -> tuple:
    ds = DisjointSet(nodes)
    chosen = []
    for e in sorted(candidates, key=lambda e: m.distance(*e)):
        if ds.union(*e):
            chosen.append(e)
    return frozenset(chosen), ds


def edges_weight(m: Metric, edges: Iterable[Edge]):
    return sum((m.distance(a, b) for a, b in edges), 0)


def mst_complete(m: Metric, nodes: Iterable[int] | None = None) -> EdgeSet:
    """Unique MST of the complete graph on ``nodes`` (default: the whole overlay)."""
    nodes = sorted(m.nodes if nodes is None else nodes)
    for v in nodes:
        m.distance(v, v)
    tree, _ = _kruskal(m, nodes, combinations(nodes, 2))
    return tree


def mst_subgraph(m: Metric, edges: Iterable[Edge], nodes: Iterable[int] | None = None):
    """MST of ``(nodes, edges)``, or :data:`DISCONNECTED` if that graph is not connected."""
    nodes = sorted(m.nodes if nodes is None else nodes)
    edges = edge_set(edges)
    tree, _ = _kruskal(m, nodes, edges)
    if len(tree) != len(nodes) - 1:
        return DISCONNECTED
    return tree


def components(nodes: Iterable[int], edges: Iterable[Edge]) -> list:
    """Connected components as a list of frozensets, ordered by smallest member."""
    nodes = sorted(nodes)
    ds = DisjointSet(nodes)
    for a, b in edges:
        ds.union(a, b)
    groups: dict = {}
    for v in nodes:
        groups.setdefault(ds.find(v), set()).add(v)
    return sorted((frozenset(g) for g in groups.values()), key=min)


def msf_components(m: Metric, edges: Iterable[Edge], nodes: Iterable[int] | None = None) -> list:
    """Components of ``(V, edges)``, each paired with the MST of its metric closure."""
    nodes = m.nodes if nodes is None else nodes
    return [(comp, mst_complete(m, comp)) for comp in components(nodes, edge_set(edges))]


# --- structural verifiers --------------------------------------------------


@dataclass
class Report:
    name: str
    checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, subject, **distances) -> None:
        self.failures.append(
            {"subject": list(subject), "distances": {k: format_weight(v) for k, v in distances.items()}}
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "failures": self.failures,
        }


def verify_lemma1(m: Metric, mst: EdgeSet | None = None) -> Report:
    """MST edges admit no relative witness; every other pair has one adjacent in the MST.

    The second statement is checked for both orientations of every non-MST pair.
    """
    report = Report("relative-neighbour/MST equivalence")
    mst = mst_complete(m) if mst is None else mst
    nodes = m.nodes
    for v, w in combinations(nodes, 2):
        if (v, w) in mst:
            for u in nodes:
                report.checked += 1
                if u not in (v, w) and is_relative_witness(m, u, v, w):
                    report.fail((u, v, w), uv=m.distance(u, v), uw=m.distance(u, w), vw=m.distance(v, w))
            continue
        for a, b in ((v, w), (w, v)):
            report.checked += 1
            if not any(
                u not in (a, b) and edge(a, u) in mst and is_relative_witness(m, u, a, b) for u in nodes
            ):
                report.fail((a, b), ab=m.distance(a, b))
    return report


def verify_witness_disjunction(m: Metric) -> Report:
    """For u != v and d(u,r), d(v,r) < d(w,r): exactly one of u<(v,w), v<(u,w), and never w<(u,v).

    Exhaustive over all quadruples; meant for small overlays.
    """
    report = Report("median witness disjunction")
    nodes = m.nodes
    for r in nodes:
        for w in nodes:
            d_wr = m.distance(w, r)
            closer = [x for x in nodes if m.distance(x, r) < d_wr]
            for u in closer:
                for v in closer:
                    if u == v:
                        continue
                    report.checked += 1
                    first = is_relative_witness(m, u, v, w)
                    second = is_relative_witness(m, v, u, w)
                    if first == second or is_relative_witness(m, w, u, v):
                        report.fail(
                            (u, v, w, r),
                            ur=m.distance(u, r),
                            vr=m.distance(v, r),
                            wr=d_wr,
                            uv=m.distance(u, v),
                            uw=m.distance(u, w),
                            vw=m.distance(v, w),
                        )
    return report


def tree_path(tree_edges: Iterable[Edge], a: int, b: int) -> list:
    adj: dict = {}
    for x, y in tree_edges:
        adj.setdefault(x, []).append(y)
        adj.setdefault(y, []).append(x)
    parent = {a: None}
    stack = [a]
    while stack:
        x = stack.pop()
        for y in adj.get(x, ()):
            if y not in parent:
                parent[y] = x
                stack.append(y)
    if b not in parent:
        raise ValueError(f"{a} and {b} are not connected")
    out = [b]
    while out[-1] != a:
        out.append(parent[out[-1]])
    return out[::-1]


def verify_path_monotonicity(m: Metric, mst: EdgeSet | None = None) -> Report:
    """Along every MST path v = v0, ..., vk = w the distance to v strictly grows."""
    report = Report("MST path monotonicity")
    mst = mst_complete(m) if mst is None else mst
    for v in m.nodes:
        for w in m.nodes:
            if v == w:
                continue
            path = tree_path(mst, v, w)
            for x, y in zip(path, path[1:]):
                report.checked += 1
                if not m.distance(x, v) < m.distance(y, v):
                    report.fail((v, w, x, y), xv=m.distance(x, v), yv=m.distance(y, v))
    return report
