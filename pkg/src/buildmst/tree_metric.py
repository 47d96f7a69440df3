"""Weighted underlay trees and the tree metric they induce on the overlay.

All weights are exact (``int`` or :class:`fractions.Fraction`), so that the
strict comparisons of the relative-neighbour predicate are never subject to
rounding.  Distances are precomputed into an all-pairs table together with a
*rank* table: because every overlay pair has a distinct distance, comparing
ranks is equivalent to comparing distances, and the compiled kernels work on
ranks only.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from pathlib import Path
from typing import Iterable, Union

from buildmst.errors import (
    DuplicateDistanceError,
    InvalidTreeError,
    TreeGenerationError,
    UnknownNodeError,
)

Weight = Union[int, Fraction]


def as_weight(value) -> Weight:
    """Coerce ``value`` to an exact weight; integral fractions become ``int``."""
    if isinstance(value, bool):
        raise TypeError("boolean is not a weight")
    if isinstance(value, int):
        return value
    if isinstance(value, Rational):
        value = Fraction(value)
    elif isinstance(value, str):
        value = Fraction(value.strip())
    else:
        raise TypeError(f"weights must be int, Fraction or a decimal string, got {type(value).__name__}")
    return value.numerator if value.denominator == 1 else value


def format_weight(value) -> str:
    if isinstance(value, Fraction) and value.denominator != 1:
        return f"{value.numerator}/{value.denominator}"
    return str(int(value))


@dataclass(frozen=True)
class WeightedTree:
    """An underlay tree ``(V_T, E_T, f)`` together with its overlay ``V``.

    Construction validates the tree shape, positive weights, that the overlay
    is a subset of the tree, and that all pairwise overlay distances are
    distinct.
    """

    tree_nodes: frozenset
    edges: tuple
    overlay_nodes: frozenset
    _adj: dict = field(init=False, repr=False, compare=False)
    _table: dict = field(init=False, repr=False, compare=False)

    def __init__(self, tree_nodes: Iterable[int], edges: Iterable, overlay_nodes: Iterable[int]):
        nodes = frozenset(int(x) for x in tree_nodes)
        norm_edges = tuple((int(a), int(b), as_weight(wt)) for a, b, wt in edges)
        overlay = frozenset(int(x) for x in overlay_nodes)
        object.__setattr__(self, "tree_nodes", nodes)
        object.__setattr__(self, "edges", norm_edges)
        object.__setattr__(self, "overlay_nodes", overlay)
        object.__setattr__(self, "_adj", self._validate_shape())
        object.__setattr__(self, "_table", self._overlay_distances())

    def _validate_shape(self) -> dict:
        if not self.tree_nodes:
            raise InvalidTreeError("tree has no nodes")
        if any(x < 0 for x in self.tree_nodes):
            raise InvalidTreeError("node ids must be nonnegative")
        if len(self.edges) != len(self.tree_nodes) - 1:
            raise InvalidTreeError(
                f"a tree on {len(self.tree_nodes)} nodes needs {len(self.tree_nodes) - 1} edges, got {len(self.edges)}"
            )
        adj: dict[int, list] = {x: [] for x in self.tree_nodes}
        seen_edges = set()
        for a, b, wt in self.edges:
            if a not in adj or b not in adj:
                raise InvalidTreeError(f"edge ({a}, {b}) references an unknown node")
            if a == b:
                raise InvalidTreeError(f"self-loop at {a}")
            if wt <= 0:
                raise InvalidTreeError(f"edge ({a}, {b}) has non-positive weight {wt}")
            key = (min(a, b), max(a, b))
            if key in seen_edges:
                raise InvalidTreeError(f"parallel edge {key}")
            seen_edges.add(key)
            adj[a].append((b, wt))
            adj[b].append((a, wt))
        # n-1 edges + connected <=> tree
        start = next(iter(self.tree_nodes))
        reached = {start}
        todo = [start]
        while todo:
            x = todo.pop()
            for y, _ in adj[x]:
                if y not in reached:
                    reached.add(y)
                    todo.append(y)
        if len(reached) != len(self.tree_nodes):
            raise InvalidTreeError("edge set is not connected (it contains a cycle or is a forest)")
        if not self.overlay_nodes <= self.tree_nodes:
            missing = sorted(self.overlay_nodes - self.tree_nodes)
            raise InvalidTreeError(f"overlay nodes {missing} are not tree nodes")
        if not self.overlay_nodes:
            raise InvalidTreeError("overlay is empty")
        return adj

    def distances_from(self, source: int) -> dict:
        """Exact path length from ``source`` to every tree node."""
        dist = {source: 0}
        queue = deque([source])
        while queue:
            x = queue.popleft()
            for y, wt in self._adj[x]:
                if y not in dist:
                    dist[y] = dist[x] + wt
                    queue.append(y)
        return dist

    def path(self, a: int, b: int) -> list:
        """The unique tree path from ``a`` to ``b`` (both endpoints included)."""
        parent = {a: None}
        queue = deque([a])
        while queue:
            x = queue.popleft()
            if x == b:
                break
            for y, _ in self._adj[x]:
                if y not in parent:
                    parent[y] = x
                    queue.append(y)
        out = [b]
        while out[-1] != a:
            out.append(parent[out[-1]])
        return out[::-1]

    def _overlay_distances(self) -> dict:
        table = {}
        overlay = sorted(self.overlay_nodes)
        seen: dict = {}
        for v in overlay:
            full = self.distances_from(v)
            row = {w: as_weight(full[w]) for w in overlay}
            table[v] = row
            for w in overlay:
                if w <= v:
                    continue
                d = row[w]
                if d in seen:
                    raise DuplicateDistanceError(
                        f"pairs {seen[d]} and {(v, w)} both have distance {format_weight(d)}"
                    )
                seen[d] = (v, w)
        return table

    @property
    def n_overlay(self) -> int:
        return len(self.overlay_nodes)


class Metric:
    """All-pairs tree distances over the overlay, plus their global ranking.

    ``rank[i][j]`` is the position of pair ``{nodes[i], nodes[j]}`` in the
    ascending order of all pairwise distances (``-1`` on the diagonal), and
    ``pair_a[r], pair_b[r]`` are the node *indices* of the pair of rank ``r``.
    """

    def __init__(self, table: dict):
        self.nodes = tuple(sorted(table))
        self.index = {v: i for i, v in enumerate(self.nodes)}
        n = len(self.nodes)
        self._table = table
        pairs = sorted(
            ((table[self.nodes[i]][self.nodes[j]], i, j) for i in range(n) for j in range(i + 1, n)),
        )
        self.rank = [[-1] * n for _ in range(n)]
        self.pair_a = []
        self.pair_b = []
        self.pair_weight = []
        for r, (d, i, j) in enumerate(pairs):
            self.rank[i][j] = self.rank[j][i] = r
            self.pair_a.append(i)
            self.pair_b.append(j)
            self.pair_weight.append(d)
        denominators = [w.denominator for w in self.pair_weight if isinstance(w, Fraction)]
        scale = 1
        for q in denominators:
            scale = scale * q // _gcd(scale, q)
        # integer-scaled weights keep potential sums exact and cheap
        self.weight_scale = scale
        self.scaled_weight = [int(w * scale) for w in self.pair_weight]

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, v) -> bool:
        return v in self.index

    def distance(self, v: int, w: int) -> Weight:
        try:
            return self._table[v][w]
        except KeyError:
            bad = v if v not in self._table else w
            raise UnknownNodeError(f"node {bad} is not an overlay node") from None

    def pair_rank(self, v: int, w: int) -> int:
        return self.rank[self.index[v]][self.index[w]]

    def edge_of_rank(self, r: int) -> tuple:
        a, b = self.nodes[self.pair_a[r]], self.nodes[self.pair_b[r]]
        return (a, b) if a < b else (b, a)

    def weight_from_scaled(self, total: int) -> Weight:
        if self.weight_scale == 1:
            return total
        return as_weight(Fraction(total, self.weight_scale))


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def build_metric(tree: WeightedTree) -> Metric:
    return Metric(tree._table)


def distance(m: Metric, v: int, w: int) -> Weight:
    return m.distance(v, w)


def is_relative_witness(m: Metric, u: int, v: int, w: int) -> bool:
    """True iff ``u`` is strictly closer to both ``v`` and ``w`` than they are to each other."""
    d_vw = m.distance(v, w)
    return m.distance(u, v) < d_vw and m.distance(u, w) < d_vw


def median(tree: WeightedTree, u: int, v: int, r: int) -> int:
    """The unique tree node lying on all three paths between ``u``, ``v`` and ``r``.

    It is the node of ``P(u, v)`` nearest to ``r``; weights are positive so
    the minimiser is unique.
    """
    for x in (u, v, r):
        if x not in tree.tree_nodes:
            raise UnknownNodeError(f"node {x} is not a tree node")
    from_r = tree.distances_from(r)
    return min(tree.path(u, v), key=from_r.__getitem__)


def generate_random_tree(
    n_overlay: int,
    n_internal: int = 0,
    weight_range: tuple = (1, 10**6),
    seed: int = 0,
    max_retries: int = 100,
) -> WeightedTree:
    """Random tree with overlay ids ``0..n_overlay-1`` and internal ids after them.

    The shape is drawn once; integer weights are redrawn until all overlay
    distances are distinct, at most ``max_retries`` times.
    """
    if n_overlay < 1:
        raise ValueError("n_overlay must be >= 1")
    if n_internal < 0:
        raise ValueError("n_internal must be >= 0")
    lo, hi = weight_range
    if lo <= 0 or hi < lo:
        raise ValueError(f"bad weight range {weight_range}")
    rng = random.Random(seed)
    total = n_overlay + n_internal
    order = list(range(total))
    rng.shuffle(order)
    shape = [(order[rng.randrange(i)], order[i]) for i in range(1, total)]
    for _ in range(max_retries):
        edges = [(a, b, rng.randint(lo, hi)) for a, b in shape]
        try:
            return WeightedTree(range(total), edges, range(n_overlay))
        except DuplicateDistanceError:
            continue
    raise TreeGenerationError(
        f"no tree with distinct distances after {max_retries} weight draws "
        f"(n_overlay={n_overlay}, range={weight_range}, seed={seed})"
    )


def three_node_example() -> tuple:
    """The three-node instance: internal hub 3 with legs u=0 (1), v=1 (5), w=2 (6).

    Returns the tree and a name -> id map.  ``d(v,u)=6, d(u,w)=7, d(v,w)=11``.
    """
    names = {"u": 0, "v": 1, "w": 2, "hub": 3}
    tree = WeightedTree(range(4), [(2, 3, 6), (3, 0, 1), (3, 1, 5)], [0, 1, 2])
    return tree, names


# --- tree file format -------------------------------------------------------


def dumps_tree(tree: WeightedTree) -> str:
    lines = [f"tree {len(tree.tree_nodes)} {len(tree.overlay_nodes)}"]
    lines += [f"edge {a} {b} {format_weight(wt)}" for a, b, wt in tree.edges]
    lines += [f"overlay {v}" for v in sorted(tree.overlay_nodes)]
    return "\n".join(lines) + "\n"


def loads_tree(text: str) -> WeightedTree:
    header = None
    edges = []
    overlay = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split()
        if not parts:
            continue
        kind = parts[0]
        try:
            if kind == "tree" and len(parts) == 3:
                if header is not None:
                    raise InvalidTreeError("duplicate header")
                header = (int(parts[1]), int(parts[2]))
            elif kind == "edge" and len(parts) == 4:
                edges.append((_parse_id(parts[1]), _parse_id(parts[2]), as_weight(parts[3])))
            elif kind == "overlay" and len(parts) == 2:
                overlay.append(_parse_id(parts[1]))
            else:
                raise InvalidTreeError(f"unrecognised record {raw!r}")
        except (ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, InvalidTreeError):
                raise InvalidTreeError(f"line {lineno}: {exc}") from None
            raise InvalidTreeError(f"line {lineno}: malformed record {raw!r}") from None
    if header is None:
        raise InvalidTreeError("missing 'tree' header")
    nodes = {x for a, b, _ in edges for x in (a, b)} | set(overlay)
    if len(nodes) != header[0] or len(set(overlay)) != header[1] or len(overlay) != header[1]:
        raise InvalidTreeError(
            f"header announces {header[0]} tree / {header[1]} overlay nodes, "
            f"body has {len(nodes)} / {len(overlay)}"
        )
    return WeightedTree(nodes, edges, overlay)


def _parse_id(token: str) -> int:
    value = int(token)
    if value < 0:
        raise InvalidTreeError(f"negative node id {value}")
    return value


def load_tree(path) -> WeightedTree:
    return loads_tree(Path(path).read_text())


def save_tree(tree: WeightedTree, path) -> None:
    Path(path).write_text(dumps_tree(tree))
