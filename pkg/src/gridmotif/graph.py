"""Immutable undirected graph model with per-node power-system features."""

from __future__ import annotations

import enum
import hashlib
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import EmptySet, InvalidEdge, SelfLoop, UnknownNode


class NodeType(str, enum.Enum):
    PQ = "PQ"
    PV = "PV"
    REF = "REF"
    UNKNOWN = "UNKNOWN"


NODE_TYPES = (NodeType.PQ, NodeType.PV, NodeType.REF, NodeType.UNKNOWN)


@dataclass(frozen=True)
class NodeFeatures:
    node_type: NodeType = NodeType.UNKNOWN
    voltage_kv: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "node_type", NodeType(self.node_type))
        if self.voltage_kv is not None:
            v = float(self.voltage_kv)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"voltage_kv must be finite and >= 0, got {self.voltage_kv!r}")
            object.__setattr__(self, "voltage_kv", v)

    def label(self):
        """Hashable key compared by feature-respecting matching."""
        v = None if self.voltage_kv is None else round(self.voltage_kv, 6)
        return (self.node_type.value, v)


UNKNOWN = NodeFeatures()


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on dense node ids ``0..n-1``.

    Build instances with :func:`build_graph`; the constructor expects an
    already-normalized edge tuple of sorted ``(u, v)`` pairs with ``u < v``.
    """

    name: str
    features: tuple[NodeFeatures, ...]
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    _edge_set: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.features)
        adj = [[] for _ in range(n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        object.__setattr__(self, "adjacency", tuple(tuple(sorted(a)) for a in adj))
        object.__setattr__(self, "_edge_set", frozenset(self.edges))

    @property
    def n(self) -> int:
        return len(self.features)

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def has_edge(self, u: int, v: int) -> bool:
        if u > v:
            u, v = v, u
        return (u, v) in self._edge_set

    def labels(self, respect_features: bool = True) -> tuple:
        if not respect_features:
            return (None,) * self.n
        return tuple(f.label() for f in self.features)

    def components(self) -> list[list[int]]:
        seen = [False] * self.n
        comps = []
        for s in range(self.n):
            if seen[s]:
                continue
            seen[s] = True
            comp, queue = [], deque([s])
            while queue:
                u = queue.popleft()
                comp.append(u)
                for w in self.adjacency[u]:
                    if not seen[w]:
                        seen[w] = True
                        queue.append(w)
            comps.append(sorted(comp))
        return comps

    def is_connected(self) -> bool:
        return self.n > 0 and len(self.components()) == 1

    def distances_from(self, source: int) -> dict[int, int]:
        dist = {source: 0}
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for w in self.adjacency[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return dist

    def relabel(self, perm: Sequence[int], name: str | None = None) -> "Graph":
        """Return the graph with node ``i`` renamed to ``perm[i]``."""
        feats = [None] * self.n
        for i, p in enumerate(perm):
            feats[p] = self.features[i]
        return build_graph(name or self.name, feats, [(perm[u], perm[v]) for u, v in self.edges])


@dataclass(frozen=True)
class Neighborhood:
    """Connected graph with a distinguished anchor node.

    ``source`` is ``(graph_name, original_ids)`` where ``original_ids[i]`` is
    the id in the source graph of local node ``i``.
    """

    graph: Graph
    anchor: int
    source: tuple[str, tuple[int, ...]] | None = None

    def __post_init__(self):
        if not 0 <= self.anchor < self.graph.n:
            raise UnknownNode(f"anchor {self.anchor} not in graph of {self.graph.n} nodes")
        if not self.graph.is_connected():
            raise ValueError("neighborhood graph must be connected")

    @property
    def n(self) -> int:
        return self.graph.n


def build_graph(name: str, node_features: Sequence, edge_pairs: Iterable) -> Graph:
    """Validate and normalize raw input into a :class:`Graph`.

    ``node_features`` entries may be :class:`NodeFeatures` or ``None``
    (unknown type, no voltage). Duplicate edges in either orientation collapse.
    """
    feats = tuple(UNKNOWN if f is None else f for f in node_features)
    for i, f in enumerate(feats):
        if not isinstance(f, NodeFeatures):
            raise TypeError(f"node {i}: expected NodeFeatures or None, got {type(f).__name__}")
    n = len(feats)
    edges = set()
    for pair in edge_pairs:
        u, v = int(pair[0]), int(pair[1])
        if not (0 <= u < n and 0 <= v < n):
            raise InvalidEdge(f"edge ({u}, {v}) references a node outside 0..{n - 1}")
        if u == v:
            raise SelfLoop(f"self-loop on node {u}")
        edges.add((u, v) if u < v else (v, u))
    return Graph(name, feats, tuple(sorted(edges)))


def induced_subgraph(g: Graph, node_set: Iterable[int], name: str | None = None):
    """Induced subgraph on ``node_set``.

    Returns ``(graph, ids)`` where ``ids[i]`` is the original id of new node ``i``
    (ascending order).
    """
    ids = tuple(sorted(set(node_set)))
    if not ids:
        raise EmptySet("node_set is empty")
    for v in ids:
        if not 0 <= v < g.n:
            raise UnknownNode(f"node {v} not in graph {g.name!r}")
    index = {v: i for i, v in enumerate(ids)}
    edges = []
    for v in ids:
        for w in g.adjacency[v]:
            if w > v and w in index:
                edges.append((index[v], index[w]))
    sub = Graph(name or g.name, tuple(g.features[v] for v in ids), tuple(sorted(edges)))
    return sub, ids


def anchored_subgraph(g: Graph, node_set: Iterable[int], anchor: int) -> Neighborhood:
    """Induced, anchored neighborhood with source provenance."""
    sub, ids = induced_subgraph(g, node_set)
    if anchor not in ids:
        raise UnknownNode(f"anchor {anchor} not in node_set")
    return Neighborhood(sub, ids.index(anchor), (g.name, ids))


def k_hop_neighborhood(g: Graph, anchor: int, k: int) -> Neighborhood:
    if not 0 <= anchor < g.n:
        raise UnknownNode(f"node {anchor} not in graph {g.name!r}")
    if k < 0:
        raise ValueError("k must be non-negative")
    dist = {anchor: 0}
    frontier = [anchor]
    for depth in range(k):
        nxt = []
        for u in frontier:
            for w in g.adjacency[u]:
                if w not in dist:
                    dist[w] = depth + 1
                    nxt.append(w)
        frontier = nxt
    return anchored_subgraph(g, dist, anchor)


def is_isomorphic(g1: Graph, g2: Graph, respect_features: bool = True) -> bool:
    """Exact isomorphism test, optionally requiring matching node features."""
    if g1.n != g2.n or g1.m != g2.m:
        return False
    if sorted(map(g1.degree, range(g1.n))) != sorted(map(g2.degree, range(g2.n))):
        return False
    if respect_features and sorted(g1.labels(), key=repr) != sorted(g2.labels(), key=repr):
        return False
    from .oracle import INDUCED, MatchSemantics, find_embedding

    sem = MatchSemantics(INDUCED, anchored=False, respect_features=respect_features)
    return find_embedding(g2, g1, sem) is not None


def _digest(text: str) -> str:
    return hashlib.blake2b(text.encode(), digest_size=8).hexdigest()


def canonical_key(g: Graph, respect_features: bool = True, rounds: int = 3) -> str:
    """Isomorphism-invariant hash from Weisfeiler-Leman color refinement.

    Isomorphic graphs always share a key; distinct keys prove
    non-isomorphism, equal keys must be confirmed with :func:`is_isomorphic`.
    """
    labels = g.labels(respect_features)
    colors = [_digest(f"{labels[v]!r}|{g.degree(v)}") for v in range(g.n)]
    for _ in range(rounds):
        colors = [
            _digest(colors[v] + "(" + ",".join(sorted(colors[w] for w in g.adjacency[v])) + ")")
            for v in range(g.n)
        ]
    return f"n{g.n}m{g.m}:" + _digest(",".join(sorted(colors)))
