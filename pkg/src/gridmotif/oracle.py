"""Exact subgraph matching and occurrence counting.

The matcher is a VF2-style backtracker: query nodes are placed in a fixed
order that keeps each new node adjacent to an already-placed one whenever the
query is connected, candidates come from the neighbors of the placed parent's
image, and each candidate is checked for label, degree and adjacency
consistency against every placed node.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Iterator

from .errors import OracleTimeout, TooLarge
from .graph import Graph, Neighborhood

INDUCED = "induced"
MONOMORPHISM = "monomorphism"
MODES = (INDUCED, MONOMORPHISM)

DEFAULT_TIMEOUT = 60.0


@dataclass(frozen=True)
class MatchSemantics:
    mode: str = INDUCED
    anchored: bool = False
    respect_features: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown match mode {self.mode!r}")


DEFAULT_SEMANTICS = MatchSemantics()


def _query_order(query: Graph, start: int | None) -> list[int]:
    # ascending degree, restricted to the frontier of placed nodes when possible
    deg = [query.degree(v) for v in range(query.n)]
    placed, order = set(), []
    frontier = set()
    while len(order) < query.n:
        if start is not None and not order:
            v = start
        else:
            pool = frontier if frontier else (set(range(query.n)) - placed)
            v = min(pool, key=lambda x: (deg[x], x))
        order.append(v)
        placed.add(v)
        frontier.discard(v)
        frontier.update(w for w in query.adjacency[v] if w not in placed)
    return order


class _Matcher:
    def __init__(self, target: Graph, query: Graph, sem: MatchSemantics,
                 q_anchor=None, t_anchor=None, allowed=None, timeout=None):
        self.target, self.query, self.sem = target, query, sem
        self.induced = sem.mode == INDUCED
        self.t_adj = [set(a) for a in target.adjacency]
        self.t_lab = target.labels(sem.respect_features)
        self.q_lab = query.labels(sem.respect_features)
        self.t_deg = [len(a) for a in target.adjacency]
        self.allowed = allowed
        self.t_anchor = t_anchor
        self.order = _query_order(query, q_anchor)
        pos = {v: i for i, v in enumerate(self.order)}
        self.parent, self.nbrs, self.non_nbrs = [], [], []
        for i, v in enumerate(self.order):
            earlier = [w for w in query.adjacency[v] if pos[w] < i]
            self.parent.append(min(earlier, key=pos.__getitem__) if earlier else None)
            self.nbrs.append(earlier)
            adj = set(query.adjacency[v])
            self.non_nbrs.append([w for w in self.order[:i] if w not in adj])
        self.q_deg = [query.degree(v) for v in range(query.n)]
        self.timeout = timeout
        self.deadline = None if timeout is None else time.monotonic() + timeout
        self.steps = 0
        self.found = 0

    def _candidates(self, i, image):
        v = self.order[i]
        if i == 0 and self.t_anchor is not None:
            pool = (self.t_anchor,)
        elif self.parent[i] is not None:
            pool = sorted(self.t_adj[image[self.parent[i]]])
        else:
            pool = range(self.target.n)
        used = image.values()
        for c in pool:
            if self.allowed is not None and c not in self.allowed:
                continue
            if self.t_lab[c] != self.q_lab[v] or self.t_deg[c] < self.q_deg[v]:
                continue
            if c in used:
                continue
            adj = self.t_adj[c]
            if any(image[w] not in adj for w in self.nbrs[i]):
                continue
            if self.induced and any(image[w] in adj for w in self.non_nbrs[i]):
                continue
            yield c

    def mappings(self) -> Iterator[dict]:
        """Yield every injective mapping query node -> target node."""
        if self.query.n > self.target.n:
            return
        image = {}
        yield from self._extend(0, image)

    def _extend(self, i, image):
        if i == len(self.order):
            yield dict(image)
            return
        self.steps += 1
        if self.deadline is not None and self.steps % 512 == 0 and time.monotonic() > self.deadline:
            raise OracleTimeout(self.found, self.timeout)
        v = self.order[i]
        for c in self._candidates(i, image):
            image[v] = c
            yield from self._extend(i + 1, image)
            del image[v]


def _image_key(mapping, query: Graph, mode: str):
    nodes = frozenset(mapping.values())
    if mode == INDUCED:
        return nodes
    edges = frozenset(frozenset((mapping[u], mapping[v])) for u, v in query.edges)
    return nodes, edges


def find_embedding(target: Graph, query: Graph, sem: MatchSemantics = DEFAULT_SEMANTICS,
                   q_anchor=None, t_anchor=None, allowed=None, timeout=None):
    """First mapping of ``query`` into ``target`` under ``sem``, or ``None``."""
    m = _Matcher(target, query, sem, q_anchor, t_anchor, allowed, timeout)
    return next(m.mappings(), None)


def vf2_count(target: Graph, query: Graph, sem: MatchSemantics = DEFAULT_SEMANTICS,
              timeout: float | None = DEFAULT_TIMEOUT) -> int:
    """Number of distinct occurrences of ``query`` in ``target``.

    Occurrences are image sets (node sets for induced matching, node plus
    edge sets for monomorphism), so query automorphisms never inflate the
    count. Raises :class:`OracleTimeout` carrying the partial count when the
    budget is exceeded.
    """
    if query.n < 1:
        raise ValueError("query must have at least one node")
    m = _Matcher(target, query, sem, timeout=timeout)
    seen = set()
    for mapping in m.mappings():
        key = _image_key(mapping, query, sem.mode)
        if key not in seen:
            seen.add(key)
            m.found = len(seen)
    return len(seen)


def anchored_contains(target: Neighborhood, query: Neighborhood,
                      sem: MatchSemantics = DEFAULT_SEMANTICS,
                      timeout: float | None = DEFAULT_TIMEOUT) -> bool:
    """True iff ``query`` occurs in ``target`` with anchor mapped onto anchor."""
    return find_embedding(target.graph, query.graph, sem, query.anchor, target.anchor,
                          timeout=timeout) is not None


BRUTE_FORCE_LIMIT = 10


def brute_force_count(target: Graph, query: Graph, sem: MatchSemantics = DEFAULT_SEMANTICS) -> int:
    """Exhaustive reference count over node subsets and bijections."""
    if target.n > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"brute force limited to {BRUTE_FORCE_LIMIT} target nodes, got {target.n}")
    if query.n > target.n:
        return 0
    t_lab = target.labels(sem.respect_features)
    q_lab = query.labels(sem.respect_features)
    q_pairs = list(itertools.combinations(range(query.n), 2))
    total = 0
    for subset in itertools.combinations(range(target.n), query.n):
        images = set()
        for perm in itertools.permutations(subset):
            if any(t_lab[perm[i]] != q_lab[i] for i in range(query.n)):
                continue
            ok = True
            for a, b in q_pairs:
                qe, te = query.has_edge(a, b), target.has_edge(perm[a], perm[b])
                if (qe and not te) or (sem.mode == INDUCED and te and not qe):
                    ok = False
                    break
            if ok:
                images.add(frozenset(frozenset((perm[u], perm[v])) for u, v in query.edges))
                if sem.mode == INDUCED:
                    break
        total += len(images)
    return total


def _graphs_of(corpus):
    return getattr(corpus, "graphs", corpus)


def _ball(g: Graph, center: int, k: int) -> set:
    ball, frontier = {center}, [center]
    for _ in range(k):
        nxt = []
        for u in frontier:
            for w in g.adjacency[u]:
                if w not in ball:
                    ball.add(w)
                    nxt.append(w)
        frontier = nxt
    return ball


def anchor_radius(query: Neighborhood) -> int:
    return max(query.graph.distances_from(query.anchor).values())


def exact_support(corpus, query: Neighborhood, k: int | None = None,
                  sem: MatchSemantics = DEFAULT_SEMANTICS,
                  timeout: float | None = DEFAULT_TIMEOUT) -> int:
    """Count (graph, node) pairs whose k-hop neighborhood contains ``query``
    with the query anchor mapped to that node.

    ``k`` defaults to the query's anchor eccentricity, the smallest radius at
    which every occurrence fits.
    """
    radius = anchor_radius(query)
    if k is None:
        k = radius
    if k < radius:
        raise ValueError(f"k={k} is smaller than the query radius {radius}")
    deadline = None if timeout is None else time.monotonic() + timeout
    count = 0
    for g in _graphs_of(corpus):
        for v in range(g.n):
            remaining = None
            if deadline is not None:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise OracleTimeout(count, timeout)
            try:
                hit = find_embedding(g, query.graph, sem, query.anchor, v,
                                     allowed=_ball(g, v, k), timeout=remaining)
            except OracleTimeout:
                raise OracleTimeout(count, timeout) from None
            count += hit is not None
    return count
