"""Synthetic grid-like corpora: random trees, meshed grids, star hierarchies
and triangle-rich graphs, optionally carrying bus types and voltage levels."""

from __future__ import annotations

import numpy as np

from .graph import Graph, NodeFeatures, NodeType, build_graph
from .ingest import GraphCorpus

VOLTAGE_LEVELS = (13.8, 69.0, 138.0)


def random_tree(n, rng):
    return [(int(rng.integers(i)), i) for i in range(1, n)]


def grid_with_chords(rows, cols, chords, rng):
    idx = lambda r, c: r * cols + c  # noqa: E731
    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((idx(r, c), idx(r, c + 1)))
            if r + 1 < rows:
                edges.append((idx(r, c), idx(r + 1, c)))
    for _ in range(chords):
        r, c = int(rng.integers(rows - 1)), int(rng.integers(cols - 1))
        if rng.random() < 0.5:
            edges.append((idx(r, c), idx(r + 1, c + 1)))
        else:
            edges.append((idx(r, c + 1), idx(r + 1, c)))
    return rows * cols, edges


def star_hierarchy(depth, rng, max_children=4):
    edges, level, n = [], [0], 1
    for _ in range(depth):
        nxt = []
        for parent in level:
            for _ in range(int(rng.integers(1, max_children + 1))):
                edges.append((parent, n))
                nxt.append(n)
                n += 1
        level = nxt
    return n, edges


def triangle_cluster(n_triangles, fringe, rng):
    """Chain of triangles sharing hub nodes plus a sparse tree fringe."""
    edges, n = [], 1
    for _ in range(n_triangles):
        a = int(rng.integers(n))
        b, c = n, n + 1
        edges += [(a, b), (a, c), (b, c)]
        n += 2
    for _ in range(fringe):
        edges.append((int(rng.integers(n)), n))
        n += 1
    return n, edges


def assign_features(n, edges, rng):
    """REF at node 0, ~15% PV, the rest PQ; voltage drops a level with BFS depth."""
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    depth = {0: 0}
    queue = [0]
    for u in queue:
        for w in adj[u]:
            if w not in depth:
                depth[w] = depth[u] + 1
                queue.append(w)
    top = int(rng.integers(1, len(VOLTAGE_LEVELS)))
    span = max(max(depth.values()), 1)
    feats = []
    for v in range(n):
        t = NodeType.REF if v == 0 else (NodeType.PV if rng.random() < 0.15 else NodeType.PQ)
        level = top - min(top, int(2 * depth.get(v, 0) / span))
        feats.append(NodeFeatures(t, VOLTAGE_LEVELS[level]))
    return feats


def make_graph(kind, name, rng, featured=True) -> Graph:
    if kind == "tree":
        n = int(rng.integers(15, 50))
        edges = random_tree(n, rng)
    elif kind == "grid":
        rows, cols = int(rng.integers(3, 7)), int(rng.integers(3, 8))
        n, edges = grid_with_chords(rows, cols, int(rng.integers(1, 5)), rng)
    elif kind == "star":
        n, edges = star_hierarchy(int(rng.integers(2, 4)), rng)
    elif kind == "triangles":
        n, edges = triangle_cluster(int(rng.integers(4, 10)), int(rng.integers(2, 6)), rng)
    else:
        raise ValueError(f"unknown graph kind {kind!r}")
    feats = assign_features(n, edges, rng) if featured else [None] * n
    return build_graph(name, feats, edges)


def synthetic_corpus(n_graphs=200, kinds=("tree", "grid", "star"), seed=0,
                     featured_fraction=0.5) -> GraphCorpus:
    """Corpus cycling through ``kinds``; a ``featured_fraction`` of graphs carry
    bus types and voltages, the rest are topology-only."""
    rng = np.random.default_rng([int(seed), 101])
    graphs = []
    for i in range(n_graphs):
        kind = kinds[i % len(kinds)]
        featured = rng.random() < featured_fraction
        graphs.append(make_graph(kind, f"{kind}{i}", rng, featured))
    return GraphCorpus.from_graphs(graphs, bucket_width_kv=1.0 if featured_fraction else None)
