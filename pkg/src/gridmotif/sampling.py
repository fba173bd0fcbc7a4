"""BFS neighborhood decomposition and labelled training-pair generation."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import RetryExhausted, TooSmall
from .graph import Graph, Neighborhood, anchored_subgraph, build_graph
from .ingest import GraphCorpus, graph_from_dict, graph_to_dict
from .oracle import DEFAULT_SEMANTICS, MatchSemantics, anchored_contains

log = logging.getLogger(__name__)

RETRY_CAP = 100


@dataclass(frozen=True)
class TrainingPair:
    query: Neighborhood
    target: Neighborhood
    label: int


@dataclass(frozen=True)
class Dataset:
    pairs: tuple[TrainingPair, ...]
    train: tuple[int, ...]
    validation: tuple[int, ...]
    seed: int

    @property
    def positives(self) -> int:
        return sum(p.label for p in self.pairs)

    @property
    def negatives(self) -> int:
        return len(self.pairs) - self.positives

    def subset(self, which):
        idx = self.train if which == "train" else self.validation
        return [self.pairs[i] for i in idx]


def stream(seed, *index):
    """Independent generator for ``(seed, *index)``; stable across schedules."""
    return np.random.default_rng([int(seed), *map(int, index)])


def bfs_sample(g: Graph, anchor: int, size: int, rng) -> list[int]:
    """Nodes reached by a BFS from ``anchor`` with shuffled neighbor order,
    stopping at ``size`` nodes or when the component is exhausted."""
    visited = [anchor]
    seen = {anchor}
    head = 0
    while head < len(visited) and len(visited) < size:
        u = visited[head]
        head += 1
        nbrs = [w for w in g.adjacency[u] if w not in seen]
        rng.shuffle(nbrs)
        for w in nbrs:
            if len(visited) >= size:
                break
            seen.add(w)
            visited.append(w)
    return visited


def sample_neighborhood(g: Graph, rng, size_range=(3, 25)) -> Neighborhood:
    lo, hi = size_range
    if not 1 <= lo <= hi:
        raise ValueError(f"invalid size range {size_range}")
    eligible = [v for comp in g.components() if len(comp) >= lo for v in comp]
    if not eligible:
        raise TooSmall(f"{g.name}: no component with at least {lo} nodes")
    anchor = eligible[int(rng.integers(len(eligible)))]
    size = int(rng.integers(lo, hi + 1))
    return anchored_subgraph(g, bfs_sample(g, anchor, size, rng), anchor)


def _draw(corpus: GraphCorpus, size_range, rng) -> Neighborhood:
    last = None
    for _ in range(RETRY_CAP):
        g = corpus.graphs[corpus.pick_graph(rng)]
        try:
            return sample_neighborhood(g, rng, size_range)
        except TooSmall as exc:
            last = exc
    raise TooSmall(f"no neighborhood after {RETRY_CAP} draws: {last}")


def decompose(corpus: GraphCorpus, count: int, size_range=(3, 25), seed: int = 0,
              workers: int = 1) -> list[Neighborhood]:
    """``count`` overlapping BFS neighborhoods, graphs chosen by size weight."""
    if count < 1:
        raise ValueError("count must be >= 1")

    def one(i):
        return _draw(corpus, size_range, stream(seed, 0, i))

    return _ordered_map(one, range(count), workers)


def _ordered_map(fn, items, workers):
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def make_positive_pair(nbhd: Neighborhood, rng, shrink_range=None,
                       sem: MatchSemantics = DEFAULT_SEMANTICS) -> TrainingPair:
    if nbhd.n < 2:
        raise ValueError("positive pairs need a neighborhood with at least 2 nodes")
    lo, hi = shrink_range or (1, nbhd.n)
    hi = min(hi, nbhd.n)
    size = int(rng.integers(lo, hi + 1))
    g = nbhd.graph
    nodes = bfs_sample(g, nbhd.anchor, size, rng)
    query = anchored_subgraph(g, nodes, nbhd.anchor)
    if not anchored_contains(nbhd, query, sem):
        raise AssertionError("BFS sub-sample is not contained in its source")
    return TrainingPair(query, nbhd, 1)


def perturb_edges(nbhd: Neighborhood, rng) -> Neighborhood | None:
    """Add 1-3 absent edges, or rewire one edge when the graph is complete."""
    g = nbhd.graph
    absent = [(u, v) for u in range(g.n) for v in range(u + 1, g.n) if not g.has_edge(u, v)]
    edges = list(g.edges)
    if absent:
        k = min(int(rng.integers(1, 4)), len(absent))
        picks = rng.choice(len(absent), size=k, replace=False)
        edges += [absent[i] for i in sorted(picks)]
    elif g.m >= 2:
        # complete graph: rewiring is impossible without a missing edge, so drop one
        edges.pop(int(rng.integers(len(edges))))
    else:
        return None
    new = build_graph(g.name, g.features, edges)
    if not new.is_connected():
        return None
    return Neighborhood(new, nbhd.anchor, nbhd.source)


def make_negative_pair(neighborhoods, rng, sem: MatchSemantics = DEFAULT_SEMANTICS,
                       retry_cap: int = RETRY_CAP) -> TrainingPair:
    """Negative pair: half random pool pairs, half edge-perturbed positives."""
    if len(neighborhoods) < 2:
        raise ValueError("need at least 2 neighborhoods")
    hard = rng.random() < 0.5
    for _ in range(retry_cap):
        if hard:
            src = neighborhoods[int(rng.integers(len(neighborhoods)))]
            if src.n < 2:
                continue
            pos = make_positive_pair(src, rng, sem=sem)
            if pos.query.n < 2:
                continue
            query = perturb_edges(pos.query, rng)
            if query is None:
                continue
            target = pos.target
        else:
            i, j = rng.choice(len(neighborhoods), size=2, replace=False)
            src, target = neighborhoods[int(i)], neighborhoods[int(j)]
            # shrink the query like a positive so negatives span the same sizes
            size = int(rng.integers(1, src.n + 1))
            query = anchored_subgraph(src.graph, bfs_sample(src.graph, src.anchor, size, rng),
                                      src.anchor)
        if not anchored_contains(target, query, sem):
            return TrainingPair(query, target, 0)
    raise RetryExhausted(f"no negative pair after {retry_cap} draws")


def build_dataset(corpus: GraphCorpus, n_pairs: int, size_range=(3, 25), seed: int = 0,
                  pool_size: int | None = None, neighborhoods=None, workers: int = 1,
                  sem: MatchSemantics = DEFAULT_SEMANTICS) -> Dataset:
    """Balanced positive/negative pairs with a 90/10 train/validation split.

    Pair ``i`` draws from its own stream ``(seed, 1, i)``, so output does not
    depend on ``workers``.
    """
    if n_pairs < 2:
        raise ValueError("n_pairs must be >= 2")
    if neighborhoods is None:
        neighborhoods = decompose(corpus, pool_size or max(2, n_pairs // 2), size_range, seed,
                                  workers)
    pool = [nb for nb in neighborhoods if nb.n >= 2]
    if len(pool) < 2:
        raise TooSmall("need at least 2 neighborhoods with 2+ nodes")
    n_pos = n_pairs // 2

    def one(i):
        rng = stream(seed, 1, i)
        if i < n_pos:
            return make_positive_pair(pool[int(rng.integers(len(pool)))], rng, sem=sem)
        return make_negative_pair(pool, rng, sem)

    pairs = _ordered_map(one, range(n_pairs), workers)
    order = stream(seed, 2).permutation(n_pairs)
    n_val = max(1, n_pairs // 10)
    val = tuple(sorted(int(i) for i in order[:n_val]))
    train = tuple(sorted(int(i) for i in order[n_val:]))
    return Dataset(tuple(pairs), train, val, seed)


# -- serialization ------------------------------------------------------------------

def neighborhood_to_dict(nb: Neighborhood) -> dict:
    d = {"graph": graph_to_dict(nb.graph), "anchor": nb.anchor}
    if nb.source is not None:
        d["source"] = {"graph": nb.source[0], "ids": list(nb.source[1])}
    return d


def neighborhood_from_dict(d) -> Neighborhood:
    src = d.get("source")
    source = None if src is None else (src["graph"], tuple(src["ids"]))
    return Neighborhood(graph_from_dict(d["graph"]), int(d["anchor"]), source)


def write_neighborhoods(neighborhoods, path):
    with open(path, "w", encoding="utf-8") as fh:
        for nb in neighborhoods:
            fh.write(json.dumps(neighborhood_to_dict(nb), sort_keys=True) + "\n")


def read_neighborhoods(path) -> list[Neighborhood]:
    with open(path, encoding="utf-8") as fh:
        return [neighborhood_from_dict(json.loads(line)) for line in fh if line.strip()]


def write_dataset(ds: Dataset, path):
    """One JSON record per pair; the split is recorded per record."""
    val = set(ds.validation)
    with open(path, "w", encoding="utf-8") as fh:
        for i, p in enumerate(ds.pairs):
            rec = {"index": i, "label": p.label, "split": "validation" if i in val else "train",
                   "seed": ds.seed, "query": neighborhood_to_dict(p.query),
                   "target": neighborhood_to_dict(p.target)}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_dataset(path) -> Dataset:
    pairs, train, val, seed = [], [], [], 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            i = len(pairs)
            pairs.append(TrainingPair(neighborhood_from_dict(rec["query"]),
                                      neighborhood_from_dict(rec["target"]), int(rec["label"])))
            (val if rec["split"] == "validation" else train).append(i)
            seed = rec.get("seed", seed)
    return Dataset(tuple(pairs), tuple(train), tuple(val), seed)
