"""Greedy motif growth guided by embedding-space frequency estimates."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .encoder import EncoderParams, encode, encode_many
from .errors import EmptyGraph
from .graph import Graph, Neighborhood, anchored_subgraph, canonical_key, is_isomorphic
from .ingest import GraphCorpus, graph_to_dict
from .sampling import _ordered_map, stream
from .store import RefStore, estimate_frequency

log = logging.getLogger(__name__)

DEFAULT_SIZES = tuple(range(3, 11))
MAX_SIZE = 30


@dataclass(frozen=True)
class GrowthStep:
    neighborhood: Neighborhood
    embedding: np.ndarray
    frequency: int


@dataclass(frozen=True)
class GrowthPath:
    steps: tuple[GrowthStep, ...]
    graph_index: int
    seed_node: int
    trial: int = 0

    def frequencies(self) -> list[int]:
        return [s.frequency for s in self.steps]


@dataclass
class MotifResult:
    motif: Graph
    anchor: int
    node_count: int
    estimated_frequency: int
    support_trials: int
    rank: int = 0
    exact_count: int | None = None
    key: str = ""
    provenance: dict = field(default_factory=dict)

    @property
    def neighborhood(self) -> Neighborhood:
        return Neighborhood(self.motif, self.anchor)


def grow_step(target: Graph, current: Neighborhood) -> list[Neighborhood]:
    """One candidate per frontier node of ``current`` inside ``target``."""
    name, ids = current.source
    anchor = ids[current.anchor]
    inside = set(ids)
    frontier = sorted({w for v in ids for w in target.adjacency[v]} - inside)
    return [anchored_subgraph(target, list(ids) + [w], anchor) for w in frontier]


def _pick(cands, freqs, current_ids):
    best = max(freqs)
    tied = [i for i, f in enumerate(freqs) if f == best]
    if len(tied) == 1:
        return tied[0]
    inside = set(current_ids)

    def added(i):
        return min(set(cands[i].source[1]) - inside)

    return min(tied, key=lambda i: (canonical_key(cands[i].graph), added(i)))


def run_trial(corpus: GraphCorpus, store: RefStore, params: EncoderParams, target_size: int,
              rng, trial: int = 0) -> GrowthPath:
    if target_size < 1:
        raise ValueError("target_size must be >= 1")
    gi = corpus.pick_graph(rng)
    g = corpus.graphs[gi]
    if g.n == 0:
        raise EmptyGraph(f"graph {g.name!r} has no nodes")
    seed = int(rng.integers(g.n))
    current = anchored_subgraph(g, [seed], seed)
    z = encode(params, current)
    steps = [GrowthStep(current, z, estimate_frequency(store, z))]
    while current.n < target_size:
        cands = grow_step(g, current)
        if not cands:
            break
        zs = encode_many(params, cands)
        freqs = [estimate_frequency(store, zz) for zz in zs]
        i = _pick(cands, freqs, current.source[1])
        current = cands[i]
        steps.append(GrowthStep(current, zs[i], freqs[i]))
    return GrowthPath(tuple(steps), gi, seed, trial)


def run_trials(corpus, store, params, target_size, trials, seed, workers=1) -> list[GrowthPath]:
    def one(i):
        return run_trial(corpus, store, params, target_size, stream(seed, 3, i), trial=i)

    return _ordered_map(one, range(trials), workers)


def merge_paths(paths, size, store, params, respect_features=True) -> list[MotifResult]:
    """Deduplicate the size-``size`` prefixes of ``paths`` up to isomorphism
    and rank by estimated frequency (support count breaks ties)."""
    classes: dict[str, list[MotifResult]] = {}
    for path in paths:
        if len(path.steps) < size:
            continue
        nb = path.steps[size - 1].neighborhood
        key = canonical_key(nb.graph, respect_features)
        for res in classes.setdefault(key, []):
            if is_isomorphic(res.motif, nb.graph, respect_features):
                res.support_trials += 1
                break
        else:
            classes[key].append(MotifResult(
                nb.graph, nb.anchor, nb.graph.n, 0, 1, key=key,
                provenance={"graph": nb.source[0], "nodes": list(nb.source[1]),
                            "trial": path.trial}))
    results = [r for group in classes.values() for r in group]
    for r in results:
        r.estimated_frequency = estimate_frequency(store, encode(params, r.neighborhood))
    results.sort(key=lambda r: (-r.estimated_frequency, -r.support_trials, r.key,
                                r.provenance["trial"]))
    for i, r in enumerate(results, start=1):
        r.rank = i
    return results


def mine_motifs(corpus: GraphCorpus, store: RefStore, params: EncoderParams, node_sizes=DEFAULT_SIZES,
                trials_per_size: int = 1000, seed: int = 0, workers: int = 1,
                respect_features: bool = True, return_paths: bool = False):
    """Ranked motifs for every requested size.

    One set of ``trials_per_size`` trials is grown to the largest requested
    size and each smaller size reads its graphs off the same paths.
    """
    sizes = sorted(set(int(s) for s in node_sizes))
    if trials_per_size < 1:
        raise ValueError("trials_per_size must be >= 1")
    if not sizes or sizes[0] < 1 or sizes[-1] > MAX_SIZE:
        raise ValueError(f"node sizes must lie in 1..{MAX_SIZE}")
    store.check_encoder(params)
    paths = run_trials(corpus, store, params, sizes[-1], trials_per_size, seed, workers)
    out = {k: merge_paths(paths, k, store, params, respect_features) for k in sizes}
    return (out, paths) if return_paths else out


def non_increasing_fraction(paths) -> float:
    """Share of growth steps whose estimated frequency does not increase."""
    ok = total = 0
    for p in paths:
        f = p.frequencies()
        for a, b in zip(f, f[1:]):
            total += 1
            ok += b <= a
    return ok / total if total else 1.0


def results_to_dict(results, store: RefStore | None = None, **extra) -> dict:
    sizes = {}
    for k, lst in sorted(results.items()):
        sizes[str(k)] = [{
            "rank": r.rank, "node_count": r.node_count,
            "estimated_frequency": r.estimated_frequency, "support_trials": r.support_trials,
            "exact_count": r.exact_count, "key": r.key, "anchor": r.anchor,
            "edge_count": r.motif.m, "motif": graph_to_dict(r.motif), "provenance": r.provenance,
        } for r in lst]
    out = {"sizes": sizes}
    if store is not None:
        out.update(threshold=store.threshold, fingerprint=store.fingerprint)
    out.update(extra)
    return out


def write_results(results, path, store=None, **extra):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(results_to_dict(results, store, **extra), fh, indent=1, sort_keys=True)


def read_results(path) -> dict:
    from .ingest import graph_from_dict

    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    out = {}
    for k, lst in data["sizes"].items():
        out[int(k)] = [MotifResult(graph_from_dict(d["motif"]), d["anchor"], d["node_count"],
                                   d["estimated_frequency"], d["support_trials"], d["rank"],
                                   d.get("exact_count"), d["key"], d.get("provenance", {}))
                       for d in lst]
    return out
