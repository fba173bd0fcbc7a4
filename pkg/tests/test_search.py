import numpy as np
import pytest

from gridmotif.encoder import FeatureSpec, init_params
from gridmotif.graph import anchored_subgraph, is_isomorphic
from gridmotif.ingest import GraphCorpus
from gridmotif.sampling import decompose
from gridmotif.search import (GrowthPath, GrowthStep, grow_step, merge_paths, mine_motifs,
                              non_increasing_fraction, read_results, run_trial, write_results)
from gridmotif.store import build_reference_store
from gridmotif.synth import synthetic_corpus

from conftest import TRIANGLE, cycle, path


@pytest.fixture(scope="module")
def setup():
    corpus = synthetic_corpus(8, seed=2, featured_fraction=0.0)
    params = init_params(FeatureSpec(corpus.voltage_buckets), 8, 8, 2).to_float32()
    store = build_reference_store(params, decompose(corpus, 100, (3, 8), seed=1), 0.5)
    return corpus, params, store


def test_grow_step_examples():
    one = anchored_subgraph(TRIANGLE, [0], 0)
    cands = grow_step(TRIANGLE, one)
    assert len(cands) == 2 and all(c.graph.n == 2 and c.graph.m == 1 and c.anchor == 0
                                   for c in cands)
    p3 = path(3)
    cands = grow_step(p3, anchored_subgraph(p3, [0, 1], 0))
    assert len(cands) == 1 and cands[0].graph.edges == p3.edges
    assert grow_step(p3, anchored_subgraph(p3, [0, 1, 2], 1)) == []


def test_run_trial_examples(setup):
    corpus, params, store = setup
    path1 = run_trial(corpus, store, params, 1, np.random.default_rng(0))
    assert len(path1.steps) == 1 and path1.steps[0].neighborhood.graph.n == 1
    square = GraphCorpus.from_graphs([cycle(4)])
    p = run_trial(square, store, params, 3, np.random.default_rng(1))
    shapes = [(s.neighborhood.graph.n, s.neighborhood.graph.m) for s in p.steps]
    assert shapes == [(1, 0), (2, 1), (3, 2)]


def test_growth_path_invariants(setup):
    corpus, params, store = setup
    for seed in range(10):
        p = run_trial(corpus, store, params, 6, np.random.default_rng(seed))
        g = corpus.graphs[p.graph_index]
        prev = None
        for step in p.steps:
            nb_ = step.neighborhood
            assert nb_.graph.is_connected()
            ids = nb_.source[1]
            assert ids[nb_.anchor] == p.seed_node
            assert nb_.graph == anchored_subgraph(g, ids, p.seed_node).graph
            if prev is not None:
                assert set(prev) < set(ids) and len(ids) == len(prev) + 1
            prev = ids


def test_trials_deterministic_across_workers(setup):
    corpus, params, store = setup
    a = mine_motifs(corpus, store, params, [3, 4], 30, seed=4, workers=1)
    b = mine_motifs(corpus, store, params, [3, 4], 30, seed=4, workers=3)
    for k in (3, 4):
        assert [(r.key, r.estimated_frequency, r.support_trials) for r in a[k]] == \
            [(r.key, r.estimated_frequency, r.support_trials) for r in b[k]]


def test_paths_corpus_gives_three_path(setup):
    _, params, _ = setup
    corpus = GraphCorpus.from_graphs([path(6), path(9)])
    store = build_reference_store(params, decompose(corpus, 50, (3, 6), seed=0), 0.5)
    res = mine_motifs(corpus, store, params, [3], 20, seed=0)
    assert is_isomorphic(res[3][0].motif, path(3))
    assert len(res[3]) == 1


def test_results_pairwise_non_isomorphic_and_ranked(setup):
    corpus, params, store = setup
    res = mine_motifs(corpus, store, params, range(3, 7), 60, seed=9)
    assert sorted(res) == [3, 4, 5, 6]
    for k, lst in res.items():
        for i in range(len(lst)):
            assert lst[i].rank == i + 1 and lst[i].node_count == k
            for j in range(i + 1, len(lst)):
                assert not is_isomorphic(lst[i].motif, lst[j].motif)
        est = [r.estimated_frequency for r in lst]
        assert est == sorted(est, reverse=True)
        assert sum(r.support_trials for r in lst) <= 60


def test_dedup_merges_isomorphs(setup):
    _, params, store = setup
    g = path(5)
    a = anchored_subgraph(g, [0, 1, 2], 0)
    b = anchored_subgraph(g, [2, 3, 4], 4)
    paths = [GrowthPath((GrowthStep(None, None, 0), GrowthStep(None, None, 0), GrowthStep(nb, None, 0)),
                        0, 0, trial=i) for i, nb in enumerate((a, b))]
    merged = merge_paths(paths, 3, store, params)
    assert len(merged) == 1 and merged[0].support_trials == 2


def test_non_increasing_fraction():
    def fake(freqs):
        return GrowthPath(tuple(GrowthStep(None, None, f) for f in freqs), 0, 0)
    assert non_increasing_fraction([fake([5, 4, 4, 6])]) == pytest.approx(2 / 3)
    assert non_increasing_fraction([fake([3])]) == 1.0


def test_invalid_sizes(setup):
    corpus, params, store = setup
    with pytest.raises(ValueError):
        mine_motifs(corpus, store, params, [31], 5)
    with pytest.raises(ValueError):
        mine_motifs(corpus, store, params, [3], 0)


def test_results_round_trip(tmp_path, setup):
    corpus, params, store = setup
    res = mine_motifs(corpus, store, params, [3, 4], 10, seed=1)
    write_results(res, tmp_path / "m.json", store)
    back = read_results(tmp_path / "m.json")
    for k in res:
        assert [(r.key, r.motif, r.rank) for r in back[k]] == [(r.key, r.motif, r.rank) for r in res[k]]
