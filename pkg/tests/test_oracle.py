import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridmotif.errors import OracleTimeout, TooLarge
from gridmotif.graph import NodeFeatures, NodeType, anchored_subgraph
from gridmotif.ingest import GraphCorpus
from gridmotif.oracle import (INDUCED, MONOMORPHISM, MatchSemantics, anchored_contains,
                              brute_force_count, exact_support, vf2_count)

from conftest import PQ, PV, TRIANGLE, complete, cycle, graph, nb, path, small_graphs, star

IND = MatchSemantics(INDUCED)
MONO = MatchSemantics(MONOMORPHISM)
TOPO = MatchSemantics(INDUCED, respect_features=False)


@pytest.mark.parametrize("target, query, expected", [
    (complete(4), TRIANGLE, 4),
    (TRIANGLE, path(3), 0),
    (star(3), path(3), 3),
    (TRIANGLE, path(2), 3),
])
def test_vf2_count_examples(target, query, expected):
    assert vf2_count(target, query, IND) == expected
    assert brute_force_count(target, query, IND) == expected


def test_monomorphism_counts_node_and_edge_images():
    # a 3-path sits in a triangle three ways, each with a different edge set
    assert vf2_count(TRIANGLE, path(3), MONO) == 3
    assert vf2_count(cycle(4), path(4), MONO) == 4
    assert vf2_count(cycle(4), path(4), IND) == 0


def test_automorphisms_do_not_inflate():
    for g in (TRIANGLE, cycle(5), complete(4), star(4)):
        assert vf2_count(g, g, IND) == 1


def test_features_constrain_matches():
    target = path(3, [PQ, PV, PQ])
    assert vf2_count(target, graph(1, [], [PV]), IND) == 1
    assert vf2_count(target, graph(1, [], [PQ]), IND) == 2
    assert vf2_count(target, path(2, [PQ, PQ]), IND) == 0
    assert vf2_count(target, path(2, [PQ, PQ]), TOPO) == 2


def test_brute_force_bounds():
    assert brute_force_count(path(2), path(3), IND) == 0
    assert brute_force_count(path(6), graph(1, []), TOPO) == 6
    with pytest.raises(TooLarge):
        brute_force_count(path(11), path(2), IND)


def test_anchored_contains_examples():
    tree = nb(path(4), 1)
    assert anchored_contains(tree, nb(graph(1, [])), TOPO)
    assert anchored_contains(tree, tree)
    assert not anchored_contains(tree, nb(TRIANGLE))
    # end of a 3-path cannot host the anchored center of a 3-path
    assert anchored_contains(nb(path(3), 1), nb(path(3), 1))
    assert not anchored_contains(nb(path(3), 0), nb(path(3), 1))


def test_timeout_carries_partial_count():
    big = complete(12)
    with pytest.raises(OracleTimeout) as info:
        vf2_count(big, complete(6), MONO, timeout=1e-6)
    assert info.value.partial >= 0 and info.value.code == "Timeout"


def test_exact_support_examples():
    corpus = GraphCorpus.from_graphs([path(3), TRIANGLE])
    assert exact_support(corpus, nb(graph(1, [])), sem=TOPO) == 6
    one = GraphCorpus.from_graphs([path(3)])
    assert exact_support(one, nb(path(2)), sem=TOPO) == 3
    ref = graph(1, [], [NodeFeatures(NodeType.REF, 500.0)])
    assert exact_support(corpus, nb(ref)) == 0


@given(small_graphs(max_nodes=6), small_graphs(max_nodes=4, featured=False), st.booleans())
@settings(max_examples=60, deadline=None)
def test_vf2_matches_brute_force_random(target, query, induced):
    sem = MatchSemantics(INDUCED if induced else MONOMORPHISM, respect_features=False)
    assert vf2_count(target, query, sem) == brute_force_count(target, query, sem)


@given(small_graphs(max_nodes=6), small_graphs(max_nodes=3), st.randoms(use_true_random=False))
@settings(max_examples=40, deadline=None)
def test_counts_invariant_under_relabeling(target, query, rnd):
    pt, pq = list(range(target.n)), list(range(query.n))
    rnd.shuffle(pt)
    rnd.shuffle(pq)
    for sem in (IND, MONO):
        assert vf2_count(target, query, sem) == vf2_count(target.relabel(pt), query.relabel(pq), sem)


@given(small_graphs(max_nodes=6))
@settings(max_examples=40, deadline=None)
def test_self_count_is_one(g):
    assert vf2_count(g, g, IND) == 1


@given(small_graphs(max_nodes=6, featured=False), st.data())
@settings(max_examples=40, deadline=None)
def test_anchored_contains_implies_occurrence(g, data):
    comp = max(g.components(), key=len)
    anchor = data.draw(st.sampled_from(comp))
    target = anchored_subgraph(g, comp, anchor)
    keep = data.draw(st.integers(1, len(comp)))
    from gridmotif.sampling import bfs_sample
    nodes = bfs_sample(target.graph, target.anchor, keep, np.random.default_rng(keep))
    query = anchored_subgraph(target.graph, nodes, target.anchor)
    assert anchored_contains(target, query)
    assert vf2_count(target.graph, query.graph, IND) >= 1
