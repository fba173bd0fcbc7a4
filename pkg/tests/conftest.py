import itertools

import networkx as nx
import pytest
from hypothesis import strategies as st

from gridmotif.graph import Neighborhood, NodeFeatures, NodeType, build_graph

PQ = NodeFeatures(NodeType.PQ, 138.0)
PV = NodeFeatures(NodeType.PV, 138.0)


def graph(n, edges, feats=None, name="g"):
    return build_graph(name, feats or [None] * n, edges)


def path(n, feats=None):
    return graph(n, [(i, i + 1) for i in range(n - 1)], feats, "path")


def cycle(n):
    return graph(n, [(i, (i + 1) % n) for i in range(n)], name="cycle")


def complete(n):
    return graph(n, list(itertools.combinations(range(n), 2)), name="K")


def star(leaves):
    return graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)], name="star")


TRIANGLE = complete(3)


def nb(g, anchor=0):
    return Neighborhood(g, anchor)


def from_nx(g, name="nx"):
    g = nx.convert_node_labels_to_integers(g)
    return graph(g.number_of_nodes(), list(g.edges()), name=name)


def atlas(max_nodes, connected=None):
    out = []
    for g in nx.graph_atlas_g():
        if g.number_of_nodes() == 0 or g.number_of_nodes() > max_nodes:
            continue
        if connected is not None and nx.is_connected(g) != connected:
            continue
        out.append(from_nx(g))
    return out


@st.composite
def small_graphs(draw, max_nodes=7, min_nodes=1, featured=True):
    n = draw(st.integers(min_nodes, max_nodes))
    pairs = list(itertools.combinations(range(n), 2))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    feats = None
    if featured:
        feats = [draw(st.sampled_from([PQ, PV, NodeFeatures()])) for _ in range(n)]
    return graph(n, [p for p, keep in zip(pairs, mask) if keep], feats)


@st.composite
def connected_neighborhoods(draw, max_nodes=7, featured=True):
    g = draw(small_graphs(max_nodes, featured=featured))
    comps = g.components()
    comp = max(comps, key=len)
    from gridmotif.graph import anchored_subgraph
    anchor = draw(st.sampled_from(comp))
    return anchored_subgraph(g, comp, anchor)


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(1234)


# -- acceptance reporting -------------------------------------------------------------

ACCEPTANCE = {}


def record(criterion, ok, detail):
    line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
