import csv
import itertools

import numpy as np
import pytest

from gridmotif.errors import DegenerateVariance, EmptyReference
from gridmotif.ingest import GraphCorpus
from gridmotif.oracle import exact_support
from gridmotif.report import (kendall_tau, norm_grid, render_figures, report_norm_tables,
                              report_pca, report_validation, top_components)
from gridmotif.search import MotifResult
from gridmotif.store import RefMeta, RefStore

from conftest import TRIANGLE, graph, path, star


def store_of(vectors, sizes):
    v = np.asarray(vectors, dtype=np.float32)
    meta = tuple(RefMeta(f"g{i % 2}", i, n, e) for i, (n, e) in enumerate(sizes))
    return RefStore(v, meta, 0.1, "f", v.shape[1])


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_norm_tables(tmp_path):
    s = store_of([[3, 4], [1, 0], [6, 8], [0, 2]], [(3, 2), (2, 1), (5, 6), (3, 3)])
    stats = report_norm_tables(s, tmp_path)
    rows = read(tmp_path / "references.csv")
    assert len(rows) - 1 == len(s)
    assert float(rows[1][2]) == 5.0
    grid = read(tmp_path / "norm_grid.csv")
    assert grid[0] == ["node_count", "e1", "e2", "e3", "e4", "e5", "e6"]
    by_n = {r[0]: r[1:] for r in grid[1:]}
    assert by_n["2"][0] == "1.0" and by_n["2"][1] == ""   # empty cell, not zero
    assert by_n["3"][1] == "5.0" and by_n["3"][2] == "2.0"
    assert stats["references"] == 4 and stats["spearman_nodes_norm"] is not None
    nodes = read(tmp_path / "norms_by_nodes.csv")
    assert nodes[1] == ["2", "1", "1.0"] and nodes[2] == ["3", "2", "3.5"]
    with pytest.raises(EmptyReference):
        report_norm_tables(store_of(np.zeros((0, 2)), []), tmp_path)


def test_norm_grid_spans_edge_range():
    nodes, edges, grid = norm_grid([(3, 2, 1.0), (4, 5, 2.0)])
    assert nodes == [3, 4] and edges == [2, 3, 4, 5]
    assert grid[0] == [1.0, None, None, None] and grid[1][3] == 2.0


def test_pca_recovers_planar_data(tmp_path):
    rng = np.random.default_rng(0)
    xy = rng.normal(size=(200, 2)) * [5.0, 1.0]
    embedded = np.zeros((200, 6))
    embedded[:, 2], embedded[:, 4] = xy[:, 0], xy[:, 1]
    comps, var = top_components(embedded)
    proj = (embedded - embedded.mean(0)) @ comps.T
    ref = xy - xy.mean(0)
    d1 = np.linalg.norm(proj[:, None] - proj[None], axis=-1)
    d2 = np.linalg.norm(ref[:, None] - ref[None], axis=-1)
    np.testing.assert_allclose(d1, d2, atol=1e-6)
    assert var[0] > var[1]


def test_pca_rows_and_degenerate(tmp_path):
    rng = np.random.default_rng(1)
    s = store_of(rng.random((1500, 4)), [(3, 2)] * 1500)
    rows = report_pca(s, 1000, seed=0, out_dir=tmp_path)
    assert len(rows) == 1000 and len(read(tmp_path / "pca.csv")) == 1001
    assert report_pca(s, 1000, seed=0) == rows
    with pytest.raises(DegenerateVariance):
        report_pca(store_of(np.ones((5, 3)), [(3, 2)] * 5), 10)
    with pytest.raises(DegenerateVariance):
        report_pca(store_of(np.ones((1, 3)), [(3, 2)]), 10)


def test_kendall_tau():
    assert kendall_tau([5], [7]) is None
    assert kendall_tau([3, 2, 1], [30, 20, 10]) == 1.0
    assert kendall_tau([3, 2, 1], [10, 20, 30]) == -1.0
    assert kendall_tau([3, 3, 3], [1, 2, 3]) is None


def result(g, anchor, est, rank):
    return MotifResult(g, anchor, g.n, est, 1, rank, key=str(rank))


def test_validation_table(tmp_path):
    corpus = GraphCorpus.from_graphs([star(4), path(5), TRIANGLE])
    q_path_end = path(3)
    q_path_mid = graph(3, [(0, 1), (1, 2)])
    results = {3: [result(q_path_end, 0, 9, 1), result(TRIANGLE, 0, 5, 2), result(q_path_mid, 1, 1, 3)],
               2: [result(path(2), 0, 4, 1)]}
    rows, per_size, summary = report_validation(results, corpus, out_dir=tmp_path)
    exact = [exact_support(corpus, r.neighborhood) for r in results[3]]
    assert [r["exact_support"] for r in rows if r["size"] == 3] == exact
    assert per_size[2]["kendall_tau"] is None
    assert per_size[3]["top1_match"] == (exact[0] == max(exact))
    assert summary["top1_agreement"] == np.mean([v["top1_match"] for v in per_size.values()])
    assert results[2][0].exact_count == 4 + 4 + 3
    table = read(tmp_path / "validation.csv")
    assert len(table) == 1 + 4
    assert "vf2_monomorphism" in table[0] and "kendall_tau" in table[0]


def test_identical_orderings_give_tau_one():
    corpus = GraphCorpus.from_graphs([star(5), path(4)])
    cands = [result(path(2), 0, 30, 1), result(path(3), 1, 20, 2), result(star(3), 0, 10, 3)]
    exact = [exact_support(corpus, r.neighborhood) for r in cands]
    assert exact == sorted(exact, reverse=True) and len(set(exact)) == 3
    _, per_size, _ = report_validation({3: cands}, corpus)
    assert per_size[3]["kendall_tau"] == 1.0


def test_figures(tmp_path):
    rng = np.random.default_rng(2)
    sizes = [(n, e) for n, e in itertools.product(range(3, 7), range(2, 6))]
    s = store_of(rng.random((len(sizes), 4)), sizes)
    rows = report_pca(s, 100)
    written = render_figures(s, tmp_path, rows)
    assert written == ["pca.png", "norms.png"]
    assert all((tmp_path / w).stat().st_size > 0 for w in written)
