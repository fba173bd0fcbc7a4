"""Tabular reports over reference stores and mining results, plus optional
matplotlib renderings of the same tables."""

from __future__ import annotations

import csv
import logging
import os
from collections import defaultdict

import numpy as np
from scipy import stats

from .errors import DegenerateVariance, EmptyReference, OracleTimeout
from .oracle import INDUCED, MONOMORPHISM, MatchSemantics, exact_support, vf2_count
from .store import RefStore

log = logging.getLogger(__name__)

EMPTY = ""


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(x):
    if x is None:
        return EMPTY
    if isinstance(x, float):
        return repr(round(x, 10))
    return x


# -- norm tables ------------------------------------------------------------------------

def reference_rows(store: RefStore):
    norms = np.linalg.norm(store.vectors.astype(np.float64), axis=1)
    return [(m.nodes, m.edges, float(nrm), m.source, m.anchor) for m, nrm in zip(store.meta, norms)]


def _binned(rows, col):
    groups = defaultdict(list)
    for r in rows:
        groups[r[col]].append(r[2])
    return [(k, len(v), float(np.mean(v))) for k, v in sorted(groups.items())]


def norm_grid(rows):
    """Mean norm per (nodes, edges) cell; cells with no members are ``None``."""
    nodes = sorted({r[0] for r in rows})
    edges = list(range(min(r[1] for r in rows), max(r[1] for r in rows) + 1))
    cells = defaultdict(list)
    for r in rows:
        cells[(r[0], r[1])].append(r[2])
    grid = [[float(np.mean(cells[(n, e)])) if (n, e) in cells else None for e in edges]
            for n in nodes]
    return nodes, edges, grid


def spearman(x, y):
    if len(set(x)) < 2 or len(set(y)) < 2:
        return None
    return float(stats.spearmanr(x, y)[0])


def report_norm_tables(store: RefStore, out_dir) -> dict:
    if len(store) == 0:
        raise EmptyReference("store is empty")
    rows = reference_rows(store)
    _write_csv(os.path.join(out_dir, "references.csv"),
               ["node_count", "edge_count", "norm", "source", "anchor"],
               [[r[0], r[1], _fmt(r[2]), r[3], r[4]] for r in rows])
    _write_csv(os.path.join(out_dir, "norms_by_nodes.csv"), ["node_count", "count", "mean_norm"],
               [[k, c, _fmt(m)] for k, c, m in _binned(rows, 0)])
    _write_csv(os.path.join(out_dir, "norms_by_edges.csv"), ["edge_count", "count", "mean_norm"],
               [[k, c, _fmt(m)] for k, c, m in _binned(rows, 1)])
    nodes, edges, grid = norm_grid(rows)
    _write_csv(os.path.join(out_dir, "norm_grid.csv"), ["node_count"] + [f"e{e}" for e in edges],
               [[n] + [_fmt(v) for v in line] for n, line in zip(nodes, grid)])
    return {"references": len(rows),
            "spearman_nodes_norm": spearman([r[0] for r in rows], [r[2] for r in rows]),
            "spearman_edges_norm": spearman([r[1] for r in rows], [r[2] for r in rows])}


# -- PCA ----------------------------------------------------------------------------------

def top_components(x, n_components=2, tol=1e-9, max_iter=10000):
    """Leading principal directions by power iteration with deflation.

    Returns ``(components, variances)``; each component's largest-magnitude
    entry is made positive so the result is deterministic.
    """
    x = np.asarray(x, dtype=np.float64)
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / max(len(x) - 1, 1)
    if np.trace(cov) <= 0:
        raise DegenerateVariance("all vectors are identical")
    comps, variances = [], []
    dim = cov.shape[0]
    for j in range(min(n_components, dim)):
        v = np.ones(dim) / np.sqrt(dim) + 1e-3 * np.arange(dim) / dim
        v /= np.linalg.norm(v)
        for _ in range(max_iter):
            w = cov @ v
            nrm = np.linalg.norm(w)
            if nrm == 0:
                break
            w /= nrm
            if w @ v < 0:
                w = -w
            done = np.linalg.norm(w - v) < tol
            v = w
            if done:
                break
        lam = float(v @ cov @ v)
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        comps.append(v)
        variances.append(lam)
        cov = cov - lam * np.outer(v, v)
    while len(comps) < n_components:
        comps.append(np.zeros(dim))
        variances.append(0.0)
    return np.array(comps), np.array(variances)


def report_pca(store: RefStore, sample_size=1000, seed=0, out_dir=None):
    if len(store) < 2:
        raise DegenerateVariance("need at least 2 reference vectors")
    rng = np.random.default_rng([int(seed), 13])
    idx = np.arange(len(store))
    if sample_size < len(store):
        idx = np.sort(rng.choice(len(store), size=sample_size, replace=False))
    x = store.vectors[idx].astype(np.float64)
    comps, _ = top_components(x)
    proj = (x - x.mean(axis=0)) @ comps.T
    rows = [(float(px), float(py), store.meta[i].nodes, store.meta[i].edges, store.meta[i].source)
            for (px, py), i in zip(proj, idx)]
    if out_dir is not None:
        _write_csv(os.path.join(out_dir, "pca.csv"), ["x", "y", "node_count", "edge_count", "source"],
                   [[_fmt(a), _fmt(b), n, e, s] for a, b, n, e, s in rows])
    return rows


# -- validation against the exact oracle ------------------------------------------------------

def kendall_tau(a, b):
    if len(a) < 2:
        return None
    tau = stats.kendalltau(a, b)[0]
    return None if tau is None or np.isnan(tau) else float(tau)


def _timed(fn, *args, **kw):
    try:
        return fn(*args, **kw), False
    except OracleTimeout as exc:
        return exc.partial, True


def report_validation(results, corpus, timeout=60.0, top_k=3, tau_k=3, respect_features=True,
                      modes=(INDUCED, MONOMORPHISM), out_dir=None):
    """Compare estimated rankings with exact counts.

    For each size, the first ``top_k`` motifs (all when ``None``) get their
    exact anchored support plus whole-corpus occurrence counts per mode.
    Returns ``(rows, per_size, summary)``.
    """
    rows, per_size = [], {}
    graphs = getattr(corpus, "graphs", corpus)
    for size, lst in sorted(results.items()):
        chosen = lst if top_k is None else lst[:top_k]
        supports, timed_out = [], False
        for r in chosen:
            sup, to_sup = _timed(exact_support, corpus, r.neighborhood,
                                 sem=MatchSemantics(INDUCED, True, respect_features), timeout=timeout)
            counts = {}
            for mode in modes:
                total, to_any = 0, False
                for g in graphs:
                    c, to = _timed(vf2_count, g, r.motif, MatchSemantics(mode, False, respect_features),
                                   timeout=timeout)
                    total += c
                    to_any |= to
                counts[mode] = (total, to_any)
            r.exact_count = counts[INDUCED][0] if INDUCED in counts else None
            supports.append(sup)
            timed_out |= to_sup
            rows.append({"size": size, "rank": r.rank, "key": r.key, "nodes": r.node_count,
                         "edges": r.motif.m, "estimated_frequency": r.estimated_frequency,
                         "support_trials": r.support_trials, "exact_support": sup,
                         "exact_support_timeout": to_sup,
                         **{f"vf2_{m}": counts[m][0] for m in modes},
                         **{f"vf2_{m}_timeout": counts[m][1] for m in modes}})
        if not chosen:
            continue
        est = [r.estimated_frequency for r in chosen]
        top1 = supports[0] == max(supports)
        per_size[size] = {"candidates": len(lst), "validated": len(chosen), "top1_match": bool(top1),
                          "kendall_tau": kendall_tau(est[:tau_k], supports[:tau_k]),
                          "timeout": timed_out}
    flags = [v["top1_match"] for v in per_size.values()]
    taus = [v["kendall_tau"] for v in per_size.values() if v["kendall_tau"] is not None]
    summary = {"top1_agreement": float(np.mean(flags)) if flags else None,
               "median_kendall_tau": float(np.median(taus)) if taus else None,
               "sizes": {str(k): v for k, v in per_size.items()}}
    if out_dir is not None:
        header = ["size", "rank", "key", "nodes", "edges", "estimated_frequency", "support_trials",
                  "exact_support", "exact_support_timeout"]
        header += [f"vf2_{m}" for m in modes] + [f"vf2_{m}_timeout" for m in modes]
        header += ["top1_match", "kendall_tau"]
        out = []
        for row in rows:
            ps = per_size[row["size"]]
            line = [_fmt(row[h]) for h in header[:-2]]
            line += [ps["top1_match"], _fmt(ps["kendall_tau"])]
            out.append(line)
        _write_csv(os.path.join(out_dir, "validation.csv"), header, out)
    return rows, per_size, summary


# -- figures -----------------------------------------------------------------------------------

def render_figures(store: RefStore, out_dir, pca_rows=None):
    """PNG renderings of the PCA scatter and the norm/size relations."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    rows = reference_rows(store)
    if pca_rows:
        fig, ax = plt.subplots(figsize=(5, 4))
        sc = ax.scatter([r[0] for r in pca_rows], [r[1] for r in pca_rows],
                        c=[r[2] for r in pca_rows], s=6, cmap="viridis")
        fig.colorbar(sc, ax=ax, label="nodes")
        ax.set_xlabel("PC1")
        ax.set_ylabel("PC2")
        fig.tight_layout()
        fig.savefig(os.path.join(out_dir, "pca.png"), dpi=150)
        plt.close(fig)
        written.append("pca.png")

    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    for ax, col, label in ((axes[0], 0, "nodes"), (axes[1], 1, "edges")):
        ax.scatter([r[col] for r in rows], [r[2] for r in rows], s=4, alpha=0.3)
        binned = _binned(rows, col)
        ax.plot([b[0] for b in binned], [b[2] for b in binned], color="k")
        ax.set_xlabel(label)
        ax.set_ylabel("embedding norm")
    nodes, edges, grid = norm_grid(rows)
    data = np.array([[np.nan if v is None else v for v in line] for line in grid])
    im = axes[2].imshow(data, origin="lower", aspect="auto", cmap="magma",
                        extent=(edges[0] - 0.5, edges[-1] + 0.5, nodes[0] - 0.5, nodes[-1] + 0.5))
    axes[2].set_xlabel("edges")
    axes[2].set_ylabel("nodes")
    fig.colorbar(im, ax=axes[2], label="mean norm")
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "norms.png"), dpi=150)
    plt.close(fig)
    written.append("norms.png")
    return written
