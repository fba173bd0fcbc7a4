"""Case-file parsers (MATPOWER, native JSON, edge lists) and corpus assembly."""

from __future__ import annotations

import json
import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (CorpusError, GridMotifError, MalformedRow, MissingBlock,
                     ParseError, SchemaError, UnknownBus)
from .graph import Graph, NodeFeatures, NodeType, build_graph

log = logging.getLogger(__name__)

MATPOWER_TYPES = {1: NodeType.PQ, 2: NodeType.PV, 3: NodeType.REF}
BUS_MIN_COLS = 13
BRANCH_MIN_COLS = 13


@dataclass(frozen=True)
class GraphCorpus:
    graphs: tuple[Graph, ...]
    voltage_buckets: tuple[float, ...]
    size_weights: tuple[float, ...]
    bucket_width_kv: float | None = None

    @classmethod
    def from_graphs(cls, graphs, bucket_width_kv=None):
        graphs = tuple(graphs)
        if bucket_width_kv is not None:
            graphs = tuple(bucket_voltages(g, bucket_width_kv) for g in graphs)
        volts = {f.voltage_kv for g in graphs for f in g.features if f.voltage_kv is not None}
        sizes = np.array([g.n for g in graphs], dtype=float)
        total = sizes.sum()
        if total <= 0:
            raise GridMotifError("corpus has no nodes")
        return cls(graphs, tuple(sorted(volts)), tuple(float(s / total) for s in sizes),
                   bucket_width_kv)

    @property
    def total_nodes(self) -> int:
        return sum(g.n for g in self.graphs)

    def pick_graph(self, rng) -> int:
        """Index of a graph drawn with probability proportional to node count."""
        return int(rng.choice(len(self.graphs), p=np.asarray(self.size_weights)))


def bucket_voltage(v, width):
    if v is None:
        return None
    return round(round(v / width) * width, 6)


def bucket_voltages(g: Graph, width: float) -> Graph:
    feats = [NodeFeatures(f.node_type, bucket_voltage(f.voltage_kv, width)) for f in g.features]
    return Graph(g.name, tuple(feats), g.edges)


# -- MATPOWER -----------------------------------------------------------------

def _matrix_block(text, key):
    m = re.search(r"mpc\." + key + r"\s*=\s*\[(.*?)\]\s*;?", text, re.S)
    if m is None:
        raise MissingBlock(f"no mpc.{key} block")
    rows = []
    for line in m.group(1).splitlines():
        line = line.split("%", 1)[0]
        for chunk in line.split(";"):
            vals = chunk.replace(",", " ").split()
            if vals:
                rows.append(vals)
    return rows


def _case_name(text):
    m = re.search(r"function\s+\w+\s*=\s*(\w+)", text)
    return m.group(1) if m else "case"


def parse_matpower_case_with_stats(text: str, name: str | None = None,
                                   include_out_of_service: bool = True):
    """Parse a MATPOWER case; returns ``(graph, stats)``.

    Only bus columns 1, 2, 10 (number, type, baseKV) and branch columns 1, 2,
    11 (endpoints, status) are read. ``stats`` counts collapsed duplicate
    branches, dropped self-loops and skipped out-of-service branches.
    """
    bus_rows = _matrix_block(text, "bus")
    branch_rows = _matrix_block(text, "branch")
    index, feats = {}, []
    for i, row in enumerate(bus_rows):
        if len(row) < BUS_MIN_COLS:
            raise MalformedRow(f"bus row {i + 1} has {len(row)} columns, need {BUS_MIN_COLS}")
        try:
            bus, btype, kv = int(float(row[0])), int(float(row[1])), float(row[9])
        except ValueError as exc:
            raise MalformedRow(f"bus row {i + 1}: {exc}") from None
        if bus in index:
            raise MalformedRow(f"bus row {i + 1}: duplicate bus number {bus}")
        index[bus] = len(feats)
        feats.append(NodeFeatures(MATPOWER_TYPES.get(btype, NodeType.UNKNOWN), kv))
    stats = {"duplicates": 0, "self_loops": 0, "out_of_service": 0}
    edges = set()
    for i, row in enumerate(branch_rows):
        if len(row) < BRANCH_MIN_COLS:
            raise MalformedRow(f"branch row {i + 1} has {len(row)} columns, need {BRANCH_MIN_COLS}")
        try:
            f, t, status = int(float(row[0])), int(float(row[1])), float(row[10])
        except ValueError as exc:
            raise MalformedRow(f"branch row {i + 1}: {exc}") from None
        for bus in (f, t):
            if bus not in index:
                raise UnknownBus(f"branch row {i + 1} references bus {bus}")
        if status == 0 and not include_out_of_service:
            stats["out_of_service"] += 1
            continue
        u, v = index[f], index[t]
        if u == v:
            stats["self_loops"] += 1
            continue
        key = (min(u, v), max(u, v))
        if key in edges:
            stats["duplicates"] += 1
            continue
        edges.add(key)
    if stats["duplicates"] or stats["self_loops"]:
        log.warning("%s: collapsed %d duplicate branches, dropped %d self-loops",
                    name or _case_name(text), stats["duplicates"], stats["self_loops"])
    return build_graph(name or _case_name(text), feats, sorted(edges)), stats


def parse_matpower_case(text: str, name: str | None = None,
                        include_out_of_service: bool = True) -> Graph:
    return parse_matpower_case_with_stats(text, name, include_out_of_service)[0]


# -- native JSON ----------------------------------------------------------------

def graph_to_dict(g: Graph) -> dict:
    nodes = []
    for i, f in enumerate(g.features):
        t = None if f.node_type is NodeType.UNKNOWN else f.node_type.value
        nodes.append({"id": i, "type": t, "voltage_kv": f.voltage_kv})
    return {"name": g.name, "nodes": nodes, "edges": [list(e) for e in g.edges]}


def serialize(g: Graph) -> str:
    return json.dumps(graph_to_dict(g))


def graph_from_dict(data, path="$") -> Graph:
    if not isinstance(data, dict):
        raise SchemaError(path, "expected an object")
    name = data.get("name", "graph")
    if not isinstance(name, str):
        raise SchemaError(f"{path}.name", "expected a string")
    nodes = data.get("nodes")
    if not isinstance(nodes, list):
        raise SchemaError(f"{path}.nodes", "expected a list")
    by_id = {}
    for i, node in enumerate(nodes):
        where = f"{path}.nodes[{i}]"
        if not isinstance(node, dict):
            raise SchemaError(where, "expected an object")
        nid = node.get("id")
        if not isinstance(nid, int) or isinstance(nid, bool):
            raise SchemaError(f"{where}.id", "expected an integer")
        if nid in by_id:
            raise SchemaError(f"{where}.id", f"duplicate id {nid}")
        t = node.get("type")
        if t is None:
            ntype = NodeType.UNKNOWN
        elif t in ("PQ", "PV", "REF", "UNKNOWN"):
            ntype = NodeType(t)
        else:
            raise SchemaError(f"{where}.type", f"unknown node type {t!r}")
        v = node.get("voltage_kv")
        if v is not None and (isinstance(v, bool) or not isinstance(v, (int, float))):
            raise SchemaError(f"{where}.voltage_kv", "expected a number or null")
        try:
            by_id[nid] = NodeFeatures(ntype, v)
        except ValueError as exc:
            raise SchemaError(f"{where}.voltage_kv", str(exc)) from None
    if sorted(by_id) != list(range(len(by_id))):
        missing = sorted(set(range(len(by_id))) - set(by_id))
        raise SchemaError(f"{path}.nodes", f"node ids must be dense from 0; missing {missing}")
    edges = data.get("edges", [])
    if not isinstance(edges, list):
        raise SchemaError(f"{path}.edges", "expected a list")
    feats = [by_id[i] for i in range(len(by_id))]
    pairs = []
    for i, e in enumerate(edges):
        if (not isinstance(e, (list, tuple)) or len(e) != 2
                or not all(isinstance(x, int) and not isinstance(x, bool) for x in e)):
            raise SchemaError(f"{path}.edges[{i}]", "expected a pair of integers")
        if not all(0 <= x < len(feats) for x in e):
            raise SchemaError(f"{path}.edges[{i}]", f"endpoint outside 0..{len(feats) - 1}")
        if e[0] == e[1]:
            raise SchemaError(f"{path}.edges[{i}]", f"self-loop on node {e[0]}")
        pairs.append(e)
    return build_graph(name, feats, pairs)


def parse_json_case(text: str) -> Graph:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from None
    return graph_from_dict(data)


# -- edge lists -------------------------------------------------------------------

def parse_edge_list(text: str, name: str = "edges") -> Graph:
    """``u,v`` per line; ``#`` comments, blank lines and one header line allowed."""
    pairs = []
    seen_data = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise ParseError(lineno, f"expected 'u,v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            if not seen_data and not pairs:
                seen_data = True  # header row
                continue
            raise ParseError(lineno, f"non-integer node id in {line!r}") from None
        seen_data = True
        if u == v:
            raise ParseError(lineno, f"self-loop on node {u}")
        pairs.append((u, v))
    ids = sorted({x for p in pairs for x in p})
    index = {v: i for i, v in enumerate(ids)}
    return build_graph(name, [None] * len(ids), [(index[u], index[v]) for u, v in pairs])


# -- corpus -------------------------------------------------------------------------

def read_graph(path, include_out_of_service: bool = True) -> Graph:
    base, ext = os.path.splitext(os.path.basename(path))
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    ext = ext.lower()
    if ext == ".m":
        return parse_matpower_case(text, include_out_of_service=include_out_of_service)
    if ext == ".json":
        return parse_json_case(text)
    if ext in (".csv", ".txt", ".edges"):
        return parse_edge_list(text, name=base)
    raise GridMotifError(f"unsupported case file extension {ext!r}")


def write_graph(g: Graph, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(g))


def load_corpus(paths, bucket_width_kv: float = 1.0, include_out_of_service: bool = True,
                workers: int = 1) -> GraphCorpus:
    """Parse every path (possibly in parallel) and assemble a corpus in input order."""
    if bucket_width_kv <= 0:
        raise ValueError("bucket_width_kv must be positive")
    paths = list(paths)

    def _one(path):
        try:
            return read_graph(path, include_out_of_service), None
        except (GridMotifError, OSError, ValueError) as exc:
            return None, exc

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(_one, paths))
    else:
        results = [_one(p) for p in paths]
    failures = [(str(p), err) for p, (_, err) in zip(paths, results) if err is not None]
    if failures:
        raise CorpusError(failures)
    return GraphCorpus.from_graphs([g for g, _ in results], bucket_width_kv)
