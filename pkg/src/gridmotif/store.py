"""Reference-vector store and the embedding-space frequency estimator."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .encoder import EncoderParams, encode_prepared, prepare
from .errors import CorruptPayload, DimMismatch, EmptyReference, VersionMismatch

STORE_MAGIC = b"GMREF"
STORE_VERSION = 1


@dataclass(frozen=True)
class RefMeta:
    source: str
    anchor: int
    nodes: int
    edges: int


@dataclass(frozen=True)
class RefStore:
    vectors: np.ndarray  # (count, D) float32
    meta: tuple[RefMeta, ...]
    threshold: float
    fingerprint: str
    dim: int

    def __post_init__(self):
        if self.vectors.shape != (len(self.meta), self.dim):
            raise DimMismatch(f"vectors {self.vectors.shape} vs {len(self.meta)} meta rows, D={self.dim}")

    def __len__(self):
        return len(self.meta)

    def check_encoder(self, params: EncoderParams):
        if params.fingerprint() != self.fingerprint:
            raise VersionMismatch(f"store built with encoder {self.fingerprint}, "
                                  f"got {params.fingerprint()}")

    def estimate_frequency(self, z_q) -> int:
        return estimate_frequency(self, z_q)


def build_reference_store(params: EncoderParams, neighborhoods, t: float, chunk=256) -> RefStore:
    neighborhoods = list(neighborhoods)
    if not neighborhoods:
        raise EmptyReference("no neighborhoods to embed")
    vecs = []
    for s in range(0, len(neighborhoods), chunk):
        items = [prepare(nb, params.spec) for nb in neighborhoods[s:s + chunk]]
        vecs.append(encode_prepared(params, items))
    meta = tuple(
        RefMeta(nb.source[0] if nb.source else "", nb.source[1][nb.anchor] if nb.source else nb.anchor,
                nb.graph.n, nb.graph.m)
        for nb in neighborhoods)
    vectors = np.concatenate(vecs).astype(np.float32)
    return RefStore(vectors, meta, float(t), params.fingerprint(), params.dim)


def estimate_frequency(store: RefStore, z_q) -> int:
    """Number of references ``r`` with ``energy(z_q, r) < t``."""
    z = np.asarray(z_q, dtype=np.float64)
    if z.shape[-1] != store.dim:
        raise DimMismatch(f"query dimension {z.shape[-1]} != store dimension {store.dim}")
    if len(store) == 0:
        return 0
    e = np.sum(np.maximum(z - store.vectors.astype(np.float64), 0.0) ** 2, axis=1)
    return int(np.count_nonzero(e < store.threshold))


def estimate_many(store: RefStore, zs) -> np.ndarray:
    return np.array([estimate_frequency(store, z) for z in np.atleast_2d(zs)], dtype=np.int64)


def save_store(store: RefStore, path):
    head = {"format": "gridmotif-store", "version": STORE_VERSION, "dim": store.dim,
            "count": len(store), "threshold": store.threshold, "fingerprint": store.fingerprint,
            "meta": [[m.source, m.anchor, m.nodes, m.edges] for m in store.meta]}
    raw = json.dumps(head, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(STORE_MAGIC + struct.pack("<I", len(raw)) + raw)
        fh.write(store.vectors.astype("<f4").tobytes())


def load_store(path) -> RefStore:
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(STORE_MAGIC) or len(blob) < len(STORE_MAGIC) + 4:
        raise CorruptPayload("not a reference store file")
    (hlen,) = struct.unpack_from("<I", blob, len(STORE_MAGIC))
    start = len(STORE_MAGIC) + 4
    try:
        head = json.loads(blob[start:start + hlen])
    except ValueError:
        raise CorruptPayload("unreadable store header") from None
    if head.get("version") != STORE_VERSION:
        raise VersionMismatch(f"store version {head.get('version')} != {STORE_VERSION}")
    raw = blob[start + hlen:]
    if len(raw) % 4:
        raise CorruptPayload(f"payload of {len(raw)} bytes is not a whole number of floats")
    payload = np.frombuffer(raw, dtype="<f4")
    dim, count = head["dim"], head["count"]
    if payload.size != dim * count or len(head["meta"]) != count:
        raise CorruptPayload(f"store payload has {payload.size} floats, expected {dim * count}")
    meta = tuple(RefMeta(str(s), int(a), int(n), int(m)) for s, a, n, m in head["meta"])
    return RefStore(payload.reshape(count, dim).astype(np.float32), meta, float(head["threshold"]),
                    head["fingerprint"], dim)
