"""Order-embedding encoder: pre-network, GraphSAGE stack with weighted skip
connections, anchor readout and post-network, with exact reverse-mode
gradients written out by hand.

Shapes for one batch of ``N`` nodes drawn from ``B`` neighborhoods::

    X      (N, F)    node inputs (type one-hot, voltage one-hot, anchor, degree)
    h0     (N, d)    relu(X @ pre_W + pre_b)
    H'_k   (N, d)    relu([H_{k-1} | A @ H_{k-1}] @ sage_k)
    H_k    (N, 2d)   [sum_{i<k} w_{i,k} H'_i | H'_k]          (H_0 = h0)
    z      (B, D)    relu(H_K[anchors] @ post_W + post_b)

A is the (block-diagonal) adjacency of the batch, so ``A @ H`` is sum
aggregation over neighbors. In training mode each node aggregates a sample
of ``n_samp`` neighbors instead (see :func:`sampled_aggregator`).
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import struct
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .errors import CorruptPayload, DegenerateSplit, DimMismatch, NonFiniteLoss, VersionMismatch
from .graph import NODE_TYPES, Neighborhood

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"GMENC"
CHECKPOINT_VERSION = 1


# -- features ----------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureSpec:
    """Input layout: 4 type slots, one slot per voltage bucket plus an
    unknown slot, the anchor flag and the normalized degree."""

    voltage_buckets: tuple[float, ...] = ()

    @property
    def n_voltage(self) -> int:
        return len(self.voltage_buckets) + 1

    @property
    def input_dim(self) -> int:
        return len(NODE_TYPES) + self.n_voltage + 2

    def voltage_slot(self, v) -> int:
        if v is None:
            return len(self.voltage_buckets)
        key = round(v, 6)
        for i, b in enumerate(self.voltage_buckets):
            if round(b, 6) == key:
                return i
        return len(self.voltage_buckets)


def featurize(nbhd: Neighborhood, spec: FeatureSpec) -> np.ndarray:
    g = nbhd.graph
    x = np.zeros((g.n, spec.input_dim))
    deg = np.array([g.degree(v) for v in range(g.n)], dtype=float)
    max_deg = deg.max() if g.n else 0.0
    off = len(NODE_TYPES)
    for v, f in enumerate(g.features):
        x[v, NODE_TYPES.index(f.node_type)] = 1.0
        x[v, off + spec.voltage_slot(f.voltage_kv)] = 1.0
    x[nbhd.anchor, -2] = 1.0
    if max_deg > 0:
        x[:, -1] = deg / max_deg
    return x


@dataclass(frozen=True)
class Prepared:
    """Featurized neighborhood ready for batching."""

    x: np.ndarray
    edges: np.ndarray  # (m, 2) int
    anchor: int

    @property
    def n(self) -> int:
        return self.x.shape[0]


def prepare(nbhd: Neighborhood, spec: FeatureSpec) -> Prepared:
    edges = np.array(nbhd.graph.edges, dtype=np.int64).reshape(-1, 2)
    return Prepared(featurize(nbhd, spec), edges, nbhd.anchor)


@dataclass
class GraphBatch:
    x: np.ndarray
    adj: sp.csr_matrix
    anchors: np.ndarray

    @property
    def size(self) -> int:
        return len(self.anchors)


def collate(items) -> GraphBatch:
    """Disjoint union of prepared neighborhoods."""
    offsets = np.cumsum([0] + [p.n for p in items])
    x = np.concatenate([p.x for p in items], axis=0)
    parts = [p.edges + o for p, o in zip(items, offsets[:-1]) if len(p.edges)]
    e = np.concatenate(parts, axis=0) if parts else np.zeros((0, 2), dtype=np.int64)
    n = int(offsets[-1])
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    adj = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    adj.sort_indices()
    anchors = np.array([o + p.anchor for p, o in zip(items, offsets[:-1])], dtype=np.int64)
    return GraphBatch(x, adj, anchors)


def sampled_aggregator(adj: sp.csr_matrix, n_samp: int, rng) -> sp.csr_matrix:
    """Neighbor-sampling aggregation matrix.

    Nodes with at most ``n_samp`` neighbors draw ``n_samp`` neighbors with
    replacement; larger neighborhoods draw ``n_samp`` without replacement.
    Each draw is weighted ``deg / n_samp`` so the sampled sum is an unbiased
    estimate of the full-neighborhood sum used at inference.
    """
    n = adj.shape[0]
    indptr, indices = adj.indptr, adj.indices
    deg = np.diff(indptr)
    rows, cols, vals = [], [], []
    small = np.flatnonzero((deg > 0) & (deg <= n_samp))
    if len(small):
        r = rng.random((len(small), n_samp))
        pick = indptr[small][:, None] + np.floor(r * deg[small][:, None]).astype(np.int64)
        rows.append(np.repeat(small, n_samp))
        cols.append(indices[pick.ravel()])
        vals.append(np.repeat(deg[small] / n_samp, n_samp))
    for v in np.flatnonzero(deg > n_samp):
        nb = indices[indptr[v]:indptr[v + 1]]
        chosen = rng.choice(nb, size=n_samp, replace=False)
        rows.append(np.full(n_samp, v))
        cols.append(chosen)
        vals.append(np.full(n_samp, deg[v] / n_samp))
    if not rows:
        return sp.csr_matrix((n, n))
    m = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    m.sum_duplicates()
    m.sort_indices()
    return m


# -- parameters -------------------------------------------------------------------

@dataclass
class EncoderParams:
    spec: FeatureSpec
    hidden: int
    dim: int
    layers: int
    arrays: dict = field(default_factory=dict)

    def names(self) -> list[str]:
        return (["pre_W", "pre_b"] + [f"sage_{k}" for k in range(1, self.layers + 1)]
                + ["skip", "post_W", "post_b"])

    def shapes(self) -> dict:
        d, F = self.hidden, self.spec.input_dim
        s = {"pre_W": (F, d), "pre_b": (d,)}
        for k in range(1, self.layers + 1):
            s[f"sage_{k}"] = (2 * d if k == 1 else 4 * d, d)
        s["skip"] = (self.layers * (self.layers - 1) // 2,)
        s["post_W"] = (2 * d, self.dim)
        s["post_b"] = (self.dim,)
        return s

    def skip_index(self, i: int, k: int) -> int:
        """Flat position of w_{i,k} (1 <= i < k <= K), ordered by k then i."""
        return (k - 1) * (k - 2) // 2 + (i - 1)

    def copy(self) -> "EncoderParams":
        return replace(self, arrays={k: v.copy() for k, v in self.arrays.items()})

    def flat(self) -> np.ndarray:
        return np.concatenate([self.arrays[n].ravel() for n in self.names()])

    def with_flat(self, vec) -> "EncoderParams":
        out, pos = {}, 0
        for name in self.names():
            shape = self.shapes()[name]
            size = int(np.prod(shape))
            out[name] = np.asarray(vec[pos:pos + size], dtype=float).reshape(shape).copy()
            pos += size
        if pos != len(vec):
            raise DimMismatch(f"expected {pos} parameters, got {len(vec)}")
        return replace(self, arrays=out)

    def validate(self):
        for name, shape in self.shapes().items():
            a = self.arrays.get(name)
            if a is None or a.shape != shape:
                raise DimMismatch(f"{name}: expected shape {shape}, got "
                                  f"{None if a is None else a.shape}")
            if not np.all(np.isfinite(a)):
                raise NonFiniteLoss(f"{name} contains non-finite values")

    def to_float32(self) -> "EncoderParams":
        return replace(self, arrays={k: v.astype(np.float32).astype(np.float64)
                                     for k, v in self.arrays.items()})

    def fingerprint(self) -> str:
        return hashlib.sha256(_checkpoint_bytes(self)).hexdigest()[:16]


def init_params(spec: FeatureSpec, hidden=64, dim=64, layers=8, seed=0) -> EncoderParams:
    rng = np.random.default_rng([int(seed), 7])
    p = EncoderParams(spec, hidden, dim, layers)
    arrays = {}
    for name, shape in p.shapes().items():
        if name == "skip":
            a = np.zeros(shape)
            for k in range(2, layers + 1):
                for i in range(1, k):
                    a[p.skip_index(i, k)] = 1.0 / (k - 1)
        elif name.endswith("_b"):
            a = np.full(shape, 0.01)
        else:
            a = rng.normal(0.0, math.sqrt(2.0 / shape[0]), size=shape)
            if name.startswith("sage"):
                # half-width on the neighbor-sum block keeps activations bounded
                a[shape[0] // 2:] *= 0.5
        arrays[name] = a
    p.arrays = arrays
    return p


# -- forward / backward -------------------------------------------------------------

def _relu(a):
    return np.maximum(a, 0.0)


def forward(params: EncoderParams, batch: GraphBatch, agg=None, keep=False):
    """Embed every neighborhood in ``batch``; returns ``(z, cache)``.

    ``agg`` overrides the aggregation matrix (training-time sampling); by
    default the full adjacency is used.
    """
    if batch.x.shape[1] != params.spec.input_dim:
        raise DimMismatch(f"input width {batch.x.shape[1]} != {params.spec.input_dim}")
    P = params.arrays
    A = batch.adj if agg is None else agg
    K = params.layers
    pre0 = batch.x @ P["pre_W"] + P["pre_b"]
    h = _relu(pre0)
    outs, mids, zs = [], [], []
    d = params.hidden
    for k in range(1, K + 1):
        m = np.concatenate([h, A @ h], axis=1)
        zk = m @ P[f"sage_{k}"]
        hp = _relu(zk)
        s = np.zeros((h.shape[0], d))
        for i in range(1, k):
            s += P["skip"][params.skip_index(i, k)] * outs[i - 1]
        if keep:
            mids.append(m)
            zs.append(zk)
        outs.append(hp)
        h = np.concatenate([s, hp], axis=1)
    r = h[batch.anchors]
    pre_out = r @ P["post_W"] + P["post_b"]
    z = _relu(pre_out)
    cache = None
    if keep:
        cache = dict(A=A, x=batch.x, anchors=batch.anchors, pre0=pre0, mids=mids, zs=zs,
                     outs=outs, r=r, pre_out=pre_out, n=h.shape[0])
    return z, cache


def backward(params: EncoderParams, cache, dz) -> dict:
    """Gradients of ``sum(dz * z)`` w.r.t. every parameter array."""
    P = params.arrays
    K, d = params.layers, params.hidden
    g = {}
    dpre = dz * (cache["pre_out"] > 0)
    g["post_W"] = cache["r"].T @ dpre
    g["post_b"] = dpre.sum(axis=0)
    dh = np.zeros((cache["n"], 2 * d))
    np.add.at(dh, cache["anchors"], dpre @ P["post_W"].T)
    outs, A = cache["outs"], cache["A"]
    AT = A.T.tocsr()
    d_out = [np.zeros_like(o) for o in outs]
    g_skip = np.zeros_like(P["skip"])
    for k in range(K, 0, -1):
        # dh is the gradient w.r.t. H_k = [skip sum | H'_k]
        ds, d_out[k - 1] = dh[:, :d], d_out[k - 1] + dh[:, d:]
        for i in range(1, k):
            j = params.skip_index(i, k)
            g_skip[j] = np.sum(ds * outs[i - 1])
            d_out[i - 1] += P["skip"][j] * ds
        dzk = d_out[k - 1] * (cache["zs"][k - 1] > 0)
        g[f"sage_{k}"] = cache["mids"][k - 1].T @ dzk
        dm = dzk @ P[f"sage_{k}"].T
        w = dm.shape[1] // 2
        dh = dm[:, :w] + AT @ dm[:, w:]
    g["skip"] = g_skip
    dpre0 = dh * (cache["pre0"] > 0)
    g["pre_W"] = cache["x"].T @ dpre0
    g["pre_b"] = dpre0.sum(axis=0)
    return g


def encode(params: EncoderParams, nbhd: Neighborhood, train_mode=False, rng=None,
           n_samp=8) -> np.ndarray:
    return encode_many(params, [nbhd], train_mode, rng, n_samp)[0]


def encode_many(params: EncoderParams, nbhds, train_mode=False, rng=None, n_samp=8,
                chunk=256) -> np.ndarray:
    """Embeddings (len(nbhds), D); inference mode aggregates all neighbors."""
    out = []
    nbhds = list(nbhds)
    for start in range(0, len(nbhds), chunk):
        items = [prepare(nb, params.spec) for nb in nbhds[start:start + chunk]]
        out.append(encode_prepared(params, items, train_mode, rng, n_samp))
    if not out:
        return np.zeros((0, params.dim))
    return np.concatenate(out, axis=0)


def encode_prepared(params, items, train_mode=False, rng=None, n_samp=8) -> np.ndarray:
    batch = collate(items)
    agg = sampled_aggregator(batch.adj, n_samp, rng) if train_mode else None
    return forward(params, batch, agg)[0]


# -- energy, loss, prediction --------------------------------------------------------

def energy(z_u, z_v):
    """Order-violation penalty ``||max(0, z_u - z_v)||^2`` (broadcasts over rows)."""
    z_u, z_v = np.asarray(z_u, dtype=float), np.asarray(z_v, dtype=float)
    if z_u.shape[-1] != z_v.shape[-1]:
        raise DimMismatch(f"dimension {z_u.shape[-1]} != {z_v.shape[-1]}")
    return np.sum(np.maximum(z_u - z_v, 0.0) ** 2, axis=-1)


def loss(z_u, z_v, labels, alpha, reduction="sum"):
    """Max-margin order loss: energy on positives, hinge ``alpha - E`` on negatives."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    e = np.atleast_1d(energy(z_u, z_v))
    y = np.atleast_1d(np.asarray(labels))
    terms = np.where(y == 1, e, np.maximum(0.0, alpha - e))
    total = float(terms.sum())
    return total / len(terms) if reduction == "mean" and len(terms) else total


def loss_grad_z(z_u, z_v, labels, alpha, reduction="sum"):
    """``(loss, dL/dz_u, dL/dz_v)`` with zero subgradient at the hinge kink."""
    diff = np.maximum(z_u - z_v, 0.0)
    e = np.sum(diff ** 2, axis=1)
    y = np.asarray(labels)
    pos = y == 1
    active = (~pos) & (alpha - e > 0)
    total = float(e[pos].sum() + (alpha - e[active]).sum())
    coef = np.where(pos, 1.0, np.where(active, -1.0, 0.0))
    scale = 1.0
    if reduction == "mean":
        scale = 1.0 / len(y)
        total *= scale
    dzu = (scale * coef)[:, None] * 2.0 * diff
    return total, dzu, -dzu


def predict_subgraph(z_u, z_v, t) -> int:
    if t <= 0:
        raise ValueError("threshold must be positive")
    return int(energy(z_u, z_v) < t)


def pairs_batch(params, pairs, prepared_cache=None):
    """Collate the distinct neighborhoods of ``pairs``.

    Returns ``(batch, q_rows, t_rows, labels)``; ``prepared_cache`` maps
    ``id(neighborhood)`` to :class:`Prepared` to skip re-featurizing.
    """
    slot, items = {}, []
    q_rows, t_rows = [], []
    for p in pairs:
        for nb, rows in ((p.query, q_rows), (p.target, t_rows)):
            key = id(nb)
            if key not in slot:
                slot[key] = len(items)
                if prepared_cache is not None and key in prepared_cache:
                    items.append(prepared_cache[key])
                else:
                    items.append(prepare(nb, params.spec))
            rows.append(slot[key])
    labels = np.array([p.label for p in pairs])
    return collate(items), np.array(q_rows), np.array(t_rows), labels


def batch_loss_grad(params, batch, q_rows, t_rows, labels, alpha, reduction="sum", agg=None):
    z, cache = forward(params, batch, agg, keep=True)
    total, dzu, dzv = loss_grad_z(z[q_rows], z[t_rows], labels, alpha, reduction)
    dz = np.zeros_like(z)
    np.add.at(dz, q_rows, dzu)
    np.add.at(dz, t_rows, dzv)
    return total, backward(params, cache, dz)


def grad(pairs, params: EncoderParams, alpha: float, reduction="sum"):
    """Loss and exact parameter gradients for a batch of training pairs
    (inference-mode aggregation, so the result is deterministic)."""
    batch, q, t, y = pairs_batch(params, pairs)
    return batch_loss_grad(params, batch, q, t, y, alpha, reduction)


# -- threshold calibration --------------------------------------------------------------

def _f1(pred, y):
    tp = np.sum(pred & (y == 1))
    fp = np.sum(pred & (y == 0))
    fn = np.sum(~pred & (y == 1))
    return 0.0 if tp == 0 else 2 * tp / (2 * tp + fp + fn)


def calibrate_threshold(energies, labels, default=0.1, percentiles=np.linspace(0, 100, 101)):
    """Threshold maximizing F1 of ``E < t`` over energy percentiles; ties
    resolve to the smallest threshold."""
    e = np.asarray(energies, dtype=float)
    y = np.asarray(labels)
    if not (np.any(y == 1) and np.any(y == 0)):
        raise DegenerateSplit("validation pairs must contain both labels")
    cands = np.unique(np.percentile(e, percentiles))
    cands = cands[cands > 0]
    if len(cands) == 0:
        return float(default)
    best_t, best_f = None, -1.0
    for t in cands:
        f = _f1(e < t, y)
        if f > best_f:
            best_t, best_f = float(t), f
    return best_t


def accuracy(energies, labels, t) -> float:
    y = np.asarray(labels)
    return float(np.mean((np.asarray(energies) < t) == (y == 1)))


def pair_energies(params, pairs, prepared_cache=None, chunk=512):
    out = []
    for s in range(0, len(pairs), chunk):
        batch, q, t, _ = pairs_batch(params, pairs[s:s + chunk], prepared_cache)
        z = forward(params, batch)[0]
        out.append(energy(z[q], z[t]))
    return np.concatenate(out) if out else np.zeros(0)


# -- training -------------------------------------------------------------------------------

@dataclass
class TrainConfig:
    alpha: float = 0.5
    lr: float = 1e-3
    batch_size: int = 64
    epochs: int = 50
    n_samp: int = 8
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    reduction: str = "mean"
    hidden: int = 64
    dim: int = 64
    layers: int = 8
    sample_neighbors: bool = True

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.n_samp < 1:
            raise ValueError("n_samp must be >= 1")


class Adam:
    def __init__(self, params: EncoderParams, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.arrays.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.arrays.items()}
        self.t = 0

    def step(self, params: EncoderParams, grads):
        self.t += 1
        c1 = 1 - self.b1 ** self.t
        c2 = 1 - self.b2 ** self.t
        for name in params.names():
            gr = grads[name]
            self.m[name] = self.b1 * self.m[name] + (1 - self.b1) * gr
            self.v[name] = self.b2 * self.v[name] + (1 - self.b2) * gr * gr
            params.arrays[name] -= self.lr * (self.m[name] / c1) / (np.sqrt(self.v[name] / c2) + self.eps)


def feature_spec_for(corpus) -> FeatureSpec:
    return FeatureSpec(tuple(corpus.voltage_buckets))


def train(dataset, config: TrainConfig, spec: FeatureSpec, params: EncoderParams | None = None,
          progress=None):
    """Minibatch Adam over the training split.

    Returns ``(params, log)`` where ``params`` are the float32-rounded weights
    of the epoch with the best validation accuracy at its calibrated
    threshold (stored as ``log["threshold"]``).
    """
    train_pairs = dataset.subset("train")
    val_pairs = dataset.subset("validation")
    if not train_pairs:
        raise ValueError("empty training split")
    if params is None:
        params = init_params(spec, config.hidden, config.dim, config.layers, config.seed)
    params = params.copy()
    cache = {}
    for p in dataset.pairs:
        for nb in (p.query, p.target):
            if id(nb) not in cache:
                cache[id(nb)] = prepare(nb, spec)
    rng = np.random.default_rng([int(config.seed), 11])
    opt = Adam(params, config.lr, config.beta1, config.beta2, config.eps)
    history = []
    best = (-1.0, None, None)
    has_val = len({p.label for p in val_pairs}) == 2
    for epoch in range(config.epochs):
        order = rng.permutation(len(train_pairs))
        total, batches = 0.0, 0
        for s in range(0, len(order), config.batch_size):
            chunk = [train_pairs[i] for i in order[s:s + config.batch_size]]
            batch, q, t, y = pairs_batch(params, chunk, cache)
            agg = sampled_aggregator(batch.adj, config.n_samp, rng) if config.sample_neighbors else None
            value, grads = batch_loss_grad(params, batch, q, t, y, config.alpha,
                                           config.reduction, agg)
            if not math.isfinite(value) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                raise NonFiniteLoss(f"non-finite loss/gradient at epoch {epoch}, batch {batches}: "
                                    f"loss={value}")
            opt.step(params, grads)
            total += value
            batches += 1
        entry = {"epoch": epoch, "train_loss": total / max(batches, 1)}
        if has_val:
            e = pair_energies(params, val_pairs, cache)
            y = np.array([p.label for p in val_pairs])
            t = calibrate_threshold(e, y)
            acc = accuracy(e, y, t)
            entry.update(val_accuracy=acc, threshold=t)
            if acc > best[0]:
                best = (acc, params.copy(), t)
        history.append(entry)
        log.info("epoch %d loss %.5f val_acc %s", epoch, entry["train_loss"],
                 entry.get("val_accuracy"))
        if progress is not None:
            progress(entry)
    if best[1] is None:
        best = (float("nan"), params.copy(), 0.1)
    final = best[1].to_float32()
    threshold = best[2]
    if has_val:
        # recalibrate on the rounded weights actually returned
        e = pair_energies(final, val_pairs, cache)
        y = np.array([p.label for p in val_pairs])
        threshold = calibrate_threshold(e, y)
        best = (accuracy(e, y, threshold), final, threshold)
    return final, {"history": history, "best_val_accuracy": best[0], "threshold": threshold}


# -- checkpoints --------------------------------------------------------------------------

def _header(params: EncoderParams) -> dict:
    return {"format": "gridmotif-encoder", "version": CHECKPOINT_VERSION,
            "hidden": params.hidden, "dim": params.dim, "layers": params.layers,
            "voltage_buckets": list(params.spec.voltage_buckets),
            "order": params.names(),
            "shapes": {k: list(v) for k, v in params.shapes().items()}}


def _checkpoint_bytes(params: EncoderParams) -> bytes:
    head = json.dumps(_header(params), sort_keys=True).encode()
    payload = params.flat().astype("<f4").tobytes()
    return CHECKPOINT_MAGIC + struct.pack("<I", len(head)) + head + payload


def save_params(params: EncoderParams, path):
    with open(path, "wb") as fh:
        fh.write(_checkpoint_bytes(params))


def load_params(path, expect: dict | None = None) -> EncoderParams:
    """Load a checkpoint; ``expect`` (e.g. ``{"dim": 64}``) rejects mismatches."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(CHECKPOINT_MAGIC) or len(blob) < len(CHECKPOINT_MAGIC) + 4:
        raise CorruptPayload("not an encoder checkpoint")
    (hlen,) = struct.unpack_from("<I", blob, len(CHECKPOINT_MAGIC))
    start = len(CHECKPOINT_MAGIC) + 4
    try:
        head = json.loads(blob[start:start + hlen])
    except ValueError:
        raise CorruptPayload("unreadable checkpoint header") from None
    if head.get("version") != CHECKPOINT_VERSION:
        raise VersionMismatch(f"checkpoint version {head.get('version')} != {CHECKPOINT_VERSION}")
    for key, val in (expect or {}).items():
        if head.get(key) != val:
            raise VersionMismatch(f"checkpoint {key}={head.get(key)} but {val} expected")
    p = EncoderParams(FeatureSpec(tuple(head["voltage_buckets"])), head["hidden"], head["dim"],
                      head["layers"])
    if {k: list(v) for k, v in p.shapes().items()} != head["shapes"]:
        raise VersionMismatch("checkpoint shapes do not match its declared dims")
    raw = blob[start + hlen:]
    if len(raw) % 4:
        raise CorruptPayload(f"payload of {len(raw)} bytes is not a whole number of floats")
    payload = np.frombuffer(raw, dtype="<f4")
    expected = sum(int(np.prod(s)) for s in p.shapes().values())
    if payload.size != expected:
        raise CorruptPayload(f"payload has {payload.size} floats, expected {expected}")
    return p.with_flat(payload.astype(np.float64))
