"""``gridmotif`` command-line entry point.

Usage::

    gridmotif <command> --config run.json [--out DIR] [--section.key VALUE ...]

Every configuration key can be overridden with a flag of the same dotted
name; values are parsed as JSON when possible (``--mining.sizes "[3,4,5]"``).
Artifacts are written under ``run.out`` (or ``--out``) with fixed names.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
import time

from . import encoder as enc
from .errors import ConfigError, GridMotifError
from .ingest import load_corpus, read_graph, write_graph
from .oracle import INDUCED, MODES, MONOMORPHISM, MatchSemantics, vf2_count
from .report import render_figures, report_norm_tables, report_pca, report_validation
from .sampling import (build_dataset, decompose, read_dataset, read_neighborhoods, write_dataset,
                       write_neighborhoods)
from .search import mine_motifs, non_increasing_fraction, read_results, write_results
from .store import build_reference_store, load_store, save_store

log = logging.getLogger("gridmotif")

REQUIRED = object()

DEFAULTS = {
    "corpus": {"paths": [], "bucket_width_kv": 1.0, "include_out_of_service": True},
    "sampling": {"count": 10000, "size_min": 3, "size_max": 25, "seed": REQUIRED,
                 "n_pairs": 4000, "pool_size": None},
    "encoder": {"hidden": 64, "dim": 64, "layers": 8, "alpha": 0.5, "lr": 1e-3,
                "batch_size": 64, "epochs": 50, "n_samp": 8, "seed": REQUIRED,
                "threshold": None},
    "store": {"path": None},
    "mining": {"sizes": list(range(3, 11)), "trials": 1000, "seed": REQUIRED,
               "respect_features": True},
    "validation": {"timeout": 60.0, "modes": [INDUCED, MONOMORPHISM], "top_k": 3,
                   "respect_features": True},
    "report": {"pca_sample": 1000, "seed": 0, "figures": False},
    "run": {"out": "out", "workers": 1, "timestamp": False},
}

FILES = {
    "corpus": "corpus.json", "neighborhoods": "neighborhoods.jsonl", "pairs": "pairs.jsonl",
    "model": "model.bin", "train_log": "train_log.json", "store": "store.bin",
    "references": "references.csv", "pca": "pca.csv", "motifs": "motifs.json",
    "validation": "validation.csv", "summary": "summary.json",
}

CORPUS_COMMANDS = {"ingest", "sample", "mine", "validate", "pipeline"}


def _parse_value(text):
    try:
        return json.loads(text)
    except ValueError:
        return text


def merge_config(user: dict, overrides: dict) -> dict:
    """Defaults <- config file <- dotted overrides, then validation."""
    cfg = copy.deepcopy(DEFAULTS)
    bad = []
    for section, values in user.items():
        if section not in cfg or not isinstance(values, dict):
            bad.append(section)
            continue
        for key, val in values.items():
            if key not in cfg[section]:
                bad.append(f"{section}.{key}")
            else:
                cfg[section][key] = val
    for dotted, val in overrides.items():
        section, _, key = dotted.partition(".")
        if section not in cfg or key not in cfg[section]:
            bad.append(dotted)
        else:
            cfg[section][key] = val
    if bad:
        raise ConfigError(bad, "unknown configuration keys")
    missing = [f"{s}.{k}" for s, vals in cfg.items() for k, v in vals.items() if v is REQUIRED]
    if missing:
        raise ConfigError(missing, "missing required configuration keys")
    return cfg


def validate_config(cfg, command):
    bad = []
    s = cfg["sampling"]
    if not (isinstance(s["size_min"], int) and isinstance(s["size_max"], int)
            and 1 <= s["size_min"] <= s["size_max"]):
        bad += ["sampling.size_min", "sampling.size_max"]
    if not isinstance(s["count"], int) or s["count"] < 1:
        bad.append("sampling.count")
    if not isinstance(s["n_pairs"], int) or s["n_pairs"] < 2:
        bad.append("sampling.n_pairs")
    for key in ("sampling.seed", "encoder.seed", "mining.seed"):
        sec, k = key.split(".")
        if not isinstance(cfg[sec][k], int):
            bad.append(key)
    e = cfg["encoder"]
    if not isinstance(e["alpha"], (int, float)) or e["alpha"] <= 0:
        bad.append("encoder.alpha")
    if not isinstance(e["n_samp"], int) or e["n_samp"] < 1:
        bad.append("encoder.n_samp")
    m = cfg["mining"]
    if not m["sizes"] or not all(isinstance(x, int) and 1 <= x <= 30 for x in m["sizes"]):
        bad.append("mining.sizes")
    if not isinstance(m["trials"], int) or m["trials"] < 1:
        bad.append("mining.trials")
    if any(x not in MODES for x in cfg["validation"]["modes"]):
        bad.append("validation.modes")
    if cfg["corpus"]["bucket_width_kv"] <= 0:
        bad.append("corpus.bucket_width_kv")
    if command in CORPUS_COMMANDS:
        paths = cfg["corpus"]["paths"]
        if not paths:
            bad.append("corpus.paths")
        elif any(not os.path.exists(p) for p in paths):
            bad.append("corpus.paths")
    if bad:
        raise ConfigError(sorted(set(bad)), "invalid configuration values")


class Run:
    """Resolved configuration plus artifact locations for one invocation."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.out = cfg["run"]["out"]
        self.workers = int(cfg["run"]["workers"])
        os.makedirs(self.out, exist_ok=True)

    def path(self, name):
        if name == "store" and self.cfg["store"]["path"]:
            return self.cfg["store"]["path"]
        return os.path.join(self.out, FILES[name])

    def corpus(self):
        c = self.cfg["corpus"]
        return load_corpus(c["paths"], c["bucket_width_kv"], c["include_out_of_service"], self.workers)

    def size_range(self):
        s = self.cfg["sampling"]
        return (s["size_min"], s["size_max"])

    def update_summary(self, section, data):
        path = self.path("summary")
        summary = {}
        if os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                summary = json.load(fh)
        summary[section] = data
        if self.cfg["run"]["timestamp"]:
            summary["created"] = time.strftime("%Y-%m-%dT%H:%M:%S")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=1, sort_keys=True)


# -- commands -----------------------------------------------------------------------------

def cmd_ingest(run: Run):
    corpus = run.corpus()
    info = {"graphs": [{"name": g.name, "nodes": g.n, "edges": g.m, "weight": w}
                       for g, w in zip(corpus.graphs, corpus.size_weights)],
            "voltage_buckets": list(corpus.voltage_buckets), "total_nodes": corpus.total_nodes}
    with open(run.path("corpus"), "w", encoding="utf-8") as fh:
        json.dump(info, fh, indent=1, sort_keys=True)
    return f"ingested {len(corpus.graphs)} graphs, {corpus.total_nodes} nodes"


def cmd_sample(run: Run):
    corpus = run.corpus()
    s = run.cfg["sampling"]
    nbhds = decompose(corpus, s["count"], run.size_range(), s["seed"], run.workers)
    write_neighborhoods(nbhds, run.path("neighborhoods"))
    pool = nbhds if s["pool_size"] is None else nbhds[:s["pool_size"]]
    ds = build_dataset(corpus, s["n_pairs"], run.size_range(), s["seed"], neighborhoods=pool,
                       workers=run.workers)
    write_dataset(ds, run.path("pairs"))
    with open(run.path("corpus"), "w", encoding="utf-8") as fh:
        json.dump({"voltage_buckets": list(corpus.voltage_buckets),
                   "total_nodes": corpus.total_nodes}, fh, sort_keys=True)
    run.update_summary("sample", {"neighborhoods": len(nbhds), "pairs": len(ds.pairs),
                                  "positives": ds.positives, "negatives": ds.negatives})
    return f"sampled {len(nbhds)} neighborhoods and {len(ds.pairs)} pairs"


def _feature_spec(run: Run):
    path = run.path("corpus")
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            return enc.FeatureSpec(tuple(json.load(fh)["voltage_buckets"]))
    return enc.feature_spec_for(run.corpus())


def cmd_train(run: Run):
    e = run.cfg["encoder"]
    ds = read_dataset(run.path("pairs"))
    config = enc.TrainConfig(alpha=e["alpha"], lr=e["lr"], batch_size=e["batch_size"],
                             epochs=e["epochs"], n_samp=e["n_samp"], seed=e["seed"],
                             hidden=e["hidden"], dim=e["dim"], layers=e["layers"])
    params, tlog = enc.train(ds, config, _feature_spec(run))
    enc.save_params(params, run.path("model"))
    tlog["fingerprint"] = params.fingerprint()
    with open(run.path("train_log"), "w", encoding="utf-8") as fh:
        json.dump(tlog, fh, indent=1, sort_keys=True)
    run.update_summary("train", {"best_val_accuracy": tlog["best_val_accuracy"],
                                 "threshold": tlog["threshold"], "fingerprint": tlog["fingerprint"]})
    return f"trained encoder {tlog['fingerprint']}: val accuracy {tlog['best_val_accuracy']:.4f}"


def _threshold(run: Run):
    t = run.cfg["encoder"]["threshold"]
    if t is not None:
        return float(t)
    with open(run.path("train_log"), encoding="utf-8") as fh:
        return float(json.load(fh)["threshold"])


def _load_model(run: Run):
    return enc.load_params(run.path("model"))


def cmd_embed(run: Run):
    params = _load_model(run)
    nbhds = read_neighborhoods(run.path("neighborhoods"))
    store = build_reference_store(params, nbhds, _threshold(run))
    save_store(store, run.path("store"))
    stats = report_norm_tables(store, run.out)
    run.update_summary("embed", {"references": len(store), **stats})
    return f"embedded {len(store)} references (t={store.threshold:.6g})"


def cmd_mine(run: Run):
    params = _load_model(run)
    store = load_store(run.path("store"))
    m = run.cfg["mining"]
    results, paths = mine_motifs(run.corpus(), store, params, m["sizes"], m["trials"], m["seed"],
                                 run.workers, m["respect_features"], return_paths=True)
    write_results(results, run.path("motifs"), store, trials=m["trials"], seed=m["seed"])
    frac = non_increasing_fraction(paths)
    run.update_summary("mine", {"sizes": sorted(results), "non_increasing_steps": frac,
                                "candidates": {str(k): len(v) for k, v in results.items()}})
    return f"mined {len(results)} ranked lists over sizes {min(results)}-{max(results)}"


def cmd_validate(run: Run):
    v = run.cfg["validation"]
    results = read_results(run.path("motifs"))
    _, _, summary = report_validation(results, run.corpus(), v["timeout"], v["top_k"],
                                      respect_features=v["respect_features"],
                                      modes=tuple(v["modes"]), out_dir=run.out)
    run.update_summary("validation", summary)
    return f"validated {len(results)} sizes: top-1 agreement {summary['top1_agreement']}"


def cmd_report(run: Run):
    store = load_store(run.path("store"))
    stats = report_norm_tables(store, run.out)
    r = run.cfg["report"]
    rows = report_pca(store, r["pca_sample"], r["seed"], run.out)
    written = []
    if r["figures"]:
        written = render_figures(store, run.out, rows)
    run.update_summary("report", {**stats, "pca_rows": len(rows), "figures": written})
    return f"wrote reports for {len(store)} references ({len(rows)} PCA rows)"


def cmd_pipeline(run: Run):
    lines = [fn(run) for fn in (cmd_sample, cmd_train, cmd_embed, cmd_mine, cmd_validate, cmd_report)]
    return " | ".join(lines)


COMMANDS = {"ingest": cmd_ingest, "sample": cmd_sample, "train": cmd_train, "embed": cmd_embed,
            "mine": cmd_mine, "validate": cmd_validate, "report": cmd_report,
            "pipeline": cmd_pipeline}


def cmd_count(args):
    target, query = read_graph(args.target), read_graph(args.query)
    sem = MatchSemantics(args.mode, False, not args.ignore_features)
    return str(vf2_count(target, query, sem, timeout=args.timeout))


def cmd_synth(args):
    from .synth import synthetic_corpus

    kinds = tuple(args.kinds.split(","))
    corpus = synthetic_corpus(args.graphs, kinds, args.seed, args.featured)
    os.makedirs(args.dir, exist_ok=True)
    for g in corpus.graphs:
        write_graph(g, os.path.join(args.dir, f"{g.name}.json"))
    return f"wrote {len(corpus.graphs)} graphs to {args.dir}"


def _split_overrides(extra):
    overrides, i = {}, 0
    bad = []
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or "." not in tok:
            bad.append(tok)
            i += 1
            continue
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        elif i + 1 < len(extra):
            val = extra[i + 1]
            i += 2
        else:
            bad.append(tok)
            i += 1
            continue
        overrides[key] = _parse_value(val)
    if bad:
        raise ConfigError(bad, "unrecognized arguments")
    return overrides


def build_parser():
    p = argparse.ArgumentParser(prog="gridmotif", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out")
    sp = sub.add_parser("count", help="exact occurrence count of a query graph in a target graph")
    sp.add_argument("--target", required=True)
    sp.add_argument("--query", required=True)
    sp.add_argument("--mode", choices=MODES, default=INDUCED)
    sp.add_argument("--ignore-features", action="store_true")
    sp.add_argument("--timeout", type=float, default=60.0)
    sp = sub.add_parser("synth", help="write a synthetic corpus of JSON case files")
    sp.add_argument("--dir", required=True)
    sp.add_argument("--graphs", type=int, default=200)
    sp.add_argument("--kinds", default="tree,grid,star")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--featured", type=float, default=0.5)
    return p


def main(argv=None):
    logging.basicConfig(level=os.environ.get("GRIDMOTIF_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        if args.command in ("count", "synth"):
            if extra:
                raise ConfigError(extra, "unrecognized arguments")
            line = cmd_count(args) if args.command == "count" else cmd_synth(args)
        else:
            overrides = _split_overrides(extra)
            if args.out:
                overrides["run.out"] = args.out
            try:
                with open(args.config, encoding="utf-8") as fh:
                    user = json.load(fh)
            except OSError as exc:
                raise ConfigError(["--config"], f"cannot read config ({exc.strerror})") from None
            except ValueError as exc:
                raise ConfigError(["--config"], f"config is not valid JSON ({exc})") from None
            cfg = merge_config(user, overrides)
            validate_config(cfg, args.command)
            line = COMMANDS[args.command](Run(cfg))
    except (GridMotifError, OSError, ValueError) as exc:
        record = {"error": getattr(exc, "code", type(exc).__name__), "message": str(exc)}
        if isinstance(exc, ConfigError):
            record["keys"] = exc.keys
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return 2
    print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
