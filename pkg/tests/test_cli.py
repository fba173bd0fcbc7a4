import json
import os

import pytest

from gridmotif.cli import main
from gridmotif.ingest import write_graph

from conftest import TRIANGLE, complete


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out.strip(), err.strip()


def test_count_k4_triangle(tmp_path, capsys):
    write_graph(complete(4), tmp_path / "k4.json")
    write_graph(TRIANGLE, tmp_path / "tri.json")
    code, out, _ = run(["count", "--target", tmp_path / "k4.json", "--query", tmp_path / "tri.json",
                        "--mode", "induced"], capsys)
    assert code == 0 and out == "4"


def test_missing_seed_names_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"encoder": {"seed": 1}, "mining": {"seed": 1}}))
    code, _, err = run(["sample", "--config", cfg], capsys)
    assert code != 0
    record = json.loads(err.splitlines()[-1])
    assert "sampling.seed" in record["keys"] and record["error"] == "ConfigError"


def test_every_bad_key_listed(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"sampling": {"seed": 1, "bogus": 2}, "encoder": {"seed": 1},
                               "mining": {"seed": 1}, "nosuch": {}}))
    code, _, err = run(["sample", "--config", cfg, "--mining.trialz", "3"], capsys)
    keys = json.loads(err.splitlines()[-1])["keys"]
    assert code != 0 and set(keys) == {"sampling.bogus", "nosuch", "mining.trialz"}


def test_invalid_values_listed(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"sampling": {"seed": 1, "size_min": 5, "size_max": 2},
                               "encoder": {"seed": 1, "alpha": -1}, "mining": {"seed": 1},
                               "corpus": {"paths": [str(tmp_path / "missing.json")]}}))
    code, _, err = run(["sample", "--config", cfg], capsys)
    keys = set(json.loads(err.splitlines()[-1])["keys"])
    assert code != 0
    assert {"sampling.size_min", "encoder.alpha", "corpus.paths"} <= keys


def small_config(tmp_path, corpus_dir, out, workers=1):
    paths = sorted(str(corpus_dir / f) for f in os.listdir(corpus_dir))
    cfg = {"corpus": {"paths": paths},
           "sampling": {"count": 120, "size_min": 3, "size_max": 8, "seed": 3, "n_pairs": 120},
           "encoder": {"hidden": 8, "dim": 8, "layers": 2, "epochs": 2, "seed": 4},
           "mining": {"sizes": list(range(3, 11)), "trials": 10, "seed": 5},
           "validation": {"timeout": 30, "top_k": 2},
           "report": {"pca_sample": 50, "figures": True},
           "run": {"out": str(out), "workers": workers}}
    p = tmp_path / f"cfg_{workers}.json"
    p.write_text(json.dumps(cfg))
    return p


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    assert main(["synth", "--dir", str(d), "--graphs", "6", "--seed", "1"]) == 0
    return d


def test_pipeline_outputs_and_determinism(tmp_path, corpus_dir, capsys):
    outs = []
    for workers, name in ((1, "a"), (1, "b"), (2, "c")):
        cfg = small_config(tmp_path, corpus_dir, tmp_path / name, workers)
        code, line, err = run(["pipeline", "--config", cfg], capsys)
        assert code == 0, err
        assert "\n" not in line
        outs.append(tmp_path / name)
    names = ["references.csv", "pca.csv", "motifs.json", "validation.csv", "summary.json",
             "model.bin", "store.bin", "pairs.jsonl", "neighborhoods.jsonl", "norms.png"]
    for n in names:
        assert (outs[0] / n).exists(), n
    motifs = json.loads((outs[0] / "motifs.json").read_text())
    assert sorted(motifs["sizes"], key=int) == [str(k) for k in range(3, 11)]
    for n in names[:-1]:
        blobs = {(o / n).read_bytes() for o in outs}
        assert len(blobs) == 1, n


def test_stage_commands_and_overrides(tmp_path, corpus_dir, capsys):
    cfg = small_config(tmp_path, corpus_dir, tmp_path / "x")
    for cmd in ("ingest", "sample", "train", "embed"):
        code, line, err = run([cmd, "--config", cfg], capsys)
        assert code == 0, err
    code, _, err = run(["mine", "--config", cfg, "--mining.sizes", "[3,4]", "--mining.trials=4"], capsys)
    assert code == 0, err
    motifs = json.loads((tmp_path / "x" / "motifs.json").read_text())
    assert sorted(motifs["sizes"]) == ["3", "4"] and motifs["trials"] == 4
    code, line, err = run(["report", "--config", cfg, "--out", tmp_path / "x"], capsys)
    assert code == 0 and "references" in line


def test_missing_artifact_is_machine_readable(tmp_path, corpus_dir, capsys):
    cfg = small_config(tmp_path, corpus_dir, tmp_path / "empty")
    code, _, err = run(["train", "--config", cfg], capsys)
    assert code != 0 and "error" in json.loads(err.splitlines()[-1])
