import json
from pathlib import Path

import pytest

from densekg import cli
from densekg.graph import load_graph
from densekg.relations import GROUPED_RELATIONS

FIXTURES = Path(__file__).parent / "fixtures"
RAW = str(FIXTURES / "raw_atomic_small.csv")
GOLD = str(FIXTURES / "annotated_subgraph.tsv")


def run(*argv) -> int:
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """ingest + make-dataset + train once for the CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    graph_dir = root / "graph"
    assert run("ingest", "--raw", RAW, "--out", graph_dir) == 0
    assert run(
        "make-dataset",
        "--graph", graph_dir,
        "--split", graph_dir / "split_train.txt",
        "--out", root / "train.jsonl",
        "--random-ratio", "2.0",
        "--persona-ratio", "1.0",
        "--seed", "3",
    ) == 0
    assert run(
        "train",
        "--dataset", root / "train.jsonl",
        "--out", root / "model.json",
        "--dim", "24",
        "--epochs", "3",
        "--seed", "3",
    ) == 0
    return root, graph_dir


def test_ingest_writes_graph_and_splits(pipeline):
    root, graph_dir = pipeline
    graph = load_graph(graph_dir)
    assert graph.num_events() > 100
    assert (graph_dir / "split_train.txt").exists()
    assert (graph_dir / "split_dev.txt").exists()
    dist = json.loads((graph_dir / "relation_distribution.json").read_text())
    assert set(dist) == set(
        ["oEffect", "oReact", "oWant", "xAttr", "xEffect", "xIntent", "xNeed", "xReact", "xWant"]
    )


def test_missing_input_exits_2(tmp_path):
    assert run("ingest", "--raw", tmp_path / "nope.csv", "--out", tmp_path / "g") == 2
    assert run("stats", "--graph", tmp_path / "nope") == 2


def test_validation_before_output(tmp_path):
    out = tmp_path / "never.jsonl"
    assert run("make-dataset", "--graph", tmp_path / "missing", "--split", "x", "--out", out) == 2
    assert not out.exists()


def test_tune_complete_stats_eval(pipeline, tmp_path):
    root, graph_dir = pipeline
    thresholds_path = tmp_path / "thresholds.json"
    assert run(
        "tune-thresholds",
        "--graph", graph_dir,
        "--annotated", GOLD,
        "--scorer", f"builtin:{root / 'model.json'}",
        "--out", thresholds_path,
    ) == 0
    thresholds = json.loads(thresholds_path.read_text())
    assert set(thresholds) == set(GROUPED_RELATIONS)

    predicted_path = tmp_path / "predicted.jsonl"
    assert run(
        "complete",
        "--graph", graph_dir,
        "--scorer", f"builtin:{root / 'model.json'}",
        "--thresholds", thresholds_path,
        "--mode", "intra",
        "--sample-size", "8",
        "--seed", "5",
        "--out", predicted_path,
    ) == 0
    assert predicted_path.exists()

    stats_path = tmp_path / "stats.tsv"
    assert run("stats", "--graph", graph_dir, "--out", stats_path) == 0
    header, values = stats_path.read_text().splitlines()
    assert header == "events\t1-hop\t2-hop\t3-hop"

    eval_path = tmp_path / "eval.json"
    assert run(
        "eval",
        "--graph", graph_dir,
        "--predicted", predicted_path,
        "--annotated", GOLD,
        "--out", eval_path,
    ) == 0
    report = json.loads(eval_path.read_text())
    assert set(report) >= {"total", "intra", "inter", "per_relation"}


def test_exports(pipeline, tmp_path):
    root, graph_dir = pipeline
    thresholds_path = tmp_path / "t.json"
    json_thresholds = {r: 0.0 for r in GROUPED_RELATIONS}  # accept everything
    thresholds_path.write_text(json.dumps(json_thresholds))
    predicted_path = tmp_path / "predicted.jsonl"
    assert run(
        "complete",
        "--graph", graph_dir,
        "--scorer", f"builtin:{root / 'model.json'}",
        "--thresholds", thresholds_path,
        "--mode", "intra",
        "--sample-size", "8",
        "--seed", "5",
        "--out", predicted_path,
    ) == 0
    n_predicted = len(predicted_path.read_text().splitlines())
    assert n_predicted > 0  # zero thresholds accept every candidate

    sample_path = tmp_path / "sample.tsv"
    n = min(5, n_predicted)
    assert run(
        "export-human-eval",
        "--graph", graph_dir,
        "--predicted", predicted_path,
        "--n", n,
        "--seed", "1",
        "--out", sample_path,
    ) == 0
    assert len(sample_path.read_text().splitlines()) == n + 1

    degrouped_path = tmp_path / "degrouped.jsonl"
    assert run(
        "export-degrouped",
        "--graph", graph_dir,
        "--predicted", predicted_path,
        "--distribution", graph_dir / "relation_distribution.json",
        "--seed", "1",
        "--out", degrouped_path,
    ) == 0
    assert degrouped_path.exists()


def test_paths_command(pipeline, tmp_path):
    root, graph_dir = pipeline
    out = tmp_path / "paths.jsonl"
    assert run(
        "paths", "--graph", graph_dir, "--k", "1", "--n", "5", "--rule", "random",
        "--seed", "2", "--out", out,
    ) == 0
    lines = out.read_text().splitlines()
    assert 0 < len(lines) <= 5
    record = json.loads(lines[0])
    assert len(record["nodes"]) == 2 and len(record["relations"]) == 1


def test_config_file_with_flag_override(pipeline, tmp_path):
    root, graph_dir = pipeline
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"graph": str(graph_dir), "k": 1, "n": 3, "seed": 4}))
    out = tmp_path / "p.jsonl"
    assert run("paths", "--config", config, "--out", out, "--n", "2") == 0
    assert len(out.read_text().splitlines()) <= 2


def test_unknown_scorer_selector(pipeline, tmp_path):
    root, graph_dir = pipeline
    t = tmp_path / "t.json"
    t.write_text(json.dumps({r: 1.0 for r in GROUPED_RELATIONS}))
    assert run(
        "complete", "--graph", graph_dir, "--scorer", "quantum:abc",
        "--thresholds", t, "--out", tmp_path / "x.jsonl",
    ) == 2


def test_scorer_env_fallback(pipeline, tmp_path, monkeypatch):
    root, graph_dir = pipeline
    t = tmp_path / "t.json"
    t.write_text(json.dumps({r: 1.0 for r in GROUPED_RELATIONS}))
    monkeypatch.setenv(cli.SCORER_URL_ENV, "http://127.0.0.1:1")
    # resolves to the (unreachable) remote scorer -> validation error, not crash
    code = run(
        "complete", "--graph", graph_dir, "--thresholds", t,
        "--mode", "intra", "--sample-size", "2", "--out", tmp_path / "x.jsonl",
    )
    assert code == 2
