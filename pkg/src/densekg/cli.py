"""Command-line entry point wiring the pipeline stages.

Subcommands: ingest, make-dataset, train, tune-thresholds, complete,
paths, stats, eval, export-human-eval, export-degrouped. Every
subcommand takes --config (JSON; flags override config values) and
--seed; all randomness flows from the seed, so identical config + seed
reproduce byte-identical outputs. Logs go to stderr, data to files or
stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
from typing import List, Optional

from . import completion, dataset, ingest, paths, scorer
from .graph import GraphError, load_graph, save_graph

logger = logging.getLogger("densekg")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2

SCORER_URL_ENV = "DENSEKG_SCORER_URL"


class CliValidationError(ValueError):
    pass


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    if not os.path.exists(path):
        raise CliValidationError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as f:
        cfg = json.load(f)
    if not isinstance(cfg, dict):
        raise CliValidationError("config must be a JSON object")
    return cfg


def _opt(args: argparse.Namespace, cfg: dict, name: str, default=None):
    value = getattr(args, name.replace("-", "_"), None)
    if value is not None:
        return value
    if name in cfg:
        return cfg[name]
    return default


def _require(args, cfg, name: str):
    value = _opt(args, cfg, name)
    if value is None:
        raise CliValidationError(f"missing required option --{name}")
    return value


def _require_input(path: str, what: str) -> str:
    if not os.path.exists(path):
        raise CliValidationError(f"{what} not found: {path}")
    return path


def _resolve_scorer(args, cfg) -> scorer.RelationScorer:
    spec = _opt(args, cfg, "scorer")
    if spec is None and os.environ.get(SCORER_URL_ENV):
        spec = f"remote:{os.environ[SCORER_URL_ENV]}"
    if spec is None:
        raise CliValidationError(
            "no scorer selected: pass --scorer builtin:MODEL or remote:URL "
            f"(or set {SCORER_URL_ENV})"
        )
    kind, _, arg = str(spec).partition(":")
    if kind == "builtin":
        _require_input(arg, "model file")
        return scorer.BuiltinScorer.load(arg)
    if kind == "remote":
        if not arg:
            raise CliValidationError("remote scorer needs a URL: remote:http://host:port")
        return scorer.RemoteScorer(arg)
    raise CliValidationError(f"unknown scorer selector {spec!r}")


def _seed_rng(args, cfg) -> random.Random:
    return random.Random(int(_opt(args, cfg, "seed", 0)))


# ----------------------------------------------------------------------
# subcommand handlers

def _cmd_ingest(args, cfg) -> int:
    raw = _require_input(_require(args, cfg, "raw"), "raw annotation file")
    out_dir = _require(args, cfg, "out")
    graph, report = ingest.ingest_file(raw)
    os.makedirs(out_dir, exist_ok=True)
    save_graph(graph, out_dir)
    ingest.write_split_files(report, out_dir)
    ingest.write_relation_distribution(
        report, os.path.join(out_dir, "relation_distribution.json")
    )
    logger.info(
        "ingested %d clusters, %d events, %d triplets "
        "(dropped: %d filtered, %d empty, %d self-loops; %d duplicate edges)",
        report.clusters, report.events, report.triplets,
        report.dropped_filtered, report.dropped_empty,
        report.dropped_self_loops, report.duplicate_edges,
    )
    if report.triplets == 0:
        logger.warning("no triplets survived normalization")
    return EXIT_OK


def _cmd_make_dataset(args, cfg) -> int:
    graph_dir = _require_input(_require(args, cfg, "graph"), "graph directory")
    split_path = _require_input(_require(args, cfg, "split"), "split file")
    out = _require(args, cfg, "out")
    config = dataset.SamplingConfig(
        random_ratio=float(_opt(args, cfg, "random-ratio", dataset.DEFAULT_RANDOM_RATIO)),
        persona_ratio=float(_opt(args, cfg, "persona-ratio", dataset.DEFAULT_PERSONA_RATIO)),
        seed=int(_opt(args, cfg, "seed", 0)),
    )
    graph = load_graph(graph_dir).seal()
    examples = dataset.build_training_set(graph, ingest.read_split_file(split_path), config)
    dataset.write_training_set(examples, out)
    logger.info("wrote %d training examples to %s", len(examples), out)
    return EXIT_OK


def _cmd_train(args, cfg) -> int:
    dataset_path = _require_input(_require(args, cfg, "dataset"), "training set")
    out = _require(args, cfg, "out")
    config = scorer.TrainConfig(
        dim=int(_opt(args, cfg, "dim", 64)),
        learning_rate=float(_opt(args, cfg, "lr", 0.5)),
        batch_size=int(_opt(args, cfg, "batch", 64)),
        epochs=int(_opt(args, cfg, "epochs", 5)),
        seed=int(_opt(args, cfg, "seed", 0)),
    )
    examples = dataset.read_training_set(dataset_path)
    model, history = scorer.train_builtin(examples, config)
    model.save(out)
    logger.info(
        "trained %s; loss %.4f -> %.4f", model.identity(), history[0], history[-1]
    )
    return EXIT_OK


def _cmd_tune_thresholds(args, cfg) -> int:
    graph_dir = _require_input(_require(args, cfg, "graph"), "graph directory")
    annotated_path = _require_input(_require(args, cfg, "annotated"), "annotated subgraph")
    out = _require(args, cfg, "out")
    model = _resolve_scorer(args, cfg)
    graph = load_graph(graph_dir).seal()
    annotated = paths.AnnotatedSubgraph.load_tsv(annotated_path, graph)
    thresholds = completion.tune_thresholds(model, annotated)
    thresholds.save(out)
    logger.info("thresholds: %s", thresholds.values)
    return EXIT_OK


def _cmd_complete(args, cfg) -> int:
    graph_dir = _require_input(_require(args, cfg, "graph"), "graph directory")
    thresholds_path = _require_input(_require(args, cfg, "thresholds"), "thresholds file")
    out = _require(args, cfg, "out")
    model = _resolve_scorer(args, cfg)
    graph = load_graph(graph_dir).seal()
    sample = _opt(args, cfg, "sample-size", 100)
    sample_size = len(graph.clusters) if sample == "all" else int(sample)
    plan = completion.CompletionPlan(
        mode=str(_opt(args, cfg, "mode", completion.MODE_BOTH)),
        cluster_sample_size=sample_size,
        seed=int(_opt(args, cfg, "seed", 0)),
    )
    thresholds = completion.Thresholds.load(thresholds_path)
    predicted = completion.complete(
        graph, model, thresholds, plan, batch_size=int(_opt(args, cfg, "batch", 256))
    )
    paths.write_predicted(predicted, out)
    logger.info("predicted %d triplets to %s", len(predicted), out)
    return EXIT_OK


def _cmd_paths(args, cfg) -> int:
    graph_dir = _require_input(_require(args, cfg, "graph"), "graph directory")
    k = int(_require(args, cfg, "k"))
    n = int(_require(args, cfg, "n"))
    rule = str(_opt(args, cfg, "rule", paths.RULE_RANDOM))
    out = _opt(args, cfg, "out")
    graph = load_graph(graph_dir).seal()
    sampled = paths.sample_paths(graph, k, n, rule, _seed_rng(args, cfg))
    lines = [
        json.dumps(
            {
                "nodes": [graph.text(e) for e in p.node_ids],
                "relations": list(p.relations),
            },
            ensure_ascii=False,
            separators=(",", ":"),
        )
        for p in sampled
    ]
    _write_or_print(lines, out)
    return EXIT_OK


def _cmd_stats(args, cfg) -> int:
    graph_dir = _require_input(_require(args, cfg, "graph"), "graph directory")
    out = _opt(args, cfg, "out")
    workers = int(_opt(args, cfg, "workers", 1))
    graph = load_graph(graph_dir).seal()
    report = paths.stats(graph, workers=workers)
    if out:
        paths.write_stats_tsv(report, out)
    else:
        print("events\t1-hop\t2-hop\t3-hop")
        print(f"{report['events']}\t{report['one_hop']}\t{report['two_hop']}\t{report['three_hop']}")
    return EXIT_OK


def _cmd_eval(args, cfg) -> int:
    graph_dir = _require_input(_require(args, cfg, "graph"), "graph directory")
    predicted_path = _require_input(_require(args, cfg, "predicted"), "predicted triplets")
    annotated_path = _require_input(_require(args, cfg, "annotated"), "annotated subgraph")
    out = _opt(args, cfg, "out")
    graph = load_graph(graph_dir).seal()
    predicted = paths.read_predicted(predicted_path)
    gold = paths.AnnotatedSubgraph.load_tsv(annotated_path, graph)
    report = paths.evaluate_precision(predicted, gold)
    payload = json.dumps(report.as_dict(), indent=2, sort_keys=True)
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(payload + "\n")
    else:
        print(payload)
    return EXIT_OK


def _cmd_export_human_eval(args, cfg) -> int:
    graph_dir = _require_input(_require(args, cfg, "graph"), "graph directory")
    predicted_path = _require_input(_require(args, cfg, "predicted"), "predicted triplets")
    out = _require(args, cfg, "out")
    n = int(_opt(args, cfg, "n", paths.HUMAN_EVAL_DEFAULT_SAMPLE))
    graph = load_graph(graph_dir).seal()
    predicted = paths.read_predicted(predicted_path)
    paths.export_human_eval_sample(graph, predicted, n, _seed_rng(args, cfg), out)
    logger.info("exported %d triplets for judgment to %s", n, out)
    return EXIT_OK


def _cmd_export_degrouped(args, cfg) -> int:
    graph_dir = _require_input(_require(args, cfg, "graph"), "graph directory")
    predicted_path = _require_input(_require(args, cfg, "predicted"), "predicted triplets")
    distribution_path = _require_input(
        _require(args, cfg, "distribution"), "relation distribution"
    )
    out = _require(args, cfg, "out")
    graph = load_graph(graph_dir).seal()
    predicted = paths.read_predicted(predicted_path)
    with open(distribution_path, encoding="utf-8") as f:
        distribution = json.load(f)
    rng = _seed_rng(args, cfg)
    n = _opt(args, cfg, "n")
    if n is not None:
        n = int(n)
        if n > len(predicted):
            raise CliValidationError(f"cannot sample {n} of {len(predicted)} predictions")
        ordered = sorted(predicted, key=lambda t: t.key())
        predicted = [ordered[i] for i in sorted(rng.sample(range(len(ordered)), n))]
    records, skipped = paths.degroup_relations(graph, predicted, distribution, rng)
    paths.write_degrouped(records, out)
    logger.info("degrouped %d triplets (%d skipped) to %s", len(records), skipped, out)
    return EXIT_OK


def _write_or_print(lines: List[str], out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as f:
            for line in lines:
                f.write(line + "\n")
    else:
        for line in lines:
            print(line)


# ----------------------------------------------------------------------
# parser

_COMMANDS = {
    "ingest": (_cmd_ingest, ["raw", "out"]),
    "make-dataset": (_cmd_make_dataset, ["graph", "split", "out", "random-ratio", "persona-ratio"]),
    "train": (_cmd_train, ["dataset", "out", "dim", "lr", "batch", "epochs"]),
    "tune-thresholds": (_cmd_tune_thresholds, ["graph", "annotated", "scorer", "out"]),
    "complete": (_cmd_complete, ["graph", "scorer", "thresholds", "out", "mode", "sample-size", "batch"]),
    "paths": (_cmd_paths, ["graph", "k", "n", "rule", "out"]),
    "stats": (_cmd_stats, ["graph", "out"]),
    "eval": (_cmd_eval, ["graph", "predicted", "annotated", "out"]),
    "export-human-eval": (_cmd_export_human_eval, ["graph", "predicted", "n", "out"]),
    "export-degrouped": (_cmd_export_degrouped, ["graph", "predicted", "distribution", "n", "out"]),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="densekg",
        description="Densify an event knowledge graph: normalize, train, complete, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, options) in _COMMANDS.items():
        p = sub.add_parser(name)
        for opt in options:
            p.add_argument(f"--{opt}")
        p.add_argument("--config")
        p.add_argument("--seed")
        p.add_argument("--workers")
        p.add_argument("--log-level", default=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        logging.basicConfig(
            stream=sys.stderr,
            level=str(_opt(args, cfg, "log-level", "INFO")).upper(),
            format="%(levelname)s %(name)s: %(message)s",
        )
        handler, _ = _COMMANDS[args.command]
        return handler(args, cfg)
    except (
        CliValidationError,
        GraphError,
        ingest.IngestError,
        dataset.DatasetError,
        completion.CompletionError,
        paths.PathsError,
        scorer.ScorerError,
        FileNotFoundError,
        json.JSONDecodeError,
        ValueError,
    ) as exc:
        logger.error("%s", exc)
        return EXIT_VALIDATION
    except Exception:  # internal error
        logger.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
