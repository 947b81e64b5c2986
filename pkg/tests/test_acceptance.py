"""Acceptance suite: one test per acceptance criterion, each printing a
PASS line with its stated bound. Full-scale corpus numbers are not
reproducible at desk scale; these criteria are property- and
oracle-based plus exact small fixtures.

Run: pytest tests/test_acceptance.py -v -s
"""

import random
import time
from pathlib import Path

import numpy as np
import pytest

from densekg import cli
from densekg.completion import CompletionPlan, Thresholds, complete, tune_thresholds
from densekg.dataset import (
    PERSONA_NEG,
    POSITIVE,
    RANDOM_NEG,
    SamplingConfig,
    build_training_set,
    write_training_set,
)
from densekg.graph import Graph, KIND_BASE, KIND_TAIL
from densekg.normalize import NormalizedEvent, normalize_tail
from densekg.paths import (
    AnnotatedPair,
    AnnotatedSubgraph,
    count_k_hop,
    degroup_relations,
    evaluate_precision,
    sample_paths,
)
from densekg.relations import GROUPED_RELATIONS, NOLINK, PREIMAGE
from densekg.scorer import (
    TrainConfig,
    Vocabulary,
    _encode_examples,
    batch_loss_and_grads,
    predict_relation,
    train_builtin,
)

from oracles import (
    MockScorer,
    brute_force_paths,
    finite_difference_grads,
    random_annotation,
    random_clustered_graph,
    random_digraph,
    reference_complete,
    relative_errors,
    synth_corpus,
)
from test_dataset import build_fixture_graph
from test_paths import dense_graph, eval_fixture, predicted_fixture

FIXTURES = Path(__file__).parent / "fixtures"


def report(name: str, detail: str = "") -> None:
    print(f"ACCEPTANCE {name}: PASS {detail}".rstrip())


# ----------------------------------------------------------------------

def test_normalization_golden_suite():
    started = time.monotonic()
    cases = [
        line.split("\t")
        for line in (FIXTURES / "golden_normalization.tsv").read_text().splitlines()
    ]
    assert len(cases) >= 30
    for raw, relation, expected_text, expected_group in cases:
        result = normalize_tail(raw, relation)
        if expected_text == "DROPPED":
            assert result is None, f"{raw!r}/{relation}"
        else:
            assert result == NormalizedEvent(expected_text, expected_group), f"{raw!r}/{relation}"
    elapsed = time.monotonic() - started
    assert elapsed < 1.0
    report("normalization-golden", f"({len(cases)} cases, {elapsed * 1000:.0f} ms)")


def test_normalization_invariants_randomized():
    rng = random.Random(20240601)
    violations = 0
    produced = 0
    for _ in range(1000):
        raw, relation = random_annotation(rng)
        result = normalize_tail(raw, relation)
        if result is None:
            continue
        produced += 1
        first = result.text.split()[0]
        if first not in ("PersonX", "PersonY"):
            violations += 1
        if result.text.split()[1] == "to":
            violations += 1
        if result.relation in ("xPersona", "oPersona") and result.text.split()[1] != "is":
            violations += 1
        for original in PREIMAGE[result.relation]:
            if normalize_tail(result.text, original) != result:
                violations += 1
    assert produced >= 900
    assert violations == 0
    report("normalization-invariants", f"({produced} normalized cases, 0 violations)")


def test_dataset_builder_fixture_counts():
    graph = build_fixture_graph(n_clusters=25, tails_per_cluster=4)  # 100 positives
    split = list(graph.clusters)
    config = SamplingConfig(random_ratio=4.081, persona_ratio=1.632, seed=11)
    examples = build_training_set(graph, split, config)
    n_pos = sum(1 for e in examples if e.source == POSITIVE)
    n_rand = sum(1 for e in examples if e.source == RANDOM_NEG)
    n_pers = sum(1 for e in examples if e.source == PERSONA_NEG)
    assert n_pos == 100
    assert n_rand == 408
    assert n_pers == 163
    human = {
        (graph.text(t.head_id), graph.text(t.tail_id))
        for t in graph.triplets()
        if t.provenance == "human"
    }
    for e in examples:
        if e.source == PERSONA_NEG:
            assert "is" in e.tail.split()
        if e.label == NOLINK:
            assert (e.head, e.tail) not in human
    run_again = build_training_set(graph, split, config)
    assert run_again == examples
    report("dataset-builder", "(408 random + 163 persona negatives, byte-identical reruns)")


def test_dataset_builder_byte_identical_files(tmp_path):
    graph = build_fixture_graph(n_clusters=25, tails_per_cluster=4)
    config = SamplingConfig(random_ratio=4.081, persona_ratio=1.632, seed=11)
    for name in ("a", "b"):
        write_training_set(
            build_training_set(graph, list(graph.clusters), config), tmp_path / name
        )
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


def test_scorer_math_invariants_10000_draws():
    rng = np.random.RandomState(2024)
    vocab = Vocabulary({f"w{i}": i + 1 for i in range(30)})
    words = list(vocab.token_to_id)
    dim = 12
    from densekg.scorer import BuiltinScorer

    checked = 0
    for _ in range(10000):
        emb = rng.uniform(-2, 2, (len(vocab), dim))
        scorer = BuiltinScorer(
            vocab, emb, rng.uniform(-4, 4, dim), rng.uniform(-4, 4, (6, 2 * dim))
        )
        head = " ".join(words[i] for i in rng.randint(0, len(words), rng.randint(1, 5)))
        tail = " ".join(words[i] for i in rng.randint(0, len(words), rng.randint(1, 5)))
        sv = scorer.score(head, tail)
        assert 0.0 <= sv.gate <= 1.0
        assert abs(sum(sv.probs) - 1.0) <= 1e-6
        assert sv.combined == tuple(sv.gate + p for p in sv.probs)
        assert max(range(6), key=lambda i: sv.combined[i]) == max(
            range(6), key=lambda i: sv.probs[i]
        )
        checked += 1
    assert checked == 10000
    report("scorer-math", "(10,000 random draws)")


def test_scorer_gradients_match_finite_differences():
    worst = 0.0
    for seed in range(3):
        examples = synth_corpus(10, seed=seed)
        vocab = Vocabulary.build((t for ex in examples for t in (ex.head, ex.tail)), min_freq=1)
        batch = _encode_examples(examples, vocab, max_tokens=100)
        rng = np.random.RandomState(seed + 50)
        dim = 5
        emb = rng.uniform(-0.4, 0.4, (len(vocab), dim))
        w_t = rng.uniform(-0.4, 0.4, dim)
        w_c = rng.uniform(-0.4, 0.4, (6, 2 * dim))
        _, analytic = batch_loss_and_grads(emb, w_t, w_c, batch)
        numeric = finite_difference_grads(emb, w_t, w_c, batch)
        for name in ("w_t", "w_c", "emb"):
            worst = max(worst, relative_errors(analytic[name], numeric[name]).max())
    assert worst <= 1e-4
    report("scorer-gradients", f"(max relative error {worst:.2e} <= 1e-4)")


def test_builtin_scorer_learns_templates():
    started = time.monotonic()
    corpus = synth_corpus(3000, seed=9)
    train, tune, held_out = corpus[:2000], corpus[2000:2400], corpus[2400:]
    scorer, history = train_builtin(train, TrainConfig(seed=1))
    assert history[-1] < history[0]

    tune_pairs = [
        AnnotatedPair(f"h{i}", f"t{i}", ex.head, ex.tail, ex.label, "intra")
        for i, ex in enumerate(tune)
    ]
    thresholds = tune_thresholds(scorer, AnnotatedSubgraph(tune_pairs))

    accepted = 0
    correct = 0
    for ex in held_out:
        decision = predict_relation(scorer, ex.head, ex.tail, thresholds.values)
        if decision is None:
            continue
        accepted += 1
        correct += int(decision[0] == ex.label)
    elapsed = time.monotonic() - started
    assert accepted > 0
    precision = correct / accepted
    assert precision >= 0.95, f"held-out precision {precision:.3f}"
    assert elapsed < 120.0
    report(
        "builtin-learning",
        f"(precision {precision:.3f} >= 0.95 on {accepted} accepted, {elapsed:.1f}s < 120s)",
    )


def test_completion_oracle_100_trials():
    modes = ("intra", "inter", "both")
    monotone_trials = 0
    for trial in range(100):
        rng = random.Random(5000 + trial)
        graph = random_clustered_graph(rng, max_events=50)
        assert graph.num_events() <= 50
        scorer = MockScorer(salt=f"acc{trial}")
        tau = {r: round(rng.uniform(0.4, 1.7), 2) for r in GROUPED_RELATIONS}
        mode = modes[trial % 3]
        if mode != "intra" and len(graph.clusters) < 2:
            mode = "intra"
        plan = CompletionPlan(mode=mode, cluster_sample_size=len(graph.clusters), seed=0)
        got = {
            (t.head_id, t.relation, t.tail_id, round(t.confidence, 12))
            for t in complete(graph, scorer, Thresholds(tau), plan)
        }
        want = reference_complete(graph, scorer, tau, mode, list(graph.clusters))
        assert got == want, f"trial {trial} mode {mode}"

        raised = {r: min(2.0, tau[r] + rng.uniform(0, 0.8)) for r in GROUPED_RELATIONS}
        subset = {
            (t.head_id, t.relation, t.tail_id)
            for t in complete(graph, scorer, Thresholds(raised), plan)
        }
        assert subset <= {(h, r, t) for h, r, t, _ in got}
        monotone_trials += 1
    assert monotone_trials == 100
    report("completion-oracle", "(100 trials, 3 modes, monotonicity held)")


def test_path_counting_oracle_100_graphs():
    g = Graph()
    ids = [g.add_event(f"chain {c}", KIND_BASE, "c0") for c in "abcd"]
    for h, t in zip(ids, ids[1:]):
        g.add_triplet(h, "xAfter", t, "human")
    g.seal()
    assert [count_k_hop(g, k) for k in (1, 2, 3)] == [3, 2, 1]

    for trial in range(100):
        rng = random.Random(9000 + trial)
        graph = random_digraph(rng, max_nodes=200, density=1.8)
        assert graph.num_events() <= 200
        for k in (1, 2, 3):
            assert count_k_hop(graph, k) == len(brute_force_paths(graph, k)), (
                f"trial {trial} k {k}"
            )
    report("path-counting-oracle", "(chain 3/2/1; 100 random graphs, k in 1..3)")


def test_heuristic_sampling_1000_paths():
    graph = dense_graph(seed=17, n=50, extra_edges=800)
    triplet_keys = {t.key() for t in graph.triplets()}
    paths = sample_paths(
        graph, 2, 1000, rule="heuristic", rng=random.Random(23), max_attempts=400000
    )
    assert len(paths) == 1000
    for p in paths:
        assert graph.has_pair(p.node_ids[0], p.node_ids[-1])
        assert len(set(p.node_ids)) == len(p.node_ids)
        for i, rel in enumerate(p.relations):
            assert (p.node_ids[i], rel, p.node_ids[i + 1]) in triplet_keys
    report("heuristic-sampling", "(1,000 paths, 100% endpoint-linked and simple)")


def test_precision_evaluator_fixture_and_schema(tmp_path):
    graph, gold, predicted = eval_fixture()
    result = evaluate_precision(predicted, gold)
    assert result.total == pytest.approx(0.75)
    assert result.intra == pytest.approx(2 / 3)
    assert result.inter == pytest.approx(1.0)

    # gold-label schema: 6 relations + NoLink across intra/inter scopes
    # round-trips through the TSV format
    g = Graph()
    for c in range(2):
        cid = f"c{c}"
        base = g.add_event(f"PersonX starts project {c}", KIND_BASE, cid)
        g.add_cluster(cid, base)
        for i in range(7):
            t = g.add_event(f"PersonY is outcome {c} {i}", KIND_TAIL, cid)
            g.add_member(cid, t)
    g.seal()
    events = g.event_ids_sorted()
    labels = list(GROUPED_RELATIONS) + [NOLINK]
    pairs = []
    used = set()
    for label in labels:
        for scope in ("intra", "inter"):
            pick = next(
                (h, t)
                for h in events
                for t in events
                if h != t
                and (h, t) not in used
                and (
                    (g.events[h].cluster_id == g.events[t].cluster_id) == (scope == "intra")
                )
            )
            used.add(pick)
            pairs.append(
                AnnotatedPair(pick[0], pick[1], g.text(pick[0]), g.text(pick[1]), label, scope)
            )
    gold2 = AnnotatedSubgraph(pairs)
    path = tmp_path / "gold.tsv"
    gold2.save_tsv(path)
    assert AnnotatedSubgraph.load_tsv(path, g).pairs == gold2.pairs
    report("precision-evaluator", "(fixture 0.75 exact; schema TSV round-trip)")


def test_degroup_round_trip_1000_samples():
    graph, predicted = predicted_fixture(1000)
    distribution = {
        "xIntent": 5, "xNeed": 5, "xAttr": 5, "xEffect": 5, "xWant": 5,
        "xReact": 5, "oEffect": 5, "oWant": 5, "oReact": 5,
    }
    ordered = sorted(predicted, key=lambda t: t.key())
    records, skipped = degroup_relations(graph, predicted, distribution, random.Random(31))
    assert skipped == 0
    assert len(records) == 1000
    for rec, orig in zip(records, ordered):
        assert rec.head_text == graph.text(orig.head_id)
        normalized = normalize_tail(rec.tail_text, rec.relation)
        assert normalized == NormalizedEvent(graph.text(orig.tail_id), orig.relation)
    report("degroup-round-trip", "(1,000 samples, 100% recovered)")


def test_end_to_end_determinism(tmp_path):
    started = time.monotonic()
    raw = str(FIXTURES / "raw_atomic_small.csv")
    gold = str(FIXTURES / "annotated_subgraph.tsv")

    def run_pipeline(root: Path) -> dict:
        graph_dir = root / "graph"
        assert cli.main(["ingest", "--raw", raw, "--out", str(graph_dir)]) == 0
        assert cli.main([
            "make-dataset", "--graph", str(graph_dir),
            "--split", str(graph_dir / "split_train.txt"),
            "--out", str(root / "train.jsonl"), "--seed", "7",
        ]) == 0
        assert cli.main([
            "train", "--dataset", str(root / "train.jsonl"),
            "--out", str(root / "model.json"), "--seed", "7",
        ]) == 0
        assert cli.main([
            "tune-thresholds", "--graph", str(graph_dir), "--annotated", gold,
            "--scorer", f"builtin:{root / 'model.json'}",
            "--out", str(root / "thresholds.json"),
        ]) == 0
        assert cli.main([
            "complete", "--graph", str(graph_dir),
            "--scorer", f"builtin:{root / 'model.json'}",
            "--thresholds", str(root / "thresholds.json"),
            "--mode", "both", "--sample-size", "12", "--seed", "7",
            "--out", str(root / "predicted.jsonl"),
        ]) == 0
        assert cli.main([
            "stats", "--graph", str(graph_dir), "--out", str(root / "stats.tsv"),
        ]) == 0
        artifacts = {}
        for rel in (
            "graph/events.jsonl", "graph/triplets.jsonl", "graph/clusters.jsonl",
            "graph/relation_distribution.json", "graph/split_train.txt",
            "train.jsonl", "model.json", "thresholds.json", "predicted.jsonl", "stats.tsv",
        ):
            artifacts[rel] = (root / rel).read_bytes()
        return artifacts

    first = run_pipeline(tmp_path / "run1")
    second = run_pipeline(tmp_path / "run2")
    assert first.keys() == second.keys()
    for name in first:
        assert first[name] == second[name], f"artifact {name} differs between runs"
    elapsed = time.monotonic() - started
    assert elapsed < 300.0
    n_predicted = len(first["predicted.jsonl"].splitlines())
    report(
        "end-to-end-determinism",
        f"(10 artifacts byte-identical, {n_predicted} predictions, {elapsed:.1f}s < 300s)",
    )
