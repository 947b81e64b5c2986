import json

import pytest

from scorer_service.config import ServiceConfig
from scorer_service.model import (
    RELATIONS,
    Vocab,
    load_checkpoint,
    pack_pair,
    save_checkpoint,
    score_pairs,
)
from scorer_service.training import Example, read_training_file, smoothed, train

from conftest import template_corpus, toy_config


def test_reference_defaults():
    config = ServiceConfig()
    assert config.max_seq_len == 100
    assert config.batch_size == 128
    assert config.lr_encoder == 2e-5
    assert config.lr_heads == 1e-4
    assert config.warmup_proportion == 0.1
    assert config.epochs == 5


def test_pack_pair_truncates_to_budget():
    vocab = Vocab.build(["a b c d e f g h"])
    ids, head_pos, tail_pos = pack_pair(vocab, "a b c", "d e f", 100)
    assert len(ids) == 3 + 3 + 3
    assert len(head_pos) == 3 and len(tail_pos) == 3
    long_head = " ".join(["a"] * 200)
    ids, head_pos, tail_pos = pack_pair(vocab, long_head, "d e", 100)
    assert len(ids) <= 100
    assert tail_pos  # tail survives truncation


def test_train_rejects_single_class():
    positives = [ex for ex in template_corpus(50) if ex.label != "NoLink"]
    with pytest.raises(ValueError):
        train(positives, toy_config(epochs=1))


def test_read_training_file_validates_labels(tmp_path):
    path = tmp_path / "train.jsonl"
    path.write_text(json.dumps({"head": "a", "tail": "b", "label": "xMystery"}) + "\n")
    with pytest.raises(ValueError):
        read_training_file(path)
    path.write_text(
        json.dumps({"head": "a", "tail": "b", "label": "xAfter", "source": "positive"}) + "\n"
    )
    assert read_training_file(path) == [Example("a", "b", "xAfter")]


def test_smoothed_window():
    assert smoothed([4.0, 2.0, 2.0, 1.0]) == [4.0, 3.0, 2.0, 1.5]


def test_toy_finetune_loss_and_precision(trained_model):
    """1,000-example training subset: smoothed per-epoch loss
    non-increasing over the 5 epochs, and precision on a held-out
    annotated subset at least matches the built-in scorer trained on
    the same subset."""
    model, vocab, history, fit = trained_model
    assert len(history) == 5
    smooth = smoothed(history)
    assert all(a >= b - 1e-9 for a, b in zip(smooth, smooth[1:])), smooth

    from densekg.completion import tune_thresholds
    from densekg.paths import AnnotatedPair, AnnotatedSubgraph
    from densekg.relations import GROUPED_RELATIONS
    from densekg.scorer import ScoreVector, TrainConfig, train_builtin
    from densekg.dataset import TrainingExample

    annotated = template_corpus(800, seed=12)  # desk-scale annotated subset
    tune, held = annotated[:400], annotated[400:]

    class ServiceAdapter:
        def identity(self):
            return "service-model"

        def score_batch(self, pairs):
            raw = score_pairs(model, vocab, list(pairs), 128)
            return [
                ScoreVector(s["gate"], tuple(s["probs"][r] for r in GROUPED_RELATIONS))
                for s in raw
            ]

    builtin_examples = [
        TrainingExample(
            ex.head, ex.tail, ex.label,
            "positive" if ex.label != "NoLink" else "random_neg",
        )
        for ex in fit
    ]
    builtin_model, _ = train_builtin(builtin_examples, TrainConfig(seed=7))

    def precision(scorer) -> float:
        pairs = [
            AnnotatedPair(f"h{i}", f"t{i}", ex.head, ex.tail, ex.label, "intra")
            for i, ex in enumerate(tune)
        ]
        thresholds = tune_thresholds(scorer, AnnotatedSubgraph(pairs))
        accepted = correct = 0
        for ex in held:
            scores = scorer.score_batch([(ex.head, ex.tail)])[0]
            relation, combined = scores.best()
            if combined < thresholds.values[relation]:
                continue
            accepted += 1
            correct += int(relation == ex.label)
        assert accepted > 0
        return correct / accepted

    service_precision = precision(ServiceAdapter())
    builtin_precision = precision(builtin_model)
    assert service_precision >= builtin_precision, (
        f"service {service_precision:.3f} < builtin {builtin_precision:.3f}"
    )


def test_checkpoint_round_trip(tmp_path, trained_model):
    model, vocab, _, _ = trained_model
    path = tmp_path / "model.pt"
    config = toy_config()
    config.encoder.vocab_size = len(vocab)
    save_checkpoint(str(path), model, vocab, config)
    loaded_model, loaded_vocab, loaded_config = load_checkpoint(str(path))
    pairs = [("PersonX asks the party", "PersonX is brave")]
    assert score_pairs(loaded_model, loaded_vocab, pairs, 8) == score_pairs(
        model, vocab, pairs, 8
    )
    assert loaded_config.max_seq_len == 100
