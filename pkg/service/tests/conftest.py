import random

import pytest

from scorer_service.config import EncoderConfig, ServiceConfig
from scorer_service.model import NOLINK, RELATIONS
from scorer_service.training import Example, train

HEAD_VERBS = ["asks", "tells", "calls", "visits", "meets", "helps", "joins", "finds"]
NOUNS = [
    "party", "contest", "meeting", "dinner", "journey", "lesson", "concert",
    "garden", "market", "game",
]
ADJ_X = ["brave", "caring", "honest", "patient", "cheerful"]
ADJ_O = ["pleased", "amused", "thankful", "satisfied", "delighted"]

TAIL_TEMPLATES = {
    "xIntent": lambda rng: f"PersonX aims for the {rng.choice(NOUNS)}",
    "xNeed": lambda rng: f"PersonX requires the {rng.choice(NOUNS)}",
    "xAfter": lambda rng: f"PersonX celebrates the {rng.choice(NOUNS)}",
    "oAfter": lambda rng: f"PersonY applauds the {rng.choice(NOUNS)}",
    "xPersona": lambda rng: f"PersonX is {rng.choice(ADJ_X)}",
    "oPersona": lambda rng: f"PersonY is {rng.choice(ADJ_O)}",
}
NEGATIVE_TEMPLATES = [
    lambda rng: f"PersonX browses the {rng.choice(NOUNS)}",
    lambda rng: f"PersonY is near the {rng.choice(NOUNS)}",
]


def template_corpus(n: int, seed: int = 0):
    """Templated pair corpus in the training-set schema: the tail's
    template determines the relation; negatives use distractors."""
    rng = random.Random(seed)
    n_pos = int(n * 0.4)
    examples = []
    for i in range(n_pos):
        rel = RELATIONS[i % len(RELATIONS)]
        head = f"PersonX {rng.choice(HEAD_VERBS)} the {rng.choice(NOUNS)}"
        examples.append(Example(head, TAIL_TEMPLATES[rel](rng), rel))
    for i in range(n - n_pos):
        head = f"PersonX {rng.choice(HEAD_VERBS)} the {rng.choice(NOUNS)}"
        template = NEGATIVE_TEMPLATES[i % len(NEGATIVE_TEMPLATES)]
        examples.append(Example(head, template(rng), NOLINK))
    rng.shuffle(examples)
    return examples


def toy_config(**overrides) -> ServiceConfig:
    """Desk-scale training config: small encoder, from-scratch learning
    rates; reference values (max len 100, 5 epochs) untouched."""
    config = ServiceConfig(
        encoder=EncoderConfig(dim=64, layers=2, heads=4, ffn_dim=128, dropout=0.05),
        batch_size=16,
        lr_encoder=2e-3,
        lr_heads=2e-3,
        seed=7,
    )
    for key, value in overrides.items():
        setattr(config, key, value)
    return config


@pytest.fixture(scope="session")
def trained_model():
    examples = template_corpus(1000, seed=3)
    model, vocab, history = train(examples, toy_config())
    return model, vocab, history, examples
