"""Fine-tuning loop for the pair scorer.

Objective: binary cross-entropy of the gate against the linked flag
(negatives weighted by ``negative_weight``) plus cross-entropy of the
relation head on positives. Optimization uses Adam with separate
learning rates for the encoder and the heads, linear warmup over the
configured proportion of total steps, then linear decay.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import torch
from torch import nn

from .config import ServiceConfig
from .model import NOLINK, PairScorerModel, RELATIONS, Vocab, collate

logger = logging.getLogger(__name__)

RELATION_INDEX = {r: i for i, r in enumerate(RELATIONS)}


@dataclass(frozen=True)
class Example:
    head: str
    tail: str
    label: str  # grouped relation or NoLink


def read_training_file(path: str) -> List[Example]:
    examples = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            obj = json.loads(line)
            label = obj["label"]
            if label != NOLINK and label not in RELATION_INDEX:
                raise ValueError(f"{path} line {lineno}: unknown label {label!r}")
            examples.append(Example(obj["head"], obj["tail"], label))
    return examples


def smoothed(values: Sequence[float], window: int = 2) -> List[float]:
    """Trailing-window means; the sanity check below requires these to
    be non-increasing epoch over epoch."""
    out = []
    for i in range(len(values)):
        lo = max(0, i - window + 1)
        out.append(sum(values[lo : i + 1]) / (i + 1 - lo))
    return out


def train(
    examples: Sequence[Example],
    config: ServiceConfig,
    progress: Optional[callable] = None,
) -> Tuple[PairScorerModel, Vocab, List[float]]:
    """Returns the trained model, its vocabulary, and per-epoch mean
    losses."""
    labels = {ex.label for ex in examples}
    if NOLINK not in labels or labels == {NOLINK}:
        raise ValueError("training needs both positive and NoLink examples")

    torch.manual_seed(config.seed)
    rng = random.Random(config.seed)

    vocab = Vocab.build(t for ex in examples for t in (ex.head, ex.tail))
    config.encoder.vocab_size = len(vocab)
    model = PairScorerModel(config.encoder, config.max_seq_len)

    optimizer = torch.optim.Adam(
        [
            {"params": list(model.encoder_parameters()), "lr": config.lr_encoder},
            {"params": list(model.head_parameters()), "lr": config.lr_heads},
        ]
    )
    steps_per_epoch = max(1, (len(examples) + config.batch_size - 1) // config.batch_size)
    total_steps = steps_per_epoch * config.epochs
    warmup_steps = max(1, int(config.warmup_proportion * total_steps))

    def lr_lambda(step: int) -> float:
        if step < warmup_steps:
            return (step + 1) / warmup_steps
        remaining = total_steps - warmup_steps
        return max(0.0, (total_steps - step) / max(1, remaining))

    scheduler = torch.optim.lr_scheduler.LambdaLR(optimizer, lr_lambda)
    bce = nn.BCEWithLogitsLoss(reduction="none")
    ce = nn.CrossEntropyLoss(reduction="sum")

    order = list(range(len(examples)))
    history: List[float] = []
    for epoch in range(config.epochs):
        model.train()
        rng.shuffle(order)
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, len(order), config.batch_size):
            batch = [examples[i] for i in order[start : start + config.batch_size]]
            ids, padding, head_mask, tail_mask = collate(
                vocab, [(ex.head, ex.tail) for ex in batch], config.max_seq_len
            )
            linked = torch.tensor([float(ex.label != NOLINK) for ex in batch])
            weights = torch.where(
                linked > 0, torch.ones_like(linked), torch.full_like(linked, config.negative_weight)
            )
            gate_logit, relation_logits = model(ids, padding, head_mask, tail_mask)
            loss = (bce(gate_logit, linked) * weights).sum()
            positive_rows = [i for i, ex in enumerate(batch) if ex.label != NOLINK]
            if positive_rows:
                targets = torch.tensor([RELATION_INDEX[batch[i].label] for i in positive_rows])
                loss = loss + ce(relation_logits[positive_rows], targets)
            loss = loss / len(batch)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            scheduler.step()
            epoch_loss += float(loss.detach())
            n_batches += 1
        history.append(epoch_loss / n_batches)
        logger.info("epoch %d/%d loss %.4f", epoch + 1, config.epochs, history[-1])
        if progress:
            progress(epoch + 1, history[-1])
    model.eval()
    return model, vocab, history
