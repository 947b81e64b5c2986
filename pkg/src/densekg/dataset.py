"""Training-set assembly: positives from the training split plus random
and persona negative samples at configured ratios.

Default ratios reproduce the reference training-set proportions
(463,264 positives, 1,890,350 random negatives, 756,140 persona
negatives). Sampling is deterministic: every negative draws from its
own substream keyed on (seed, strategy, index), so output is a pure
function of (graph, split, config).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Set, Tuple

from .graph import Graph, Triplet
from .relations import NOLINK, PERSONA_GROUPED, is_grouped

POSITIVE = "positive"
RANDOM_NEG = "random_neg"
PERSONA_NEG = "persona_neg"

DEFAULT_RANDOM_RATIO = 1890350 / 463264
DEFAULT_PERSONA_RATIO = 756140 / 463264

_MAX_RETRIES = 100


class DatasetError(ValueError):
    """Raised when sampling constraints cannot be satisfied."""


@dataclass(frozen=True)
class TrainingExample:
    head: str
    tail: str
    label: str  # grouped relation or NoLink
    source: str

    def __post_init__(self) -> None:
        if self.source == POSITIVE:
            if not is_grouped(self.label):
                raise DatasetError(f"positive example with label {self.label!r}")
        elif self.source in (RANDOM_NEG, PERSONA_NEG):
            if self.label != NOLINK:
                raise DatasetError(f"negative example with label {self.label!r}")
        else:
            raise DatasetError(f"unknown source {self.source!r}")


@dataclass(frozen=True)
class SamplingConfig:
    random_ratio: float = DEFAULT_RANDOM_RATIO
    persona_ratio: float = DEFAULT_PERSONA_RATIO
    seed: int = 0

    def __post_init__(self) -> None:
        if self.random_ratio < 0 or self.persona_ratio < 0:
            raise DatasetError("sampling ratios must be >= 0")


def _substream(seed: int, strategy: str, index: int) -> random.Random:
    # str seeding is stable across runs and platforms (not hash-based).
    return random.Random(f"{seed}:{strategy}:{index}")


def _draw_negative(
    graph: Graph,
    positive: Triplet,
    pool: Sequence[str],
    rng: random.Random,
    source: str,
    taken: Optional[Set[Tuple[str, str]]] = None,
) -> TrainingExample:
    head_id = positive.head_id
    for _ in range(_MAX_RETRIES):
        tail_id = pool[rng.randrange(len(pool))]
        if tail_id == head_id or tail_id == positive.tail_id:
            continue
        if graph.has_human_pair(head_id, tail_id):
            continue
        if taken is not None and (head_id, tail_id) in taken:
            continue
        if taken is not None:
            taken.add((head_id, tail_id))
        return TrainingExample(graph.text(head_id), graph.text(tail_id), NOLINK, source)
    raise DatasetError(
        f"could not draw a {source} tail for head {head_id!r} within {_MAX_RETRIES} retries"
    )


def sample_random_negative(
    graph: Graph,
    positive: Triplet,
    rng: random.Random,
    pool: Optional[Sequence[str]] = None,
    taken: Optional[Set[Tuple[str, str]]] = None,
) -> TrainingExample:
    """Replace the positive's tail with a uniformly drawn event that is
    not human-linked to the head."""
    if pool is None:
        pool = graph.event_ids_sorted()
    if len(pool) < 2:
        raise DatasetError("graph too small for random negative sampling")
    return _draw_negative(graph, positive, pool, rng, RANDOM_NEG, taken)


def is_event_pool(graph: Graph) -> List[str]:
    """Event ids whose text contains the token "is", in id order."""
    return [
        eid for eid in graph.event_ids_sorted() if "is" in graph.text(eid).split()
    ]


def sample_persona_negative(
    graph: Graph,
    positive: Triplet,
    rng: random.Random,
    pool: Optional[Sequence[str]] = None,
    taken: Optional[Set[Tuple[str, str]]] = None,
) -> TrainingExample:
    """Replace the tail of an xPersona/oPersona positive with an
    "is"-containing event."""
    if positive.relation not in PERSONA_GROUPED:
        raise DatasetError(
            f"persona negatives require an xPersona/oPersona positive, got {positive.relation}"
        )
    if pool is None:
        pool = is_event_pool(graph)
    if not pool:
        raise DatasetError("no event containing token 'is' available")
    return _draw_negative(graph, positive, pool, rng, PERSONA_NEG, taken)


def build_training_set(
    graph: Graph, split_cluster_ids: Iterable[str], config: SamplingConfig
) -> List[TrainingExample]:
    """All positives from the split plus floor(ratio * positives)
    negatives per strategy, shuffled deterministically by seed."""
    if not graph.sealed:
        raise DatasetError("graph must be sealed before sampling")
    split = set(split_cluster_ids)
    if not split:
        raise DatasetError("empty split")
    unknown = split - set(graph.clusters)
    if unknown:
        raise DatasetError(f"split names unknown clusters: {sorted(unknown)[:5]}")

    positives = [
        t
        for t in graph.human_triplets_sorted()
        if graph.events[t.head_id].cluster_id in split
    ]
    if not positives:
        raise DatasetError("split contains no positive triplets")

    # floor of ratio * count, guarded against float underestimation of
    # exact integer products (e.g. 0.1 * 30)
    n_random = int(config.random_ratio * len(positives) + 1e-9)
    n_persona = int(config.persona_ratio * len(positives) + 1e-9)

    persona_positives = [t for t in positives if t.relation in PERSONA_GROUPED]
    if n_persona > 0 and not persona_positives:
        raise DatasetError("persona negatives requested but split has no persona positives")

    examples = [
        TrainingExample(graph.text(t.head_id), graph.text(t.tail_id), t.relation, POSITIVE)
        for t in positives
    ]

    taken: Set[Tuple[str, str]] = set()
    random_pool = graph.event_ids_sorted()
    for i in range(n_random):
        positive = positives[i % len(positives)]
        rng = _substream(config.seed, "rand", i)
        examples.append(
            sample_random_negative(graph, positive, rng, pool=random_pool, taken=taken)
        )
    persona_pool = is_event_pool(graph)
    for i in range(n_persona):
        positive = persona_positives[i % len(persona_positives)]
        rng = _substream(config.seed, "pers", i)
        examples.append(
            sample_persona_negative(graph, positive, rng, pool=persona_pool, taken=taken)
        )

    random.Random(f"{config.seed}:shuffle").shuffle(examples)
    return examples


# ----------------------------------------------------------------------
# file format

def write_training_set(examples: Iterable[TrainingExample], path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for ex in examples:
            f.write(
                json.dumps(
                    {"head": ex.head, "tail": ex.tail, "label": ex.label, "source": ex.source},
                    ensure_ascii=False,
                    separators=(",", ":"),
                )
                + "\n"
            )


def read_training_set(path: str) -> List[TrainingExample]:
    examples = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                examples.append(
                    TrainingExample(obj["head"], obj["tail"], obj["label"], obj["source"])
                )
            except (json.JSONDecodeError, KeyError, DatasetError) as exc:
                raise DatasetError(f"{path} line {lineno}: {exc}") from None
    return examples
