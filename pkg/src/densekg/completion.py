"""Link completion: enumerate candidate pairs with the intra-and-inter
cluster strategy, score them, and accept relations above per-relation
thresholds.

Candidate enumeration is direction-sensitive (an existing A->B human
edge does not suppress the B->A candidate) and excludes pairs already
human-linked in the candidate direction. The seeded cluster sample
applies to both modes; sampling all clusters makes mode=both cover
every orderable pair.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Dict, Iterable, List, Tuple

from .graph import Cluster, Graph, PREDICTED, Triplet
from .relations import GROUPED_RELATIONS
from .scorer import RelationScorer, decide

if TYPE_CHECKING:
    from .paths import AnnotatedSubgraph

logger = logging.getLogger(__name__)

MODE_INTRA = "intra"
MODE_INTER = "inter"
MODE_BOTH = "both"

THRESHOLD_GRID_STEPS = 200  # tau = i/100 for i in 0..200


class CompletionError(ValueError):
    """Raised on invalid plans, thresholds, or scoring failures."""


@dataclass(frozen=True)
class Thresholds:
    values: Dict[str, float]

    def __post_init__(self) -> None:
        missing = [r for r in GROUPED_RELATIONS if r not in self.values]
        if missing:
            raise CompletionError(f"thresholds missing relations: {missing}")
        for rel, tau in self.values.items():
            if rel not in GROUPED_RELATIONS:
                raise CompletionError(f"unknown relation in thresholds: {rel!r}")
            if not 0.0 <= tau <= 2.0:
                raise CompletionError(f"threshold for {rel} out of [0, 2]: {tau}")

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump({r: self.values[r] for r in GROUPED_RELATIONS}, f, indent=2)
            f.write("\n")

    @classmethod
    def load(cls, path: str) -> "Thresholds":
        with open(path, encoding="utf-8") as f:
            return cls(json.load(f))


@dataclass(frozen=True)
class CompletionPlan:
    mode: str = MODE_BOTH
    cluster_sample_size: int = 100  # reference released setting
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in (MODE_INTRA, MODE_INTER, MODE_BOTH):
            raise CompletionError(f"unknown completion mode: {self.mode!r}")
        if self.cluster_sample_size < 1:
            raise CompletionError("cluster_sample_size must be >= 1")


@dataclass(frozen=True)
class CandidatePair:
    head_id: str
    tail_id: str
    origin: str  # intra | inter


def _cluster_nodes(graph: Graph, cluster: Cluster) -> List[str]:
    """Distinct event ids of a cluster (base first, then members), in
    deterministic id order."""
    seen = dict.fromkeys([cluster.base_event_id] + cluster.member_ids)
    return sorted(seen, key=lambda e: (len(e), e))


def enumerate_intra(graph: Graph, cluster: Cluster) -> List[CandidatePair]:
    """All ordered in-cluster pairs minus self-pairs and pairs already
    human-linked in that direction."""
    nodes = _cluster_nodes(graph, cluster)
    return [
        CandidatePair(h, t, MODE_INTRA)
        for h in nodes
        for t in nodes
        if h != t and not graph.has_human_pair(h, t)
    ]


def sample_clusters(graph: Graph, plan: CompletionPlan, rng: random.Random) -> List[Cluster]:
    """Uniform seeded sample of ``cluster_sample_size`` clusters."""
    cluster_ids = graph.cluster_ids_sorted()
    if plan.cluster_sample_size > len(cluster_ids):
        raise CompletionError(
            f"cluster_sample_size {plan.cluster_sample_size} exceeds "
            f"cluster count {len(cluster_ids)}"
        )
    sampled = sorted(
        rng.sample(cluster_ids, plan.cluster_sample_size), key=lambda c: (len(c), c)
    )
    return [graph.clusters[cid] for cid in sampled]


def enumerate_inter(
    graph: Graph, plan: CompletionPlan, rng: random.Random
) -> List[CandidatePair]:
    """All ordered cross-cluster pairs among the sampled clusters'
    events, minus human-linked pairs and pairs deduplicated to one id."""
    if plan.cluster_sample_size < 2:
        raise CompletionError("inter-cluster completion needs a sample of at least 2 clusters")
    clusters = sample_clusters(graph, plan, rng)
    node_sets = [_cluster_nodes(graph, c) for c in clusters]
    candidates = []
    for i, heads in enumerate(node_sets):
        for j, tails in enumerate(node_sets):
            if i == j:
                continue
            for h in heads:
                for t in tails:
                    if h != t and not graph.has_human_pair(h, t):
                        candidates.append(CandidatePair(h, t, MODE_INTER))
    return candidates


def _dedup_candidates(candidates: Iterable[CandidatePair]) -> List[CandidatePair]:
    seen = set()
    out = []
    for cand in candidates:
        key = (cand.head_id, cand.tail_id)
        if key not in seen:
            seen.add(key)
            out.append(cand)
    return out


def enumerate_candidates(graph: Graph, plan: CompletionPlan) -> List[CandidatePair]:
    rng = random.Random(plan.seed)
    clusters = sample_clusters(graph, plan, rng)
    candidates: List[CandidatePair] = []
    if plan.mode in (MODE_INTRA, MODE_BOTH):
        for cluster in clusters:
            candidates.extend(enumerate_intra(graph, cluster))
    if plan.mode in (MODE_INTER, MODE_BOTH):
        # reuse the same sampled cluster set: fresh rng with the plan seed
        candidates.extend(enumerate_inter(graph, plan, random.Random(plan.seed)))
    return _dedup_candidates(candidates)


def complete(
    graph: Graph,
    scorer: RelationScorer,
    thresholds: Thresholds,
    plan: CompletionPlan,
    batch_size: int = 256,
) -> List[Triplet]:
    """Score every candidate pair and emit accepted predictions as
    triplets with confidence = combined score."""
    if not graph.sealed:
        raise CompletionError("graph must be sealed before completion")
    if batch_size < 1:
        raise CompletionError("batch_size must be >= 1")
    candidates = enumerate_candidates(graph, plan)
    predicted: List[Triplet] = []
    seen_keys = set()
    for start in range(0, len(candidates), batch_size):
        batch = candidates[start : start + batch_size]
        pairs = [(graph.text(c.head_id), graph.text(c.tail_id)) for c in batch]
        try:
            scores = scorer.score_batch(pairs)
        except Exception as exc:
            raise CompletionError(
                f"scorer failed on batch covering candidates "
                f"{start}..{start + len(batch) - 1}: {exc}"
            ) from exc
        if len(scores) != len(batch):
            raise CompletionError(
                f"scorer returned {len(scores)} scores for {len(batch)} candidates "
                f"at batch offset {start}"
            )
        for cand, score in zip(batch, scores):
            decision = decide(score, thresholds.values)
            if decision is None:
                continue
            relation, combined = decision
            key = (cand.head_id, relation, cand.tail_id)
            if key in seen_keys or graph.has_human_pair(cand.head_id, cand.tail_id):
                continue
            seen_keys.add(key)
            predicted.append(
                Triplet(cand.head_id, relation, cand.tail_id, PREDICTED, float(combined))
            )
    return predicted


# ----------------------------------------------------------------------
# threshold tuning

def default_objective(correct: int, accepted: int) -> float:
    return correct / accepted


def tune_thresholds(
    scorer: RelationScorer,
    annotated_dev: "AnnotatedSubgraph",
    objective: Callable[[int, int], float] = default_objective,
    batch_size: int = 256,
) -> Thresholds:
    """Per-relation sweep of tau over [0, 2] in steps of 0.01.

    For each relation the dev pairs whose argmax lands on it form the
    tuning pool; the objective (default: precision, requiring at least
    one accepted prediction) is evaluated at every grid point, and ties
    break toward the highest tau (most conservative acceptance).
    Relations with an empty pool default to 2.0 with a warning.
    """
    pools: Dict[str, List[Tuple[float, bool]]] = {r: [] for r in GROUPED_RELATIONS}
    pairs = annotated_dev.pairs
    for start in range(0, len(pairs), batch_size):
        batch = pairs[start : start + batch_size]
        scores = scorer.score_batch([(p.head_text, p.tail_text) for p in batch])
        for pair, score in zip(batch, scores):
            relation, combined = score.best()
            pools[relation].append((combined, pair.gold == relation))

    values: Dict[str, float] = {}
    for relation in GROUPED_RELATIONS:
        pool = pools[relation]
        if not pool:
            logger.warning(
                "no dev pair scored argmax=%s; threshold defaults to 2.0 (accept nothing)",
                relation,
            )
            values[relation] = 2.0
            continue
        grid = [i / 100 for i in range(THRESHOLD_GRID_STEPS + 1)]
        scores_at = []
        for tau in grid:
            accepted = [hit for s, hit in pool if s >= tau]
            if not accepted:
                scores_at.append(None)
                continue
            scores_at.append(objective(sum(accepted), len(accepted)))
        best = max((s for s in scores_at if s is not None), default=None)
        if best is None:
            values[relation] = 2.0
            continue
        chosen = max(i for i, s in enumerate(scores_at) if s is not None and s == best)
        values[relation] = grid[chosen]
    return Thresholds(values)
