"""Multi-hop path counting and sampling, precision evaluation against an
annotated subgraph, graph statistics, and downstream-training exports.

Paths are directed simple paths over edges (parallel edges under
different relations count separately), so the 1-hop count equals the
triplet count. Reference full-scale numbers: 696,321 / 19,231 / 509
one-/two-/three-hop paths before completion, 1,967,373 / 10,658,242 /
67,888,373 after.
"""

from __future__ import annotations

import json
import logging
import os
import random
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .graph import Graph, Triplet
from .normalize import lemmatize_verb, tag, POS_VB, POS_VBZ
from .relations import (
    GROUPED_RELATIONS,
    INFINITIVE_RELATIONS,
    NOLINK,
    O_SIDE_GROUPED,
    PERSONA_GROUPED,
    PREIMAGE,
    is_grouped,
)

logger = logging.getLogger(__name__)

SCOPE_INTRA = "intra"
SCOPE_INTER = "inter"

HUMAN_EVAL_HEADER = ("head", "relation", "tail", "confidence", "judgment")
HUMAN_EVAL_DEFAULT_SAMPLE = 500  # reference human-evaluation sample size


class PathsError(ValueError):
    """Raised on malformed gold files or invalid sampling requests."""


# ----------------------------------------------------------------------
# annotated subgraph

@dataclass(frozen=True)
class AnnotatedPair:
    head_id: str
    tail_id: str
    head_text: str
    tail_text: str
    gold: str  # grouped relation or NoLink
    scope: str  # intra | inter


@dataclass
class AnnotatedSubgraph:
    pairs: List[AnnotatedPair] = field(default_factory=list)

    def __post_init__(self) -> None:
        seen = set()
        for p in self.pairs:
            key = (p.head_id, p.tail_id)
            if key in seen:
                raise PathsError(f"duplicate annotated pair {key}")
            seen.add(key)
        self.by_pair: Dict[Tuple[str, str], AnnotatedPair] = {
            (p.head_id, p.tail_id): p for p in self.pairs
        }

    @classmethod
    def load_tsv(cls, path: str, graph: Graph) -> "AnnotatedSubgraph":
        """Read head_text, tail_text, gold, scope rows; texts must name
        events of the graph and the declared scope must match their
        cluster relationship."""
        pairs = []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                fields = line.split("\t")
                if len(fields) != 4:
                    raise PathsError(f"{path} line {lineno}: expected 4 tab-separated fields")
                head_text, tail_text, gold, scope = fields
                if gold != NOLINK and not is_grouped(gold):
                    raise PathsError(f"{path} line {lineno}: unknown gold label {gold!r}")
                if scope not in (SCOPE_INTRA, SCOPE_INTER):
                    raise PathsError(f"{path} line {lineno}: unknown scope {scope!r}")
                head_id = graph.id_for_text(head_text)
                tail_id = graph.id_for_text(tail_text)
                if head_id is None:
                    raise PathsError(f"{path} line {lineno}: unknown head event {head_text!r}")
                if tail_id is None:
                    raise PathsError(f"{path} line {lineno}: unknown tail event {tail_text!r}")
                expected = (
                    SCOPE_INTRA
                    if graph.events[head_id].cluster_id == graph.events[tail_id].cluster_id
                    else SCOPE_INTER
                )
                if scope != expected:
                    raise PathsError(
                        f"{path} line {lineno}: scope {scope!r} inconsistent with "
                        f"cluster membership ({expected!r})"
                    )
                pairs.append(AnnotatedPair(head_id, tail_id, head_text, tail_text, gold, scope))
        return cls(pairs)

    def save_tsv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for p in self.pairs:
                f.write(f"{p.head_text}\t{p.tail_text}\t{p.gold}\t{p.scope}\n")


# ----------------------------------------------------------------------
# path counting

@dataclass(frozen=True)
class Path:
    node_ids: Tuple[str, ...]
    relations: Tuple[str, ...]


def _count_adjacency(graph: Graph) -> Dict[str, List[str]]:
    # tails with multiplicity; parallel relations count as distinct edges
    return {h: [t for _, t in edges] for h, edges in graph.adjacency.items()}


def _count_from(adj: Dict[str, List[str]], source: str, k: int) -> int:
    if k == 1:
        return len(adj.get(source, ()))
    count = 0
    stack = [(source, 0, {source})]
    while stack:
        node, depth, visited = stack.pop()
        for nxt in adj.get(node, ()):
            if nxt in visited:
                continue
            if depth + 1 == k:
                count += 1
            else:
                stack.append((nxt, depth + 1, visited | {nxt}))
    return count


_WORKER_ADJ: Dict[str, List[str]] = {}


def _pool_init(adj: Dict[str, List[str]]) -> None:
    global _WORKER_ADJ
    _WORKER_ADJ = adj


def _pool_count(args: Tuple[List[str], int]) -> int:
    sources, k = args
    return sum(_count_from(_WORKER_ADJ, s, k) for s in sources)


def count_k_hop(
    graph: Graph,
    k: int,
    workers: int = 1,
    checkpoint_path: Optional[str] = None,
    checkpoint_every: int = 1000,
) -> int:
    """Number of directed simple k-hop paths (DFS per source node).

    ``checkpoint_path`` enables resumable counting over the sorted
    source order for long full-scale runs; ``workers`` > 1 fans sources
    out to a process pool (per-source counts sum order-independently).
    """
    if k < 1:
        raise PathsError("k must be >= 1")
    if k > 3:
        logger.warning("k=%d path counting can be extremely expensive", k)
    adj = _count_adjacency(graph)
    sources = graph.event_ids_sorted()

    if workers > 1 and checkpoint_path is None:
        from multiprocessing import Pool

        chunks = [(sources[i::workers], k) for i in range(workers)]
        with Pool(workers, initializer=_pool_init, initargs=(adj,)) as pool:
            return sum(pool.map(_pool_count, chunks))

    done = 0
    total = 0
    if checkpoint_path and os.path.exists(checkpoint_path):
        with open(checkpoint_path, encoding="utf-8") as f:
            state = json.load(f)
        if state.get("k") == k and state.get("n_sources") == len(sources):
            done, total = state["done"], state["partial"]
            logger.info("resuming k-hop count at source %d/%d", done, len(sources))
    for i in range(done, len(sources)):
        total += _count_from(adj, sources[i], k)
        if checkpoint_path and (i + 1) % checkpoint_every == 0:
            _write_checkpoint(checkpoint_path, k, len(sources), i + 1, total)
    if checkpoint_path:
        _write_checkpoint(checkpoint_path, k, len(sources), len(sources), total)
    return total


def _write_checkpoint(path: str, k: int, n_sources: int, done: int, partial: int) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"k": k, "n_sources": n_sources, "done": done, "partial": partial}, f)


def stats(graph: Graph, workers: int = 1) -> Dict[str, int]:
    """Event and 1/2/3-hop path counts (the statistics-table shape)."""
    return {
        "events": graph.num_events(),
        "one_hop": count_k_hop(graph, 1),
        "two_hop": count_k_hop(graph, 2, workers=workers),
        "three_hop": count_k_hop(graph, 3, workers=workers),
    }


def write_stats_tsv(report: Dict[str, int], path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("events\t1-hop\t2-hop\t3-hop\n")
        f.write(
            f"{report['events']}\t{report['one_hop']}\t{report['two_hop']}"
            f"\t{report['three_hop']}\n"
        )


# ----------------------------------------------------------------------
# path sampling

RULE_RANDOM = "random"
RULE_HEURISTIC = "heuristic"


def sample_paths(
    graph: Graph,
    k: int,
    n: int,
    rule: str = RULE_RANDOM,
    rng: Optional[random.Random] = None,
    max_attempts: Optional[int] = None,
) -> List[Path]:
    """Collect up to n distinct simple k-hop paths by seeded random
    walks with restarts.

    The heuristic rule additionally requires a direct edge (any
    relation, either provenance) from the first node to the last.
    Returns fewer than n with a notice when the budget runs out.
    """
    if k < 1:
        raise PathsError("k must be >= 1")
    if rule not in (RULE_RANDOM, RULE_HEURISTIC):
        raise PathsError(f"unknown sampling rule: {rule!r}")
    rng = rng or random.Random(0)
    if max_attempts is None:
        max_attempts = max(1000, 100 * n)
    sources = graph.event_ids_sorted()
    if not sources:
        return []
    adjacency = graph.adjacency
    collected: List[Path] = []
    seen: Set[Path] = set()
    attempts = 0
    while len(collected) < n and attempts < max_attempts:
        attempts += 1
        node = sources[rng.randrange(len(sources))]
        nodes = [node]
        relations: List[str] = []
        visited = {node}
        ok = True
        for _ in range(k):
            options = [(r, t) for r, t in adjacency.get(node, ()) if t not in visited]
            if not options:
                ok = False
                break
            rel, node = options[rng.randrange(len(options))]
            nodes.append(node)
            relations.append(rel)
            visited.add(node)
        if not ok:
            continue
        if rule == RULE_HEURISTIC and not graph.has_pair(nodes[0], nodes[-1]):
            continue
        path = Path(tuple(nodes), tuple(relations))
        if path in seen:
            continue
        seen.add(path)
        collected.append(path)
    if len(collected) < n:
        logger.warning(
            "collected %d/%d %s %d-hop paths within %d attempts",
            len(collected), n, rule, k, max_attempts,
        )
    return collected


# ----------------------------------------------------------------------
# precision evaluation

@dataclass
class PrecisionReport:
    total: Optional[float]
    intra: Optional[float]
    inter: Optional[float]
    per_relation: Dict[str, Tuple[int, int]]  # relation -> (predicted, correct)
    covered: int
    uncovered: int

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "intra": self.intra,
            "inter": self.inter,
            "per_relation": {r: list(v) for r, v in self.per_relation.items()},
            "covered": self.covered,
            "uncovered": self.uncovered,
        }


def evaluate_precision(
    predicted: Iterable[Triplet], gold: AnnotatedSubgraph
) -> PrecisionReport:
    """Precision of predicted triplets against gold labels: a prediction
    is correct iff gold maps its pair to the same relation (gold NoLink
    counts as incorrect). Pairs outside the gold set are tallied
    separately and excluded from the denominators."""
    counts = {SCOPE_INTRA: [0, 0], SCOPE_INTER: [0, 0]}  # predicted, correct
    per_relation: Dict[str, List[int]] = {r: [0, 0] for r in GROUPED_RELATIONS}
    uncovered = 0
    for t in predicted:
        pair = gold.by_pair.get((t.head_id, t.tail_id))
        if pair is None:
            uncovered += 1
            continue
        hit = pair.gold == t.relation
        counts[pair.scope][0] += 1
        counts[pair.scope][1] += int(hit)
        per_relation[t.relation][0] += 1
        per_relation[t.relation][1] += int(hit)

    def ratio(pred: int, corr: int) -> Optional[float]:
        return corr / pred if pred else None

    n_pred = counts[SCOPE_INTRA][0] + counts[SCOPE_INTER][0]
    n_corr = counts[SCOPE_INTRA][1] + counts[SCOPE_INTER][1]
    return PrecisionReport(
        total=ratio(n_pred, n_corr),
        intra=ratio(*counts[SCOPE_INTRA]),
        inter=ratio(*counts[SCOPE_INTER]),
        per_relation={r: (p, c) for r, (p, c) in per_relation.items()},
        covered=n_pred,
        uncovered=uncovered,
    )


# ----------------------------------------------------------------------
# exports

def export_human_eval_sample(
    graph: Graph,
    predicted: Sequence[Triplet],
    n: int,
    rng: random.Random,
    path: str,
) -> None:
    """Uniform sample of n predicted triplets as a judgment TSV with an
    empty judgment column."""
    if n > len(predicted):
        raise PathsError(f"cannot sample {n} of {len(predicted)} predicted triplets")
    ordered = sorted(predicted, key=lambda t: t.key())
    sample = [ordered[i] for i in sorted(rng.sample(range(len(ordered)), n))]
    with open(path, "w", encoding="utf-8") as f:
        f.write("\t".join(HUMAN_EVAL_HEADER) + "\n")
        for t in sample:
            conf = "" if t.confidence is None else f"{t.confidence:.6f}"
            f.write(
                f"{graph.text(t.head_id)}\t{t.relation}\t{graph.text(t.tail_id)}\t{conf}\t\n"
            )


@dataclass(frozen=True)
class DegroupedTriplet:
    head_text: str
    relation: str  # original relation
    tail_text: str


def _deconjugate_first_verb(body_tokens: List[str]) -> List[str]:
    tagged = tag(" ".join(body_tokens))
    for i, t in enumerate(tagged):
        if t.pos in (POS_VB, POS_VBZ):
            return body_tokens[:i] + [lemmatize_verb(t.token)] + body_tokens[i + 1 :]
    return body_tokens


def degroup_relations(
    graph: Graph,
    predicted: Sequence[Triplet],
    distribution: Dict[str, int],
    rng: random.Random,
) -> Tuple[List[DegroupedTriplet], int]:
    """Resolve grouped relations back to original relations by sampling
    each multi-member preimage proportionally to the reference
    distribution; infinitive-prompted originals get their tail rewritten
    back to the "to + verb root" form.

    Triplets whose tail cannot round-trip (wrong PersonX/PersonY side
    for the relation, or persona relation without an "is" second token)
    are skipped; the skip count is returned alongside the exports.
    """
    needed = {orig for t in predicted for orig in PREIMAGE[t.relation]}
    missing = sorted(needed - set(distribution))
    if missing:
        raise PathsError(f"distribution missing required relations: {missing}")

    out: List[DegroupedTriplet] = []
    skipped = 0
    for t in sorted(predicted, key=lambda x: x.key()):
        tail_text = graph.text(t.tail_id)
        tokens = tail_text.split()
        side = "PersonY" if t.relation in O_SIDE_GROUPED else "PersonX"
        if len(tokens) < 2 or tokens[0] != side:
            skipped += 1
            continue
        if t.relation in PERSONA_GROUPED and tokens[1] != "is":
            skipped += 1
            continue
        preimage = PREIMAGE[t.relation]
        if len(preimage) == 1:
            original = preimage[0]
        else:
            weights = [distribution[o] for o in preimage]
            total = sum(weights)
            if total <= 0:
                raise PathsError(f"distribution has no mass on preimage of {t.relation}")
            draw = rng.random() * total
            acc = 0.0
            original = preimage[-1]
            for o, w in zip(preimage, weights):
                acc += w
                if draw < acc:
                    original = o
                    break
        body = tokens[1:]
        if original in INFINITIVE_RELATIONS:
            new_tail = " ".join(["to"] + _deconjugate_first_verb(body))
        else:
            new_tail = tail_text
        out.append(DegroupedTriplet(graph.text(t.head_id), original, new_tail))
    return out, skipped


def write_degrouped(records: Iterable[DegroupedTriplet], path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(
                json.dumps(
                    {"head": r.head_text, "rel": r.relation, "tail": r.tail_text},
                    ensure_ascii=False,
                    separators=(",", ":"),
                )
                + "\n"
            )


# ----------------------------------------------------------------------
# predicted triplets file

def write_predicted(predicted: Iterable[Triplet], path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for t in sorted(predicted, key=lambda x: x.key()):
            f.write(
                json.dumps(
                    {
                        "head": t.head_id,
                        "rel": t.relation,
                        "tail": t.tail_id,
                        "src": t.provenance,
                        "conf": t.confidence,
                    },
                    ensure_ascii=False,
                    separators=(",", ":"),
                )
                + "\n"
            )


def read_predicted(path: str) -> List[Triplet]:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out.append(
                    Triplet(obj["head"], obj["rel"], obj["tail"], obj["src"], obj.get("conf"))
                )
            except (json.JSONDecodeError, KeyError) as exc:
                raise PathsError(f"{path} line {lineno}: {exc}") from None
    return out
