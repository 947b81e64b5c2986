"""Graph data model and JSONL persistence.

Events are deduplicated on exact normalized text; triplets are unique on
(head, relation, tail) with human edges taking precedence over predicted
ones. A graph is built single-writer, then sealed; sampling and completion
operate on the sealed snapshot only.

Full-scale reference (not reproducible at desk scale): the normalized
source corpus holds 283,435 events and 696,321 human one-hop edges.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

from .relations import GROUPED_RELATIONS, is_grouped

KIND_BASE = "base"
KIND_TAIL = "tail"
HUMAN = "human"
PREDICTED = "pred"

EVENTS_FILE = "events.jsonl"
TRIPLETS_FILE = "triplets.jsonl"
CLUSTERS_FILE = "clusters.jsonl"


class GraphError(ValueError):
    """Raised on invalid graph mutations or malformed graph files."""


@dataclass(frozen=True)
class Event:
    id: str
    text: str
    kind: str
    cluster_id: str


@dataclass(frozen=True)
class Triplet:
    head_id: str
    relation: str
    tail_id: str
    provenance: str
    confidence: Optional[float] = None

    def key(self) -> Tuple[str, str, str]:
        return (self.head_id, self.relation, self.tail_id)


@dataclass
class Cluster:
    id: str
    base_event_id: str
    member_ids: List[str] = field(default_factory=list)


def _id_sort_key(event_id: str) -> Tuple[int, str]:
    # Length-then-value order; numeric order for generated e<N> ids.
    return (len(event_id), event_id)


class Graph:
    """In-memory event graph with cluster bookkeeping."""

    def __init__(self) -> None:
        self.events: Dict[str, Event] = {}
        self.clusters: Dict[str, Cluster] = {}
        self._triplets: Dict[Tuple[str, str, str], Triplet] = {}
        self._id_by_text: Dict[str, str] = {}
        self._human_pairs: Set[Tuple[str, str]] = set()
        self._all_pairs: Set[Tuple[str, str]] = set()
        self._next_id = 0
        self._sealed = False
        self._adjacency: Optional[Dict[str, List[Tuple[str, str]]]] = None

    # ------------------------------------------------------------------
    # construction

    def _check_mutable(self) -> None:
        if self._sealed:
            raise GraphError("graph is sealed; no further mutation supported")

    def add_event(self, text: str, kind: str, cluster_id: str) -> str:
        """Insert an event, returning the existing id when the text is
        already present (dedup). A later base-kind insert upgrades a
        tail-kind event to base."""
        self._check_mutable()
        text = " ".join(text.split())
        if not text:
            raise GraphError("event text must be non-empty")
        if kind not in (KIND_BASE, KIND_TAIL):
            raise GraphError(f"unknown event kind: {kind!r}")
        existing = self._id_by_text.get(text)
        if existing is not None:
            if kind == KIND_BASE and self.events[existing].kind == KIND_TAIL:
                old = self.events[existing]
                self.events[existing] = Event(old.id, old.text, KIND_BASE, old.cluster_id)
            return existing
        event_id = f"e{self._next_id}"
        self._next_id += 1
        self.events[event_id] = Event(event_id, text, kind, cluster_id)
        self._id_by_text[text] = event_id
        return event_id

    def add_cluster(self, cluster_id: str, base_event_id: str) -> Cluster:
        self._check_mutable()
        if cluster_id in self.clusters:
            raise GraphError(f"duplicate cluster id: {cluster_id!r}")
        if base_event_id not in self.events:
            raise GraphError(f"unknown base event id: {base_event_id!r}")
        cluster = Cluster(cluster_id, base_event_id)
        self.clusters[cluster_id] = cluster
        return cluster

    def add_member(self, cluster_id: str, event_id: str) -> None:
        """Append an annotated-tail event to a cluster's member list
        (idempotent; the cluster's own base event is never a member)."""
        self._check_mutable()
        cluster = self.clusters[cluster_id]
        if event_id not in self.events:
            raise GraphError(f"unknown event id: {event_id!r}")
        if event_id == cluster.base_event_id or event_id in cluster.member_ids:
            return
        cluster.member_ids.append(event_id)

    def add_triplet(
        self,
        head_id: str,
        relation: str,
        tail_id: str,
        provenance: str,
        confidence: Optional[float] = None,
    ) -> bool:
        """Insert an edge. Returns False (no insert) on a duplicate
        (head, relation, tail); the first insert wins, so a predicted
        edge never overwrites a human one."""
        self._check_mutable()
        if head_id not in self.events:
            raise GraphError(f"unknown head event id: {head_id!r}")
        if tail_id not in self.events:
            raise GraphError(f"unknown tail event id: {tail_id!r}")
        if not is_grouped(relation):
            raise GraphError(f"relation must be one of {GROUPED_RELATIONS}, got {relation!r}")
        if head_id == tail_id:
            raise GraphError(f"self-loop rejected: {head_id!r}")
        if provenance not in (HUMAN, PREDICTED):
            raise GraphError(f"unknown provenance: {provenance!r}")
        if provenance == HUMAN and confidence is not None:
            raise GraphError("human edges carry no confidence")
        if provenance == PREDICTED:
            if confidence is None:
                raise GraphError("predicted edges require a confidence")
            if not 0.0 <= confidence <= 2.0:
                raise GraphError(f"confidence out of [0, 2]: {confidence}")
        key = (head_id, relation, tail_id)
        if key in self._triplets:
            return False
        self._triplets[key] = Triplet(head_id, relation, tail_id, provenance, confidence)
        self._all_pairs.add((head_id, tail_id))
        if provenance == HUMAN:
            self._human_pairs.add((head_id, tail_id))
        self._adjacency = None
        return True

    def seal(self) -> "Graph":
        self._sealed = True
        return self

    # ------------------------------------------------------------------
    # read access

    @property
    def sealed(self) -> bool:
        return self._sealed

    def id_for_text(self, text: str) -> Optional[str]:
        return self._id_by_text.get(" ".join(text.split()))

    def text(self, event_id: str) -> str:
        return self.events[event_id].text

    def triplets(self) -> Iterable[Triplet]:
        return self._triplets.values()

    def triplets_sorted(self) -> List[Triplet]:
        return [self._triplets[k] for k in sorted(self._triplets)]

    def human_triplets_sorted(self) -> List[Triplet]:
        return [t for t in self.triplets_sorted() if t.provenance == HUMAN]

    def has_human_pair(self, head_id: str, tail_id: str) -> bool:
        return (head_id, tail_id) in self._human_pairs

    def has_pair(self, head_id: str, tail_id: str) -> bool:
        return (head_id, tail_id) in self._all_pairs

    def event_ids_sorted(self) -> List[str]:
        return sorted(self.events, key=_id_sort_key)

    def cluster_ids_sorted(self) -> List[str]:
        return sorted(self.clusters, key=_id_sort_key)

    @property
    def adjacency(self) -> Dict[str, List[Tuple[str, str]]]:
        """Forward index head_id -> [(relation, tail_id)], each list
        sorted by (relation, tail_id); rebuilt from the triplet set."""
        if self._adjacency is None:
            adj: Dict[str, List[Tuple[str, str]]] = {}
            for t in self._triplets.values():
                adj.setdefault(t.head_id, []).append((t.relation, t.tail_id))
            for edges in adj.values():
                edges.sort()
            self._adjacency = adj
        return self._adjacency

    def num_events(self) -> int:
        return len(self.events)

    def num_triplets(self) -> int:
        return len(self._triplets)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            set(self.events.values()) == set(other.events.values())
            and set(self._triplets.values()) == set(other._triplets.values())
            and {
                (c.id, c.base_event_id, tuple(c.member_ids)) for c in self.clusters.values()
            }
            == {(c.id, c.base_event_id, tuple(c.member_ids)) for c in other.clusters.values()}
        )

    def __hash__(self) -> int:  # graphs are mutable; identity hash
        return id(self)


# ----------------------------------------------------------------------
# persistence

def _dump_line(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":")) + "\n"


def save_graph(graph: Graph, out_dir) -> None:
    """Write events/triplets/clusters JSONL files under ``out_dir``.

    Ordering is fixed (events and clusters by id, triplets by
    (head, relation, tail)), so equal graphs serialize byte-identically.
    """
    import os

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, EVENTS_FILE), "w", encoding="utf-8") as f:
        for eid in graph.event_ids_sorted():
            e = graph.events[eid]
            f.write(_dump_line({"id": e.id, "text": e.text, "kind": e.kind, "cluster": e.cluster_id}))
    with open(os.path.join(out_dir, TRIPLETS_FILE), "w", encoding="utf-8") as f:
        for t in graph.triplets_sorted():
            rec = {"head": t.head_id, "rel": t.relation, "tail": t.tail_id, "src": t.provenance}
            if t.confidence is not None:
                rec["conf"] = t.confidence
            f.write(_dump_line(rec))
    with open(os.path.join(out_dir, CLUSTERS_FILE), "w", encoding="utf-8") as f:
        for cid in graph.cluster_ids_sorted():
            c = graph.clusters[cid]
            f.write(_dump_line({"id": c.id, "base": c.base_event_id, "members": c.member_ids}))


def _parse_line(path: str, lineno: int, line: str, required: Tuple[str, ...]) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise GraphError(f"{path} line {lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise GraphError(f"{path} line {lineno}: expected an object")
    for key in required:
        if key not in obj:
            raise GraphError(f"{path} line {lineno}: missing field {key!r}")
    return obj


def load_graph(graph_dir) -> Graph:
    """Load a graph directory written by :func:`save_graph`.

    Malformed lines raise :class:`GraphError` naming the file, line
    number, and offending field.
    """
    import os

    graph = Graph()
    events_path = os.path.join(graph_dir, EVENTS_FILE)
    with open(events_path, encoding="utf-8") as f:
        max_n = -1
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            obj = _parse_line(events_path, lineno, line, ("id", "text", "kind", "cluster"))
            eid = obj["id"]
            if eid in graph.events:
                raise GraphError(f"{events_path} line {lineno}: duplicate event id {eid!r}")
            if obj["kind"] not in (KIND_BASE, KIND_TAIL):
                raise GraphError(f"{events_path} line {lineno}: bad kind {obj['kind']!r}")
            text = obj["text"]
            if not isinstance(text, str) or not text.strip():
                raise GraphError(f"{events_path} line {lineno}: bad text")
            if graph._id_by_text.get(text) is not None:
                raise GraphError(f"{events_path} line {lineno}: duplicate event text")
            graph.events[eid] = Event(eid, text, obj["kind"], obj["cluster"])
            graph._id_by_text[text] = eid
            if eid.startswith("e") and eid[1:].isdigit():
                max_n = max(max_n, int(eid[1:]))
        graph._next_id = max_n + 1

    triplets_path = os.path.join(graph_dir, TRIPLETS_FILE)
    with open(triplets_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            obj = _parse_line(triplets_path, lineno, line, ("head", "rel", "tail", "src"))
            try:
                inserted = graph.add_triplet(
                    obj["head"], obj["rel"], obj["tail"], obj["src"], obj.get("conf")
                )
            except GraphError as exc:
                raise GraphError(f"{triplets_path} line {lineno}: {exc}") from None
            if not inserted:
                raise GraphError(f"{triplets_path} line {lineno}: duplicate triplet")

    clusters_path = os.path.join(graph_dir, CLUSTERS_FILE)
    with open(clusters_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            obj = _parse_line(clusters_path, lineno, line, ("id", "base", "members"))
            try:
                graph.add_cluster(obj["id"], obj["base"])
                for mid in obj["members"]:
                    graph.add_member(obj["id"], mid)
            except (GraphError, KeyError) as exc:
                raise GraphError(f"{clusters_path} line {lineno}: {exc}") from None
    return graph
