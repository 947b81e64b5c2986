"""Raw annotation-file ingest: build a normalized graph from the
original event-annotation table.

The raw layout is one row per base event with one column per relation,
each cell a JSON list of annotated tail strings, plus an optional
"split" column (trn/dev/tst). Comma- and tab-separated variants are
both accepted.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, TextIO

from .graph import Graph, HUMAN, KIND_BASE, KIND_TAIL, GraphError
from .normalize import canonicalize_event_text, filter_annotation, normalize_tail
from .relations import ORIGINAL_RELATIONS

logger = logging.getLogger(__name__)

_SPLIT_ALIASES = {
    "trn": "train",
    "train": "train",
    "dev": "dev",
    "val": "dev",
    "tst": "test",
    "test": "test",
}


class IngestError(ValueError):
    """Raised on malformed raw annotation files."""


@dataclass
class IngestReport:
    clusters: int = 0
    events: int = 0
    triplets: int = 0
    annotations_seen: int = 0
    dropped_filtered: int = 0
    dropped_empty: int = 0
    dropped_self_loops: int = 0
    duplicate_edges: int = 0
    relation_distribution: Dict[str, int] = field(default_factory=dict)
    split_clusters: Dict[str, List[str]] = field(default_factory=dict)


def _parse_cell(raw: str, lineno: int, column: str) -> List[str]:
    raw = raw.strip()
    if not raw:
        return []
    try:
        values = json.loads(raw)
    except json.JSONDecodeError:
        raise IngestError(
            f"line {lineno}: column {column!r} is not a JSON list: {raw[:40]!r}"
        ) from None
    if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
        raise IngestError(f"line {lineno}: column {column!r} must be a list of strings")
    return values


def ingest_annotations(stream: TextIO) -> tuple[Graph, IngestReport]:
    """Parse a raw annotation table into a normalized (unsealed) graph."""
    header_line = stream.readline()
    if not header_line:
        raise IngestError("empty input file")
    delimiter = "\t" if "\t" in header_line else ","
    reader = csv.DictReader(stream, fieldnames=None, delimiter=delimiter)
    reader.fieldnames = next(csv.reader([header_line], delimiter=delimiter))
    if "event" not in reader.fieldnames:
        raise IngestError("missing 'event' column in header")
    missing = [r for r in ORIGINAL_RELATIONS if r not in reader.fieldnames]
    if missing:
        raise IngestError(f"missing relation columns: {', '.join(missing)}")
    has_split = "split" in reader.fieldnames

    graph = Graph()
    report = IngestReport()
    report.relation_distribution = {r: 0 for r in ORIGINAL_RELATIONS}

    for row_idx, row in enumerate(reader):
        lineno = row_idx + 2  # header is line 1
        base_raw = (row.get("event") or "").strip()
        if not base_raw:
            raise IngestError(f"line {lineno}: empty base event")
        cluster_id = f"c{row_idx}"
        base_id = graph.add_event(canonicalize_event_text(base_raw), KIND_BASE, cluster_id)
        graph.add_cluster(cluster_id, base_id)

        if has_split:
            split = _SPLIT_ALIASES.get((row.get("split") or "").strip().lower())
            if split is None:
                raise IngestError(f"line {lineno}: unknown split value {row.get('split')!r}")
            report.split_clusters.setdefault(split, []).append(cluster_id)

        for relation in ORIGINAL_RELATIONS:
            for annotation in _parse_cell(row.get(relation) or "", lineno, relation):
                report.annotations_seen += 1
                normalized = normalize_tail(annotation, relation)
                if normalized is None:
                    if filter_annotation(annotation):
                        report.dropped_empty += 1
                    else:
                        report.dropped_filtered += 1
                    continue
                report.relation_distribution[relation] += 1
                tail_id = graph.add_event(normalized.text, KIND_TAIL, cluster_id)
                if tail_id == base_id:
                    report.dropped_self_loops += 1
                    continue
                if graph.add_triplet(base_id, normalized.relation, tail_id, HUMAN):
                    graph.add_member(cluster_id, tail_id)
                else:
                    report.duplicate_edges += 1
                    graph.add_member(cluster_id, tail_id)

    report.clusters = len(graph.clusters)
    report.events = graph.num_events()
    report.triplets = graph.num_triplets()
    return graph, report


def ingest_file(path: str) -> tuple[Graph, IngestReport]:
    try:
        with open(path, encoding="utf-8") as f:
            return ingest_annotations(f)
    except GraphError as exc:
        raise IngestError(str(exc)) from None


def write_split_files(report: IngestReport, out_dir: str) -> None:
    import os

    for split, cluster_ids in sorted(report.split_clusters.items()):
        with open(os.path.join(out_dir, f"split_{split}.txt"), "w", encoding="utf-8") as f:
            for cid in cluster_ids:
                f.write(cid + "\n")


def write_relation_distribution(report: IngestReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.relation_distribution, f, indent=2, sort_keys=True)
        f.write("\n")


def read_split_file(path: str) -> List[str]:
    with open(path, encoding="utf-8") as f:
        return [line.strip() for line in f if line.strip()]
