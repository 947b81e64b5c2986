"""Relation alphabets: the nine original annotation relations, the six
grouped relations used on the densified graph, and the NoLink decision.

Grouping merges relations that become indistinguishable after tail
normalization: xEffect+xWant -> xAfter, oEffect+oWant -> oAfter,
xAttr+xReact -> xPersona, oReact -> oPersona; xIntent and xNeed stay.
"""

from __future__ import annotations

# Original annotation relations, in the raw file's column order.
ORIGINAL_RELATIONS = (
    "oEffect",
    "oReact",
    "oWant",
    "xAttr",
    "xEffect",
    "xIntent",
    "xNeed",
    "xReact",
    "xWant",
)

# Canonical grouped order; this is also the wire-protocol order of the
# scorer's probability vector.
GROUPED_RELATIONS = ("xIntent", "xNeed", "xAfter", "oAfter", "xPersona", "oPersona")

NOLINK = "NoLink"

K = len(GROUPED_RELATIONS)

GROUPING = {
    "xIntent": "xIntent",
    "xNeed": "xNeed",
    "xEffect": "xAfter",
    "xWant": "xAfter",
    "oEffect": "oAfter",
    "oWant": "oAfter",
    "xAttr": "xPersona",
    "xReact": "xPersona",
    "oReact": "oPersona",
}

# Preimage of the grouping map, members in ORIGINAL_RELATIONS order.
PREIMAGE = {
    "xIntent": ("xIntent",),
    "xNeed": ("xNeed",),
    "xAfter": ("xEffect", "xWant"),
    "oAfter": ("oEffect", "oWant"),
    "xPersona": ("xAttr", "xReact"),
    "oPersona": ("oReact",),
}

# Relations whose annotations were prompted as infinitives ("to ...").
INFINITIVE_RELATIONS = frozenset({"xIntent", "xWant", "xNeed", "oWant"})

# Subject prefix re-inserted after normalization, per original relation.
RECOVERY_PREFIX = {
    "xAttr": "PersonX is",
    "xReact": "PersonX is",
    "oReact": "PersonY is",
    "oWant": "PersonY",
    "oEffect": "PersonY",
    "xIntent": "PersonX",
    "xNeed": "PersonX",
    "xEffect": "PersonX",
    "xWant": "PersonX",
}

# Grouped relations whose tails talk about PersonY.
O_SIDE_GROUPED = frozenset({"oAfter", "oPersona"})
PERSONA_GROUPED = frozenset({"xPersona", "oPersona"})

RELATION_INDEX = {rel: i for i, rel in enumerate(GROUPED_RELATIONS)}


def group_relation(relation: str) -> str:
    """Map an original relation onto its grouped relation."""
    try:
        return GROUPING[relation]
    except KeyError:
        raise ValueError(f"not an original relation: {relation!r}") from None


def is_original(relation: str) -> bool:
    return relation in GROUPING


def is_grouped(relation: str) -> bool:
    return relation in RELATION_INDEX
