"""Tail-event normalization: rewrite an annotated tail event into a
"Subject + Verb + Object" present-tense sentence and group its relation.

The pipeline is filter -> tag -> remove_subject -> strip_infinitive ->
conjugate_third_person -> recover_subject, then relation grouping. It is
a total function: inputs that fail the filter (or reduce to nothing)
come back as None.

Tagging is rule/lexicon based and tuned for short formulaic event
phrases. A heavier tagger can be swapped in by replacing :func:`tag`;
everything downstream only consumes the coarse tag set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, NamedTuple, Optional

from .lexicon import (
    ADJECTIVES,
    IRREGULAR_LEMMA,
    IRREGULAR_THIRD_PERSON,
    MODAL_VERBS,
    SUBJECT_PRONOUNS,
    VERB_BASES,
)
from .relations import (
    INFINITIVE_RELATIONS,
    RECOVERY_PREFIX,
    group_relation,
    is_original,
)

POS_PRP = "PRP"
POS_VB = "VB"
POS_VBZ = "VBZ"
POS_TO = "TO"
POS_ADJ = "ADJ"
POS_OTHER = "OTHER"

DEP_SUBJ = "subj"
DEP_OTHER = "other"

_SIBILANT_ENDINGS = ("s", "x", "z", "ch", "sh")
_VOWELS = "aeiou"


@dataclass(frozen=True)
class TaggedToken:
    token: str
    pos: str
    dep: str = DEP_OTHER


class NormalizedEvent(NamedTuple):
    text: str
    relation: str  # grouped


def filter_annotation(text: str) -> bool:
    """False iff the annotation contains an underscore or is "none"."""
    if "_" in text:
        return False
    return text.strip().lower() != "none"


def _is_person_x(token: str) -> bool:
    return token.lower() in ("personx", "x")


def _is_person_y(token: str) -> bool:
    return token.lower() in ("persony", "y")


def _canonical(token: str) -> str:
    if _is_person_x(token):
        return "PersonX"
    if _is_person_y(token):
        return "PersonY"
    return token.lower()


def _ends_sibilant(word: str) -> bool:
    return word.endswith(_SIBILANT_ENDINGS)


def lemmatize_verb(word: str) -> str:
    """Reduce a third-person-singular verb form to its base form.

    Candidate stems are checked against the verb lexicon before the
    bare suffix rules apply, so "uses" -> "use" rather than "us".
    """
    word = word.lower()
    if word in IRREGULAR_LEMMA:
        return IRREGULAR_LEMMA[word]
    if word in VERB_BASES or word in MODAL_VERBS:
        return word
    candidates = []
    if word.endswith("ies") and len(word) > 3:
        candidates.append(word[:-3] + "y")
    if word.endswith("es") and len(word) > 2 and _ends_sibilant(word[:-2]):
        candidates.append(word[:-2])
    if word.endswith("s") and not word.endswith("ss") and len(word) > 1:
        candidates.append(word[:-1])
    for cand in candidates:
        if cand in VERB_BASES:
            return cand
    return candidates[0] if candidates else word


def inflect_third_person(base: str) -> str:
    """Inflect a base-form verb to third-person singular."""
    base = base.lower()
    if base in MODAL_VERBS:
        return base
    if base in IRREGULAR_THIRD_PERSON:
        return IRREGULAR_THIRD_PERSON[base]
    if base.endswith("y") and len(base) > 1 and base[-2] not in _VOWELS:
        return base[:-1] + "ies"
    if _ends_sibilant(base):
        return base + "es"
    return base + "s"


def _is_third_person_form(word: str) -> bool:
    if word in IRREGULAR_LEMMA:
        return True
    lemma = lemmatize_verb(word)
    return lemma != word and lemma in VERB_BASES


def tag(text: str) -> List[TaggedToken]:
    """Tag whitespace tokens with the coarse tag set.

    A leading subject pronoun (including PersonX/PersonY/X/Y literals)
    tags PRP/subj; the first verb-lexicon hit tags VB or VBZ; "to" tags
    TO; adjective-lexicon words tag ADJ; everything else OTHER. A word
    in both the verb and adjective lexicons tags ADJ when it is the
    only token (single-word attribute annotations), else VB.
    """
    tokens = text.split()
    if not tokens:
        raise ValueError("cannot tag empty text")
    tagged: List[TaggedToken] = []
    verb_found = False
    for i, tok in enumerate(tokens):
        low = tok.lower()
        if i == 0 and low in SUBJECT_PRONOUNS:
            tagged.append(TaggedToken(tok, POS_PRP, DEP_SUBJ))
            continue
        if low == "to":
            tagged.append(TaggedToken(tok, POS_TO))
            continue
        if not verb_found:
            is_adjective = low in ADJECTIVES
            if _is_third_person_form(low) and not (is_adjective and len(tokens) == 1):
                tagged.append(TaggedToken(tok, POS_VBZ))
                verb_found = True
                continue
            if (low in VERB_BASES or low in MODAL_VERBS) and not (
                is_adjective and len(tokens) == 1
            ):
                tagged.append(TaggedToken(tok, POS_VB))
                verb_found = True
                continue
        if low in ADJECTIVES:
            tagged.append(TaggedToken(tok, POS_ADJ))
            continue
        tagged.append(TaggedToken(tok, POS_OTHER))
    return tagged


def remove_subject(tokens: List[TaggedToken]) -> List[TaggedToken]:
    """Drop a leading pronoun subject."""
    if tokens and tokens[0].pos == POS_PRP and tokens[0].dep == DEP_SUBJ:
        return tokens[1:]
    return tokens


def strip_infinitive(tokens: List[TaggedToken], relation: str) -> List[TaggedToken]:
    """Drop a leading "to" for the four infinitive-prompted relations."""
    if not is_original(relation):
        raise ValueError(f"not an original relation: {relation!r}")
    if relation in INFINITIVE_RELATIONS and tokens and tokens[0].token.lower() == "to":
        return tokens[1:]
    return tokens


def conjugate_third_person(tokens: List[TaggedToken]) -> List[TaggedToken]:
    """Re-inflect the head verb (first VB-class token) to third-person
    singular; sentences without a verb pass through unchanged."""
    for i, t in enumerate(tokens):
        if t.pos in (POS_VB, POS_VBZ):
            inflected = inflect_third_person(lemmatize_verb(t.token))
            return tokens[:i] + [TaggedToken(inflected, POS_VBZ)] + tokens[i + 1 :]
    return tokens


def recover_subject(tokens: List[TaggedToken], relation: str) -> str:
    """Prefix the relation's subject and produce the final sentence.

    xAttr/xReact get "PersonX is", oReact "PersonY is", oWant/oEffect
    "PersonY", the rest "PersonX". A body already starting with "is"
    is not doubled under an "is" prefix (keeps normalization idempotent).
    """
    if not is_original(relation):
        raise ValueError(f"not an original relation: {relation!r}")
    prefix = RECOVERY_PREFIX[relation]
    words = [_canonical(t.token) for t in tokens]
    if prefix.endswith(" is") and words and words[0] == "is":
        words = words[1:]
    return " ".join([prefix] + words) if words else prefix


def normalize_tail(text: str, relation: str) -> Optional[NormalizedEvent]:
    """Run the whole normalization pipeline on one annotation.

    Returns None when the annotation is filtered out or nothing remains
    after subject removal.
    """
    if not is_original(relation):
        raise ValueError(f"not an original relation: {relation!r}")
    if not filter_annotation(text):
        return None
    if not text.split():
        return None
    tokens = tag(text)
    tokens = remove_subject(tokens)
    tokens = strip_infinitive(tokens, relation)
    tokens = conjugate_third_person(tokens)
    if not tokens:
        return None
    return NormalizedEvent(recover_subject(tokens, relation), group_relation(relation))


def canonicalize_event_text(text: str) -> str:
    """Light canonicalization for base events (already S+V+O shaped):
    collapse whitespace, lower-case, normalize PersonX/PersonY literals."""
    return " ".join(_canonical(tok) for tok in text.split())
