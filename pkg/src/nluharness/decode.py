"""Parse raw generations into structured IC/SF predictions.

Parsing never throws: anything unrecognizable becomes Unmatched (IC) or lands
in the dropped list (SF). All value comparison downstream uses `normalize`d
exact equality.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .backend import Generation
from .schema import UNMATCHED, SchemaIndex, match_description

# Answers meaning "no value for this slot".
_NULL_ANSWERS = {"", "null", "none"}

_SF_SPLIT_RE = re.compile(r"[;\n]")


def normalize(s: str) -> str:
    """Lowercase, collapse whitespace, strip surrounding quotes and terminal
    punctuation; idempotent."""
    s = " ".join(s.lower().split())
    while True:
        stripped = s.strip("'\"").rstrip(".,;:!?").strip()
        if stripped == s:
            return s
        s = stripped


@dataclass(frozen=True)
class IcPrediction:
    raw_text: str
    matched_label: str  # raw intent label or UNMATCHED
    matched_via: str  # "exact" | "unique-containment" | "none"

    @property
    def unmatched(self) -> bool:
        return self.matched_via == "none"


@dataclass(frozen=True)
class SfPair:
    slot_type: str
    value: str
    in_candidates: bool


@dataclass(frozen=True)
class SfPrediction:
    raw_text: str
    pairs: tuple[SfPair, ...]
    dropped: tuple[str, ...] = ()

    def as_tuples(self) -> list[tuple[str, str]]:
        return [(p.slot_type, p.value) for p in self.pairs]


def _first_line(text: str) -> str:
    for line in text.splitlines():
        if line.strip():
            return line
    return ""


def parse_ic(generation: Generation, schema: SchemaIndex) -> IcPrediction:
    """First non-empty line, normalized, mapped back to a raw label (or Unmatched)."""
    answer = normalize(_first_line(generation.text))
    label, via = match_description(schema, answer)
    return IcPrediction(raw_text=generation.text, matched_label=label, matched_via=via)


def parse_sf(generation: Generation, candidates) -> SfPrediction:
    """Split on ';'/newlines into 'type: value' pairs.

    Types are matched case-insensitively against the candidate set;
    out-of-candidate types are kept verbatim but flagged. Null answers drop
    the pair; fragments without a colon are recorded as dropped. On duplicate
    slot types the first occurrence wins.
    """
    by_norm = {}
    for cand in candidates:
        slot_type = cand if isinstance(cand, str) else cand.slot_type
        by_norm.setdefault(normalize(slot_type), slot_type)
    pairs: list[SfPair] = []
    dropped: list[str] = []
    seen: set[str] = set()
    for fragment in _SF_SPLIT_RE.split(generation.text):
        if not fragment.strip():
            continue
        head, colon, tail = fragment.partition(":")
        if not colon:
            dropped.append(fragment.strip())
            continue
        norm_type = normalize(head)
        value = normalize(tail)
        if value in _NULL_ANSWERS:
            continue
        slot_type = by_norm.get(norm_type)
        in_candidates = slot_type is not None
        if slot_type is None:
            slot_type = head.strip()
        if slot_type in seen:
            continue
        seen.add(slot_type)
        pairs.append(SfPair(slot_type, value, in_candidates))
    return SfPrediction(raw_text=generation.text, pairs=tuple(pairs), dropped=tuple(dropped))


def parse_slot_value(generation: Generation) -> str | None:
    """Single-slot answer for the multi-prompt strategy: a value or None for null."""
    value = normalize(_first_line(generation.text))
    return None if value in _NULL_ANSWERS else value
