"""Intent/slot schema: co-occurrence-derived candidate slots and prompt-facing descriptions.

A slot type is *relevant* to an intent when the two co-occur at least once in
the derivation corpus; it is *general* when it co-occurs with strictly more
than `general_threshold` distinct intents. Prompts expose descriptions, never
raw dataset labels, so every description must be unique and reversible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

from .corpus import Dataset
from .errors import EmptyCorpus, MissingDescription, ParseError, SchemaError

# Returned by matching when a generation maps to no intent in the inventory.
UNMATCHED = "<unmatched>"


@dataclass(frozen=True)
class IntentDescriptor:
    raw_label: str
    description: str


@dataclass(frozen=True)
class SlotDescriptor:
    slot_type: str
    description: str
    closed_values: tuple[str, ...] = ()


@dataclass(frozen=True)
class SchemaIndex:
    intents: tuple[IntentDescriptor, ...]
    slots: tuple[SlotDescriptor, ...]
    relevant: dict[str, tuple[str, ...]]
    general: tuple[str, ...]
    general_threshold: int = 3

    def __post_init__(self):
        slot_types = {d.slot_type for d in self.slots}
        if len(slot_types) != len(self.slots):
            raise SchemaError("duplicate slot types in schema")
        descriptions = [_canon(d.description) for d in self.intents]
        if len(set(descriptions)) != len(descriptions):
            raise SchemaError("intent descriptions must be unique")
        for group in list(self.relevant.values()) + [self.general]:
            missing = set(group) - slot_types
            if missing:
                raise SchemaError(f"slot types without descriptors: {sorted(missing)}")

    @cached_property
    def _intent_by_label(self) -> dict[str, IntentDescriptor]:
        return {d.raw_label: d for d in self.intents}

    @cached_property
    def _label_by_description(self) -> dict[str, str]:
        return {_canon(d.description): d.raw_label for d in self.intents}

    @cached_property
    def _slot_by_type(self) -> dict[str, SlotDescriptor]:
        return {d.slot_type: d for d in self.slots}

    def description_of(self, raw_label: str) -> str:
        return self._intent_by_label[raw_label].description

    def slot(self, slot_type: str) -> SlotDescriptor:
        return self._slot_by_type[slot_type]


def _canon(s: str) -> str:
    return " ".join(s.lower().split())


def load_descriptions(path: str | Path) -> tuple[dict[str, str], dict[str, SlotDescriptor]]:
    """Read the authored description file for one dataset.

    Layout: {"intents": {raw_label: description},
             "slots": {slot_type: {"description": ..., "closed_values": [...]?}}}
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", path=str(path), locus=f"line {e.lineno}") from e
    for key in ("intents", "slots"):
        if key not in doc:
            raise ParseError(f"missing top-level key {key!r}", path=str(path))
    intents = dict(doc["intents"])
    slots = {}
    for slot_type, entry in doc["slots"].items():
        slots[slot_type] = SlotDescriptor(
            slot_type=slot_type,
            description=entry["description"],
            closed_values=tuple(entry.get("closed_values", ())),
        )
    return intents, slots


def derive_schema(
    train: Dataset,
    descriptions: str | Path | tuple[dict[str, str], dict[str, SlotDescriptor]],
    general_threshold: int = 3,
) -> SchemaIndex:
    """Build the SchemaIndex from intent-slot co-occurrence counts over `train`.

    Every intent and slot type appearing in `train` must have a description;
    the description file may declare extra inventory entries that never occur.
    """
    if not train.examples:
        raise EmptyCorpus(f"no examples in {train.name}/{train.split}")
    if isinstance(descriptions, (str, Path)):
        intent_desc, slot_desc = load_descriptions(descriptions)
    else:
        intent_desc, slot_desc = descriptions

    slots_by_intent: dict[str, set[str]] = {}
    intents_by_slot: dict[str, set[str]] = {}
    for ex in train.examples:
        if ex.gold_intent not in intent_desc:
            raise MissingDescription("intent", ex.gold_intent)
        slots_by_intent.setdefault(ex.gold_intent, set())
        for slot in ex.gold_slots:
            if slot.slot_type not in slot_desc:
                raise MissingDescription("slot", slot.slot_type)
            slots_by_intent[ex.gold_intent].add(slot.slot_type)
            intents_by_slot.setdefault(slot.slot_type, set()).add(ex.gold_intent)

    relevant = {intent: tuple(sorted(types)) for intent, types in slots_by_intent.items()}
    general = tuple(
        sorted(t for t, intents in intents_by_slot.items() if len(intents) > general_threshold)
    )
    return SchemaIndex(
        intents=tuple(IntentDescriptor(label, desc) for label, desc in intent_desc.items()),
        slots=tuple(slot_desc.values()),
        relevant=relevant,
        general=general,
        general_threshold=general_threshold,
    )


def candidate_slots(schema: SchemaIndex, intent: str) -> tuple[SlotDescriptor, ...]:
    """Candidate slots exposed in an SF prompt for `intent`.

    Relevant slots first, then the general block appended after them, each
    alphabetical; a slot that is both relevant and general appears once, in
    the general block. Unmatched (or unknown) intents fall back to general
    slots only.
    """
    relevant = schema.relevant.get(intent, ()) if intent != UNMATCHED else ()
    general = set(schema.general)
    ordered = [t for t in relevant if t not in general] + list(schema.general)
    return tuple(schema.slot(t) for t in ordered)


def match_description(schema: SchemaIndex, text: str) -> tuple[str, str]:
    """Map generated text to a raw intent label.

    Returns (label, via) where via is "exact" | "unique-containment" | "none".
    Exact match is case-insensitive on the description; failing that, text
    containing exactly one description matches it.
    """
    canon = _canon(text)
    by_desc = schema._label_by_description
    if canon in by_desc:
        return by_desc[canon], "exact"
    contained = [label for desc, label in by_desc.items() if desc and desc in canon]
    if len(contained) == 1:
        return contained[0], "unique-containment"
    return UNMATCHED, "none"


def map_description_to_label(schema: SchemaIndex, text: str) -> str:
    """Raw intent label for `text`, or UNMATCHED."""
    return match_description(schema, text)[0]
