"""Benchmark ingestion: native loaders converge on one canonical dataset model.

Every loader produces the same immutable :class:`Dataset` of :class:`Utterance`
values. Whether a gold slot value is *inferred* (not a contiguous span of the
utterance) is always recomputed here with the case-insensitive substring rule,
never trusted from the input file.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import ParseError, SchemaError

SPLITS = ("train", "dev", "test")

FORMATS = ("canonical-json", "snips-native", "massive-native", "multiwoz-native")

# MultiWOZ marks inactive frames with this pseudo-intent.
_NO_INTENT = ("", "NONE", "none")

_MASSIVE_SLOT_RE = re.compile(r"\[\s*([^:\[\]]+?)\s*:\s*([^\[\]]+?)\s*\]")


def _squash_ws(s: str) -> str:
    return " ".join(s.split())


def is_inferred(text: str, value: str) -> bool:
    """True when `value` is not a case-insensitive substring of the utterance."""
    return _squash_ws(value).lower() not in _squash_ws(text).lower()


@dataclass(frozen=True)
class GoldSlot:
    slot_type: str
    value: str
    inferred: bool

    def __post_init__(self):
        if not self.value:
            raise SchemaError(f"empty value for slot type {self.slot_type!r}")


@dataclass(frozen=True)
class Utterance:
    id: str
    text: str
    gold_intent: str
    gold_slots: tuple[GoldSlot, ...] = ()
    # Set by the MultiWOZ loader when several domains are active on the first
    # turn and only the first one was kept; surfaced by validate().
    ambiguous_intent: bool = False

    def __post_init__(self):
        if not self.text.strip():
            raise SchemaError(f"utterance {self.id!r} has empty text")
        seen = set()
        for slot in self.gold_slots:
            if slot.slot_type in seen:
                raise SchemaError(f"utterance {self.id!r} repeats slot type {slot.slot_type!r}")
            seen.add(slot.slot_type)

    def slot_value(self, slot_type: str) -> str | None:
        for slot in self.gold_slots:
            if slot.slot_type == slot_type:
                return slot.value
        return None


@dataclass(frozen=True)
class Dataset:
    name: str
    split: str
    examples: tuple[Utterance, ...] = ()

    def __post_init__(self):
        if self.split not in SPLITS:
            raise SchemaError(f"unknown split {self.split!r}")
        seen = set()
        for ex in self.examples:
            if ex.id in seen:
                raise SchemaError(f"duplicate utterance id {ex.id!r}")
            seen.add(ex.id)

    def __len__(self) -> int:
        return len(self.examples)

    def intents(self) -> tuple[str, ...]:
        return tuple(sorted({ex.gold_intent for ex in self.examples}))

    def slot_types(self) -> tuple[str, ...]:
        return tuple(sorted({s.slot_type for ex in self.examples for s in ex.gold_slots}))


def _make_slots(text: str, raw_pairs: list[tuple[str, str]], *, dedupe: bool) -> tuple[GoldSlot, ...]:
    """Build gold slots, recomputing the inferred flag.

    With dedupe=True repeated slot types keep the first listed value (native
    annotation quirk); with dedupe=False a repeat is a SchemaError.
    """
    out: list[GoldSlot] = []
    seen: set[str] = set()
    for slot_type, value in raw_pairs:
        slot_type = slot_type.strip()
        value = _squash_ws(value)
        if slot_type in seen:
            if dedupe:
                continue
            raise SchemaError(f"repeated slot type {slot_type!r}")
        seen.add(slot_type)
        out.append(GoldSlot(slot_type, value, is_inferred(text, value)))
    return tuple(out)


def load_dataset(path: str | Path, format: str, *, split: str = "train", name: str | None = None) -> Dataset:
    """Load a dataset file in the declared format into the canonical model.

    `split` selects the partition for native formats that bundle several
    (MASSIVE) or encode it in file names (SNIPS directories); canonical files
    carry their own split and ignore it.
    """
    path = Path(path)
    if format not in FORMATS:
        raise ParseError(f"unknown format {format!r}", path=str(path))
    if not path.exists():
        raise ParseError("file not found", path=str(path))
    if format == "canonical-json":
        return _load_canonical(path)
    if format == "snips-native":
        return _load_snips(path, split=split, name=name or "snips")
    if format == "massive-native":
        return _load_massive(path, split=split, name=name or "massive")
    return _load_multiwoz(path, split=split, name=name or "multiwoz")


def _read_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", path=str(path), locus=f"line {e.lineno}") from e


def _load_canonical(path: Path) -> Dataset:
    doc = _read_json(path)
    for key in ("name", "split", "examples"):
        if key not in doc:
            raise ParseError(f"missing top-level key {key!r}", path=str(path))
    examples = []
    for i, rec in enumerate(doc["examples"]):
        try:
            text = rec["text"]
            pairs = [(s["type"], s["value"]) for s in rec.get("slots", [])]
            examples.append(
                Utterance(
                    id=rec["id"],
                    text=text.strip(),
                    gold_intent=rec["intent"],
                    gold_slots=_make_slots(text, pairs, dedupe=False),
                )
            )
        except KeyError as e:
            raise ParseError(f"record missing key {e}", path=str(path), locus=f"examples[{i}]") from e
    return Dataset(name=doc["name"], split=doc["split"], examples=tuple(examples))


def write_canonical(dataset: Dataset, path: str | Path) -> None:
    """Serialize to the canonical JSON document (inferred flags are recomputed on load)."""
    doc = {
        "name": dataset.name,
        "split": dataset.split,
        "examples": [
            {
                "id": ex.id,
                "text": ex.text,
                "intent": ex.gold_intent,
                "slots": [{"type": s.slot_type, "value": s.value} for s in ex.gold_slots],
            }
            for ex in dataset.examples
        ],
    }
    Path(path).write_text(json.dumps(doc, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


_SNIPS_SPLIT_PREFIX = {"train": "train_", "dev": "validate_", "test": "test_"}


def _load_snips(path: Path, *, split: str, name: str) -> Dataset:
    """SNIPS published layout: {intent: [{"data": [chunks]}]} per file.

    A chunk is {"text": ...} filler or {"text": ..., "slot_name"/"entity": ...}
    for a slot span. `path` may be one combined file or a directory of
    per-intent files prefixed by split.
    """
    if path.is_dir():
        prefix = _SNIPS_SPLIT_PREFIX[split]
        files = sorted(p for p in path.glob("*.json") if p.name.startswith(prefix))
        if not files:
            raise ParseError(f"no {prefix}*.json files", path=str(path))
    else:
        files = [path]
    examples = []
    for file in files:
        doc = _read_json(file)
        if not isinstance(doc, dict):
            raise ParseError("expected {intent: [utterances]}", path=str(file))
        for intent, records in doc.items():
            for i, rec in enumerate(records):
                chunks = rec.get("data")
                if chunks is None:
                    raise ParseError("utterance missing 'data'", path=str(file), locus=f"{intent}[{i}]")
                text = "".join(c.get("text", "") for c in chunks)
                pairs = [
                    (c.get("slot_name") or c["entity"], c["text"])
                    for c in chunks
                    if "slot_name" in c or "entity" in c
                ]
                examples.append(
                    Utterance(
                        id=f"{intent}/{i}",
                        text=text.strip(),
                        gold_intent=intent,
                        gold_slots=_make_slots(text, pairs, dedupe=True),
                    )
                )
    return Dataset(name=name, split=split, examples=tuple(examples))


def _load_massive(path: Path, *, split: str, name: str) -> Dataset:
    """MASSIVE published layout: JSONL with partition, intent, utt and a
    bracket-annotated `annot_utt` ("wake me at [time : nine am]")."""
    partition = {"train": "train", "dev": "dev", "test": "test"}[split]
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON: {e.msg}", path=str(path), locus=f"line {lineno}") from e
            if rec.get("partition") != partition:
                continue
            try:
                text = rec["utt"]
                pairs = _MASSIVE_SLOT_RE.findall(rec.get("annot_utt", ""))
                examples.append(
                    Utterance(
                        id=str(rec["id"]),
                        text=text.strip(),
                        gold_intent=rec["intent"],
                        gold_slots=_make_slots(text, pairs, dedupe=True),
                    )
                )
            except KeyError as e:
                raise ParseError(f"record missing key {e}", path=str(path), locus=f"line {lineno}") from e
    return Dataset(name=name, split=split, examples=tuple(examples))


def _load_multiwoz(path: Path, *, split: str, name: str) -> Dataset:
    dialogs = _read_json(path)
    if not isinstance(dialogs, list):
        raise ParseError("expected a list of dialogues", path=str(path))
    return extract_first_turns(dialogs, name=name, split=split)


def extract_first_turns(dialogs: list[dict], *, name: str = "multiwoz", split: str = "test") -> Dataset:
    """One Utterance per conversation: its first user turn with turn-level annotations.

    The intent is the first frame's active intent; when several frames are
    active the first is kept and the utterance flagged ambiguous. Multi-valued
    slots keep the first listed value.
    """
    examples = []
    for dialog in dialogs:
        dialog_id = dialog.get("dialogue_id") or dialog.get("dialog_id") or f"dlg-{len(examples)}"
        turn = next(
            (t for t in dialog.get("turns", []) if str(t.get("speaker", "")).upper() == "USER"),
            None,
        )
        if turn is None:
            raise SchemaError(f"conversation {dialog_id!r} has no user turn")
        active = []
        pairs: list[tuple[str, str]] = []
        for frame in turn.get("frames", []):
            state = frame.get("state", {})
            intent = state.get("active_intent")
            if intent and intent not in _NO_INTENT:
                active.append(intent)
            values = state.get("slot_values") or state.get("slots_values") or {}
            for slot_type, value in values.items():
                if isinstance(value, list):
                    if not value:
                        continue
                    value = value[0]
                pairs.append((slot_type, str(value)))
        if not active:
            raise SchemaError(f"conversation {dialog_id!r} first turn has no active intent")
        text = turn.get("utterance", "")
        examples.append(
            Utterance(
                id=dialog_id,
                text=text.strip(),
                gold_intent=active[0],
                gold_slots=_make_slots(text, pairs, dedupe=True),
                ambiguous_intent=len(set(active)) > 1,
            )
        )
    return Dataset(name=name, split=split, examples=tuple(examples))


@dataclass(frozen=True)
class Violation:
    utterance_id: str
    kind: str  # "intent" | "slot"
    label: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()
    ambiguous_ids: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.violations)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(dataset: Dataset, schema) -> ValidationReport:
    """Report every utterance whose intent or slot types are outside the schema inventory."""
    known_intents = {d.raw_label for d in schema.intents}
    known_slots = {d.slot_type for d in schema.slots}
    violations = []
    ambiguous = []
    for ex in dataset.examples:
        if ex.gold_intent not in known_intents:
            violations.append(Violation(ex.id, "intent", ex.gold_intent))
        for slot in ex.gold_slots:
            if slot.slot_type not in known_slots:
                violations.append(Violation(ex.id, "slot", slot.slot_type))
        if ex.ambiguous_intent:
            ambiguous.append(ex.id)
    return ValidationReport(tuple(violations), tuple(ambiguous))
