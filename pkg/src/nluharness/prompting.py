"""Prompt rendering for IC (four templates), single-prompt SF, and the
per-slot multi-prompt SF baseline, plus the instruction-pair exporter.

Rendering is a pure function of its inputs and byte-stable (LF newlines,
blank-line segment separators), so prompt text doubles as a cache key.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .corpus import Dataset, Utterance
from .errors import ConfigError, IoError
from .fewshot import FewShotSet, fill_nulls
from .schema import SchemaIndex, SlotDescriptor, candidate_slots

# Literal the decoder recognizes as "slot not mentioned".
NULL = "null"

IC_MAX_NEW_TOKENS = 10
SF_MAX_NEW_TOKENS = 100


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    instruction_pattern: str  # "{L}"/"{S}" marks the label block
    input_pattern: str  # "{x}" marks the utterance ("{t}"/"{d}" the slot for SFMULTI)
    expose_labels: bool = True

    def without_labels(self) -> "PromptTemplate":
        return PromptTemplate(self.id, self.instruction_pattern, self.input_pattern, False)


IC_TEMPLATES: dict[str, PromptTemplate] = {
    "P1": PromptTemplate(
        "P1",
        "Given the possible intents: {L}",
        "What is the user's intent in '{x}'? Intent:",
    ),
    "P2": PromptTemplate(
        "P2",
        "Given the following options: {L}",
        "What did the user want when the user said, '{x}'? Answer:",
    ),
    "P3": PromptTemplate(
        "P3",
        "Classify the USER's utterances into one of the following intent options: {L}",
        "USER: '{x}' Intent:",
    ),
    "P4": PromptTemplate(
        "P4",
        "Given a USER's utterance, choose one of the following intents: {L}",
        "USER: '{x}' Intent:",
    ),
}

SF_INSTRUCTION_HEAD = "Extract values for the following slots from the USER's utterance."
SF_SLOTS_LEAD = "Slots:"
SF_NO_SLOTS_LINE = "(no applicable slots)"
SF_INSTRUCTION_TAIL = (
    "Answer with 'type: value' pairs separated by '; '. "
    "Use null when a slot is not mentioned."
)

SF_TEMPLATE = PromptTemplate(
    "SF1",
    SF_INSTRUCTION_HEAD + " " + SF_SLOTS_LEAD + " {S}. " + SF_INSTRUCTION_TAIL,
    "USER: '{x}' Slots:",
)

SF_MULTI_TEMPLATE = PromptTemplate(
    "SFMULTI",
    "",
    "What is the value of slot '{t}: {d}' in '{x}'? Answer with the value or null.",
)


@dataclass(frozen=True)
class Prompt:
    text: str
    task: str  # "IC" | "SF"
    template_id: str
    utterance_id: str
    fewshot_ids: tuple[str, ...] = ()
    candidate_intents: tuple[str, ...] = ()  # exposed intent descriptions
    candidate_slots: tuple[str, ...] = ()  # slot types the parser may accept
    max_new_tokens: int = IC_MAX_NEW_TOKENS


def serialize_slots(pairs: list[tuple[str, str | None]]) -> str:
    """Join (type, value-or-None) pairs as 'type: value; ...' with the null sentinel."""
    return "; ".join(f"{t}: {v if v is not None else NULL}" for t, v in pairs)


def _assemble(instruction: str, exemplars: list[str], query: str) -> str:
    segments = ([instruction] if instruction else []) + exemplars + [query]
    return "\n\n".join(segments)


def _fill(pattern: str, **values: str) -> str:
    out = pattern
    for key, value in values.items():
        out = out.replace("{" + key + "}", value)
    return out


def render_ic_prompt(
    template: PromptTemplate | str,
    schema: SchemaIndex,
    fewshot: FewShotSet | None,
    utterance: Utterance,
) -> Prompt:
    """Render one IC prompt; {L} expands to one intent description per line."""
    if isinstance(template, str):
        template = IC_TEMPLATES[template]
    if template.id not in IC_TEMPLATES:
        raise ConfigError(f"{template.id!r} is not an IC template")
    labels = tuple(d.description for d in schema.intents)
    if template.expose_labels:
        lead, _, _ = template.instruction_pattern.partition("{L}")
        instruction = lead.rstrip() + "\n" + "\n".join(labels)
    else:
        instruction = ""
    exemplars = [
        _fill(template.input_pattern, x=ex.utterance.text) + " " + ex.target_text
        for ex in (fewshot.exemplars if fewshot else ())
    ]
    query = _fill(template.input_pattern, x=utterance.text)
    return Prompt(
        text=_assemble(instruction, exemplars, query),
        task="IC",
        template_id=template.id,
        utterance_id=utterance.id,
        fewshot_ids=fewshot.ids() if fewshot else (),
        candidate_intents=labels if template.expose_labels else (),
        max_new_tokens=IC_MAX_NEW_TOKENS,
    )


def _sf_instruction(candidates: tuple[SlotDescriptor, ...], expose_labels: bool) -> str:
    if not expose_labels:
        return SF_INSTRUCTION_HEAD + "\n" + SF_INSTRUCTION_TAIL
    lines = [f"{c.slot_type}: {c.description}" for c in candidates] or [SF_NO_SLOTS_LINE]
    return "\n".join([SF_INSTRUCTION_HEAD, SF_SLOTS_LEAD, *lines, SF_INSTRUCTION_TAIL])


def render_sf_prompt(
    schema: SchemaIndex,
    intent: str,
    fewshot: FewShotSet | None,
    utterance: Utterance,
    expose_labels: bool = True,
) -> Prompt:
    """Render the single SF prompt listing every candidate slot for `intent`
    (gold or predicted; Unmatched falls back to general slots)."""
    candidates = candidate_slots(schema, intent)
    exemplars = [
        _fill(SF_TEMPLATE.input_pattern, x=ex.utterance.text) + " " + ex.target_text
        for ex in (fewshot.exemplars if fewshot else ())
    ]
    query = _fill(SF_TEMPLATE.input_pattern, x=utterance.text)
    return Prompt(
        text=_assemble(_sf_instruction(candidates, expose_labels), exemplars, query),
        task="SF",
        template_id="SF1",
        utterance_id=utterance.id,
        fewshot_ids=fewshot.ids() if fewshot else (),
        candidate_slots=tuple(c.slot_type for c in candidates),
        max_new_tokens=SF_MAX_NEW_TOKENS,
    )


def render_sf_multiprompts(schema: SchemaIndex, intent: str, utterance: Utterance) -> list[Prompt]:
    """Multi-prompt SF baseline: one prompt per candidate slot type."""
    prompts = []
    for cand in candidate_slots(schema, intent):
        text = _fill(
            SF_MULTI_TEMPLATE.input_pattern,
            t=cand.slot_type,
            d=cand.description,
            x=utterance.text,
        )
        prompts.append(
            Prompt(
                text=text,
                task="SF",
                template_id="SFMULTI",
                utterance_id=utterance.id,
                candidate_slots=(cand.slot_type,),
                max_new_tokens=SF_MAX_NEW_TOKENS,
            )
        )
    return prompts


def export_instruction_dataset(
    train: Dataset,
    schema: SchemaIndex,
    templates: list[PromptTemplate | str],
    out: str | Path,
) -> int:
    """Write one {"prompt", "target"} JSONL record per (example, template).

    Prompts are zero-shot renders; IC targets are intent descriptions, SF
    targets the null-filled serialization over the gold intent's candidates.
    """
    records = []
    for template in templates:
        if isinstance(template, str):
            template = IC_TEMPLATES.get(template) or {
                "SF1": SF_TEMPLATE,
                "SFMULTI": SF_MULTI_TEMPLATE,
            }.get(template)
            if template is None:
                raise ConfigError(f"unknown template id in export: {template!r}")
        for ex in train.examples:
            if template.id in IC_TEMPLATES:
                prompt = render_ic_prompt(template, schema, None, ex)
                target = schema.description_of(ex.gold_intent)
                records.append((prompt.text, target))
            elif template.id == "SF1":
                prompt = render_sf_prompt(
                    schema, ex.gold_intent, None, ex, expose_labels=template.expose_labels
                )
                candidates = candidate_slots(schema, ex.gold_intent)
                target = serialize_slots(fill_nulls(ex, candidates))
                records.append((prompt.text, target))
            else:
                for prompt in render_sf_multiprompts(schema, ex.gold_intent, ex):
                    value = ex.slot_value(prompt.candidate_slots[0])
                    records.append((prompt.text, value if value is not None else NULL))
    try:
        with open(out, "w", encoding="utf-8") as fh:
            for prompt_text, target in records:
                fh.write(json.dumps({"prompt": prompt_text, "target": target}, ensure_ascii=False))
                fh.write("\n")
    except OSError as e:
        raise IoError(f"cannot write export: {e}") from e
    return len(records)
