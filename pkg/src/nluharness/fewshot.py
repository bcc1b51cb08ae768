"""Seeded few-shot exemplar selection for IC and SF prompts.

IC draws one example per intent label; SF draws utterances until every slot
type in the pool is covered. Either set is then capped by uniform seeded
subsampling so it fits the model context.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import Dataset, Utterance
from .errors import EmptyCorpus
from .schema import SchemaIndex, candidate_slots


@dataclass(frozen=True)
class Exemplar:
    utterance: Utterance
    target_text: str


@dataclass(frozen=True)
class FewShotSet:
    task: str  # "IC" | "SF"
    exemplars: tuple[Exemplar, ...]
    seed: int
    k_per_label: int
    cap: int

    def ids(self) -> tuple[str, ...]:
        return tuple(ex.utterance.id for ex in self.exemplars)

    def to_json(self) -> str:
        doc = {
            "task": self.task,
            "seed": self.seed,
            "k_per_label": self.k_per_label,
            "cap": self.cap,
            "exemplars": [
                {"id": ex.utterance.id, "text": ex.utterance.text, "target": ex.target_text}
                for ex in self.exemplars
            ],
        }
        return json.dumps(doc, ensure_ascii=False, indent=2)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")


def subsample_per_label(train: Dataset, k: int = 10, seed: int = 0) -> Dataset:
    """The small training pool: at most k random examples per intent label."""
    if not train.examples:
        raise EmptyCorpus(f"no examples in {train.name}/{train.split}")
    rng = random.Random(seed)
    by_intent: dict[str, list[Utterance]] = {}
    for ex in train.examples:
        by_intent.setdefault(ex.gold_intent, []).append(ex)
    kept: list[Utterance] = []
    for intent in sorted(by_intent):
        pool = by_intent[intent]
        kept.extend(pool if len(pool) <= k else rng.sample(pool, k))
    order = {ex.id: i for i, ex in enumerate(train.examples)}
    kept.sort(key=lambda ex: order[ex.id])
    return Dataset(name=train.name, split=train.split, examples=tuple(kept))


def sample_ic_fewshot(
    train: Dataset, schema: SchemaIndex, seed: int, cap: int = 10, k_per_label: int = 10
) -> FewShotSet:
    """One seeded random example per intent present in train, capped to `cap`."""
    if not train.examples:
        raise EmptyCorpus(f"no examples in {train.name}/{train.split}")
    rng = random.Random(seed)
    by_intent: dict[str, list[Utterance]] = {}
    for ex in train.examples:
        by_intent.setdefault(ex.gold_intent, []).append(ex)
    picks = [rng.choice(by_intent[intent]) for intent in sorted(by_intent)]
    if len(picks) > cap:
        picks = rng.sample(picks, cap)
    exemplars = tuple(Exemplar(u, schema.description_of(u.gold_intent)) for u in picks)
    return FewShotSet("IC", exemplars, seed, k_per_label, cap)


def sample_sf_fewshot(
    train: Dataset, schema: SchemaIndex, seed: int, cap: int = 10, k_per_label: int = 10
) -> FewShotSet:
    """Seeded draws without replacement until every slot type in the pool is
    covered by some exemplar's gold slots, then capped to `cap`."""
    from .prompting import serialize_slots  # circular at module level

    if not train.examples:
        raise EmptyCorpus(f"no examples in {train.name}/{train.split}")
    rng = random.Random(seed)
    pool_types = {s.slot_type for ex in train.examples for s in ex.gold_slots}
    order = list(train.examples)
    rng.shuffle(order)
    picks: list[Utterance] = []
    uncovered = set(pool_types)
    for u in order:
        if not uncovered:
            break
        picks.append(u)
        uncovered -= {s.slot_type for s in u.gold_slots}
    if len(picks) > cap:
        picks = rng.sample(picks, cap)
    exemplars = []
    for u in picks:
        candidates = candidate_slots(schema, u.gold_intent)
        exemplars.append(Exemplar(u, serialize_slots(fill_nulls(u, candidates))))
    return FewShotSet("SF", tuple(exemplars), seed, k_per_label, cap)


def fill_nulls(utterance: Utterance, candidates) -> list[tuple[str, str | None]]:
    """One (slot_type, value-or-None) entry per candidate, in candidate order.

    `candidates` may be SlotDescriptors or bare slot type strings.
    """
    out = []
    for cand in candidates:
        slot_type = cand if isinstance(cand, str) else cand.slot_type
        out.append((slot_type, utterance.slot_value(slot_type)))
    return out
