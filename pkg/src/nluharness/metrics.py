"""Intent accuracy, slot micro-F1, hallucination ratios, cross-template aggregation.

A false positive counts as hallucinated when it could not have come from the
prompt or the utterance: for IC, the generation matches no inventory
description; for SF, the slot type is outside the candidate set or the value
is neither a substring of the utterance nor one of the slot's closed values.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Dataset
from .decode import IcPrediction, SfPrediction, normalize
from .errors import AlignmentError
from .schema import SchemaIndex


@dataclass
class SfCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    fp_hallucinated: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def add(self, other: "SfCounts") -> None:
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        self.fp_hallucinated += other.fp_hallucinated


@dataclass
class EvalReport:
    task: str  # "IC" | "SF"
    n_examples: int
    accuracy: float | None = None
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None
    hallucination_ratio: float = 0.0
    per_template: dict[str, float] = field(default_factory=dict)
    mean: float = 0.0
    stddev: float = 0.0
    counts: SfCounts | None = None
    # "fp" divides hallucinated FPs by all FPs (paper reading);
    # "all" divides by all predictions.
    hallucination_denominator: str = "fp"

    @property
    def headline(self) -> float:
        return self.accuracy if self.task == "IC" else (self.f1 or 0.0)

    def to_dict(self) -> dict:
        doc = {
            "task": self.task,
            "n_examples": self.n_examples,
            "hallucination_ratio": self.hallucination_ratio,
            "hallucination_denominator": self.hallucination_denominator,
            "per_template": dict(sorted(self.per_template.items())),
            "mean": self.mean,
            "stddev": self.stddev,
        }
        if self.task == "IC":
            doc["accuracy"] = self.accuracy
        else:
            doc["precision"] = self.precision
            doc["recall"] = self.recall
            doc["f1"] = self.f1
            if self.counts is not None:
                doc["counts"] = {
                    "tp": self.counts.tp,
                    "fp": self.counts.fp,
                    "fn": self.counts.fn,
                    "fp_hallucinated": self.counts.fp_hallucinated,
                }
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")


def _check_aligned(n_predictions: int, gold: Dataset) -> None:
    if n_predictions != len(gold.examples):
        raise AlignmentError(f"{n_predictions} predictions for {len(gold.examples)} examples")


def eval_ic(
    predictions: list[IcPrediction],
    gold: Dataset,
    schema: SchemaIndex,
    template_id: str | None = None,
    hallucination_denominator: str = "fp",
) -> EvalReport:
    """Exact-match accuracy; hallucination ratio over false positives."""
    _check_aligned(len(predictions), gold)
    n = len(gold.examples)
    correct = 0
    false_positives = 0
    hallucinated = 0
    for pred, ex in zip(predictions, gold.examples):
        if pred.matched_label == ex.gold_intent:
            correct += 1
        else:
            false_positives += 1
            if pred.matched_via == "none":
                hallucinated += 1
    accuracy = correct / n if n else 0.0
    denominator = false_positives if hallucination_denominator == "fp" else n
    ratio = hallucinated / denominator if denominator else 0.0
    per_template = {template_id: accuracy} if template_id else {}
    return EvalReport(
        task="IC",
        n_examples=n,
        accuracy=accuracy,
        hallucination_ratio=ratio,
        per_template=per_template,
        mean=accuracy,
        stddev=0.0,
        hallucination_denominator=hallucination_denominator,
    )


def _utterance_haystack(text: str) -> str:
    return " ".join(text.lower().split())


def score_sf_example(
    prediction: SfPrediction,
    gold_pairs: list[tuple[str, str]],
    utterance_text: str,
    candidates: tuple[str, ...],
    closed_values: dict[str, tuple[str, ...]],
) -> SfCounts:
    """Counts for one example: TP on (type, normalized value) equality."""
    gold = {t: normalize(v) for t, v in gold_pairs}
    counts = SfCounts()
    matched_types = set()
    hay = _utterance_haystack(utterance_text)
    candidate_set = set(candidates)
    for pair in prediction.pairs:
        if pair.slot_type in gold and gold[pair.slot_type] == pair.value:
            counts.tp += 1
            matched_types.add(pair.slot_type)
        else:
            counts.fp += 1
            closed = {normalize(v) for v in closed_values.get(pair.slot_type, ())}
            grounded = pair.value in hay or pair.value in closed
            if pair.slot_type not in candidate_set or not grounded:
                counts.fp_hallucinated += 1
    counts.fn = len([t for t in gold if t not in matched_types])
    return counts


def eval_sf(
    predictions: list[SfPrediction],
    gold: Dataset,
    schema: SchemaIndex,
    candidates_per_example: list[tuple[str, ...]],
    template_id: str | None = None,
    hallucination_denominator: str = "fp",
) -> EvalReport:
    """Micro-averaged P/R/F1 over (slot type, value) pairs across the split."""
    _check_aligned(len(predictions), gold)
    if len(candidates_per_example) != len(gold.examples):
        raise AlignmentError(
            f"{len(candidates_per_example)} candidate sets for {len(gold.examples)} examples"
        )
    closed = {d.slot_type: d.closed_values for d in schema.slots}
    total = SfCounts()
    n_predicted_pairs = 0
    for pred, ex, candidates in zip(predictions, gold.examples, candidates_per_example):
        pairs = [(s.slot_type, s.value) for s in ex.gold_slots]
        total.add(score_sf_example(pred, pairs, ex.text, candidates, closed))
        n_predicted_pairs += len(pred.pairs)
    denominator = total.fp if hallucination_denominator == "fp" else n_predicted_pairs
    ratio = total.fp_hallucinated / denominator if denominator else 0.0
    per_template = {template_id: total.f1} if template_id else {}
    return EvalReport(
        task="SF",
        n_examples=len(gold.examples),
        precision=total.precision,
        recall=total.recall,
        f1=total.f1,
        hallucination_ratio=ratio,
        per_template=per_template,
        mean=total.f1,
        stddev=0.0,
        counts=total,
        hallucination_denominator=hallucination_denominator,
    )


def aggregate_templates(reports: dict[str, EvalReport]) -> EvalReport:
    """Mean and population stddev of the headline score across templates."""
    if not reports:
        raise ValueError("no reports to aggregate")
    items = sorted(reports.items())
    tasks = {r.task for _, r in items}
    sizes = {r.n_examples for _, r in items}
    if len(tasks) != 1 or len(sizes) != 1:
        raise ValueError("reports must share task and example count")
    task = tasks.pop()
    scores = [r.headline for _, r in items]
    mean = statistics.fmean(scores)
    stddev = statistics.pstdev(scores)
    ratio = statistics.fmean(r.hallucination_ratio for _, r in items)
    combined = EvalReport(
        task=task,
        n_examples=sizes.pop(),
        hallucination_ratio=ratio,
        per_template={tid: r.headline for tid, r in items},
        mean=mean,
        stddev=stddev,
        hallucination_denominator=items[0][1].hallucination_denominator,
    )
    if task == "IC":
        combined.accuracy = mean
    else:
        combined.f1 = mean
        combined.precision = statistics.fmean(r.precision or 0.0 for _, r in items)
        combined.recall = statistics.fmean(r.recall or 0.0 for _, r in items)
    return combined


def recall_ceiling(gold: Dataset) -> float:
    """Best recall any span-restricted extractor can reach: 1 - inferred/total gold pairs."""
    pairs = [s for ex in gold.examples for s in ex.gold_slots]
    if not pairs:
        return 1.0
    inferred = sum(1 for s in pairs if s.inferred)
    return 1.0 - inferred / len(pairs)


def format_report(report: EvalReport) -> str:
    """One-line table row: score +-stddev with hallucination ratio in parentheses."""
    name = "accuracy" if report.task == "IC" else "micro-F1"
    lines = [
        f"{report.task} {name}: {report.mean:.3f} +-{report.stddev:.2f} "
        f"({report.hallucination_ratio:.2f})"
    ]
    for tid, score in sorted(report.per_template.items()):
        lines.append(f"  {tid}: {score:.3f}")
    return "\n".join(lines)
