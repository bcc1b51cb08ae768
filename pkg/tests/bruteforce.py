"""Independent reference implementations used to check the metrics module.

Kept separate from the code under test: plain nested loops, no shared logic.
"""

from __future__ import annotations

from nluharness.decode import normalize


def brute_force_sf_counts(dataset, predictions, candidate_sets, closed_values):
    """Nested-loop (tp, fp, fn, hallucinated) counter over a whole split."""
    tp = fp = fn = halluc = 0
    for ex, pred, candidates in zip(dataset.examples, predictions, candidate_sets):
        gold_pairs = [(s.slot_type, normalize(s.value)) for s in ex.gold_slots]
        for p in pred.pairs:
            hit = False
            for gt, gv in gold_pairs:
                if p.slot_type == gt and p.value == gv:
                    hit = True
            if hit:
                tp += 1
            else:
                fp += 1
                text = " ".join(ex.text.lower().split())
                in_text = p.value in text
                in_closed = p.value in {normalize(v) for v in closed_values.get(p.slot_type, ())}
                if p.slot_type not in candidates or not (in_text or in_closed):
                    halluc += 1
        for gt, gv in gold_pairs:
            found = False
            for p in pred.pairs:
                if p.slot_type == gt and p.value == gv:
                    found = True
            if not found:
                fn += 1
    return tp, fp, fn, halluc
