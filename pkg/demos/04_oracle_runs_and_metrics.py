"""Evaluation mechanics with deterministic mock backends.

Runs the joint IC->SF pipeline against the gold-scripted oracle, sweeps the
corruption rate to show accuracy and hallucination tracking it, compares
single-prompt vs multi-prompt request ledgers, and demonstrates the recall
ceiling a span-restricted extractor cannot exceed.
"""

import tempfile
from pathlib import Path

from nluharness import synth
from nluharness.corpus import write_canonical
from nluharness.metrics import format_report, recall_ceiling
from nluharness.runner import RunConfig, run_ic, run_joint, run_sf

work = Path(tempfile.mkdtemp(prefix="nlu-demo-"))
world = synth.toy_world(n_intents=8, n_slots=16, n_general=2, seed=11)
write_canonical(world.dataset(seed=1, split="train"), work / "train.json")
write_canonical(world.dataset(120, seed=2, split="test"), work / "test.json")
world.write_descriptions(work / "desc.json")


def config(**kw):
    base = dict(
        task="IC",
        eval_path=str(work / "test.json"),
        eval_split="test",
        train_path=str(work / "train.json"),
        descriptions_path=str(work / "desc.json"),
        output_dir=str(work / "out"),
        backend={"kind": "oracle"},
    )
    base.update(kw)
    return RunConfig(**base)


print("== joint run against the clean oracle ==")
ic_report, sf_report = run_joint(config(task="JOINT", templates=["P1"], output_dir=str(work / "joint")))
print(format_report(ic_report))
print(format_report(sf_report))

print("\n== corruption sweep (wrong-label corruption, template P1) ==")
for rate in (0.0, 0.2, 0.5):
    report = run_ic(
        config(
            templates=["P1"],
            output_dir=str(work / f"ic-{rate}"),
            backend={"kind": "oracle", "corruption_rate": rate},
        )
    )
    print(f"corruption {rate:.1f}: accuracy {report.accuracy:.3f}")

print("\n== out-of-inventory corruption counts as hallucination ==")
report = run_ic(
    config(
        templates=["P1"],
        output_dir=str(work / "ic-halluc"),
        backend={"kind": "oracle", "corruption_rate": 0.5, "ic_corruption": "out-of-inventory"},
    )
)
print(f"accuracy {report.accuracy:.3f}, hallucination ratio {report.hallucination_ratio:.3f}")

print("\n== single-prompt vs multi-prompt request counts ==")
import json

run_sf(config(task="SF", output_dir=str(work / "single")))
run_sf(config(task="SF", sf_strategy="multi", output_dir=str(work / "multi")))
single = json.loads((work / "single" / "ledger.json").read_text())
multi = json.loads((work / "multi" / "ledger.json").read_text())
print(f"single-prompt requests: {single['SF/single']['requests']} (= n utterances)")
print(f"multi-prompt requests:  {multi['SF/multi']['requests']} (= sum of candidate set sizes)")

print("\n== recall ceiling for span-restricted extraction ==")
dataset, ceiling_world = synth.dataset_with_inferred_share(n_pairs=1000, n_inferred=138, seed=3)
print(f"13.8% of gold pairs are inferred -> ceiling {recall_ceiling(dataset):.3f}")
write_canonical(dataset, work / "ceiling.json")
ceiling_world.write_descriptions(work / "ceiling-desc.json")
report = run_sf(
    RunConfig(
        task="SF",
        eval_path=str(work / "ceiling.json"),
        eval_split="test",
        descriptions_path=str(work / "ceiling-desc.json"),
        output_dir=str(work / "ceiling-out"),
        backend={"kind": "oracle", "span_restricted": True},
    )
)
print(f"span-restricted oracle: precision {report.precision:.3f}, recall {report.recall:.3f}")
