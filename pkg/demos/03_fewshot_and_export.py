"""Few-shot sampling and the instruction-pair export.

IC draws one exemplar per intent then caps at ten; SF draws until every slot
type is covered. Exemplar targets for SF are null-filled so the model learns
when *not* to fill a slot. The same rendering feeds the JSONL export consumed
by the adapter trainer.
"""

import tempfile
from pathlib import Path

from nluharness import synth
from nluharness.fewshot import fill_nulls, sample_ic_fewshot, sample_sf_fewshot, subsample_per_label
from nluharness.prompting import export_instruction_dataset, render_ic_prompt, serialize_slots
from nluharness.schema import candidate_slots, derive_schema

world = synth.toy_world(n_intents=12, n_slots=20, n_general=2, seed=21)
train = world.dataset(seed=21, split="train")
schema = derive_schema(train, world.descriptors())

# The small training pool: at most k examples per intent label (k=10).
pool = subsample_per_label(train, k=10, seed=0)
print(f"train: {len(train)} examples -> pool: {len(pool)} examples\n")

ic = sample_ic_fewshot(pool, schema, seed=0, cap=10)
print(f"IC few-shot: {len(ic.exemplars)} exemplars over "
      f"{len({e.utterance.gold_intent for e in ic.exemplars})} intents (cap 10)")
for exemplar in ic.exemplars[:3]:
    print(f"  {exemplar.utterance.text!r} -> {exemplar.target_text!r}")

sf = sample_sf_fewshot(pool, schema, seed=0, cap=10)
covered = set()
for exemplar in sf.exemplars:
    covered |= {s.slot_type for s in exemplar.utterance.gold_slots}
print(f"\nSF few-shot: {len(sf.exemplars)} exemplars covering {len(covered)} slot types")
print("null insertion for absent candidate slots:")
example = sf.exemplars[0].utterance
candidates = candidate_slots(schema, example.gold_intent)
print(f"  {example.text!r}")
print(f"  -> {serialize_slots(fill_nulls(example, candidates))!r}")

# Few-shot IC prompt with the exemplar block between instruction and input.
query = train.examples[-1]
prompt = render_ic_prompt("P1", schema, ic, query)
print(f"\nfew-shot P1 prompt has {len(prompt.text.split(chr(10)+chr(10)))} segments "
      f"(instruction + {len(ic.exemplars)} exemplars + input)")

out = Path(tempfile.mkdtemp(prefix="nlu-demo-")) / "instructions.jsonl"
count = export_instruction_dataset(pool, schema, ["P1", "P2", "P3", "P4", "SF1"], out)
print(f"\nexported {count} instruction-output pairs to {out}")
print("first line:")
print(out.read_text(encoding="utf-8").splitlines()[0][:160] + " ...")
