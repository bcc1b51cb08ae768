"""Ingestion walkthrough: three native formats converge on one canonical model.

Builds small native-format fixture files, loads each through its loader,
shows the recomputed inferred flags, and round-trips the canonical JSON.
"""

import tempfile
from pathlib import Path

from nluharness import synth
from nluharness.corpus import load_dataset, validate, write_canonical
from nluharness.schema import derive_schema

work = Path(tempfile.mkdtemp(prefix="nlu-demo-"))
print(f"working in {work}\n")

# --- SNIPS-shaped file: chunked span annotations ---------------------------
snips = synth.snips_world()
snips_path = synth.write_snips_native(snips.dataset(seed=5, split="train"), work / "snips.json")
snips_ds = load_dataset(snips_path, "snips-native", split="train", name="snips")
print(f"snips-native: {len(snips_ds)} utterances, "
      f"{len(snips_ds.intents())} intents, {len(snips_ds.slot_types())} slot types")

# --- MASSIVE-shaped file: bracket-annotated JSONL ---------------------------
massive = synth.massive_world()
massive_path = synth.write_massive_native(massive.dataset(seed=6, split="train"), work / "massive.jsonl")
massive_ds = load_dataset(massive_path, "massive-native", split="train", name="massive")
print(f"massive-native: {len(massive_ds)} utterances, "
      f"{len(massive_ds.intents())} intents, {len(massive_ds.slot_types())} slot types")

# --- MultiWOZ-shaped dialogues: only the first user turn is kept ------------
multiwoz = synth.multiwoz_world()
mw_path = synth.write_multiwoz_native(multiwoz.dataset(seed=7, split="test"), work / "multiwoz.json")
mw_ds = load_dataset(mw_path, "multiwoz-native", split="test", name="multiwoz")
print(f"multiwoz-native: {len(mw_ds)} first turns, "
      f"{len(mw_ds.intents())} intents, {len(mw_ds.slot_types())} slot types")

# Closed-valued slots (parking / internet) yield inferred gold pairs: the
# value is an annotation, not a span of the utterance.
inferred = [(ex.id, s.slot_type, s.value) for ex in mw_ds.examples for s in ex.gold_slots if s.inferred]
print(f"\ninferred pairs in the multiwoz fixture: {len(inferred)}; first few: {inferred[:3]}")

# --- canonical round trip ----------------------------------------------------
write_canonical(mw_ds, work / "canonical.json")
again = load_dataset(work / "canonical.json", "canonical-json")
print(f"canonical round trip equal: {again == mw_ds}")

# --- coverage validation ------------------------------------------------------
schema = derive_schema(mw_ds, multiwoz.write_descriptions(work / "desc.json"))
report = validate(mw_ds, schema)
print(f"validation violations: {len(report)} (ok={report.ok})")
