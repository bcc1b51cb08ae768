"""Prompt construction walkthrough.

Derives the intent/slot schema from co-occurrence counts, then renders the
four IC templates, the single SF prompt, and the per-slot multi-prompt
baseline for the running restaurant example.
"""

from nluharness import synth
from nluharness.prompting import render_ic_prompt, render_sf_multiprompts, render_sf_prompt
from nluharness.schema import UNMATCHED, candidate_slots, derive_schema, map_description_to_label

world = synth.restaurant_world()
train = world.dataset(seed=3, split="train")
schema = derive_schema(train, world.descriptors())

print("relevant slots per intent:")
for intent, slots in sorted(schema.relevant.items()):
    print(f"  {intent}: {', '.join(slots)}")
print(f"general slots (co-occur with more than {schema.general_threshold} intents): "
      f"{list(schema.general) or 'none'}\n")

utterance = synth.restaurant_utterance()
print(f"utterance: {utterance.text!r}")
print(f"gold intent: {utterance.gold_intent}; gold slots: "
      f"{[(s.slot_type, s.value) for s in utterance.gold_slots]}\n")

for tid in ("P1", "P2", "P3", "P4"):
    prompt = render_ic_prompt(tid, schema, None, utterance)
    print(f"--- IC template {tid} (max_new_tokens={prompt.max_new_tokens}) ---")
    print(prompt.text)
    print()

sf = render_sf_prompt(schema, utterance.gold_intent, None, utterance)
print(f"--- single SF prompt: one request covers {len(sf.candidate_slots)} candidate slots ---")
print(sf.text)
print()

multi = render_sf_multiprompts(schema, utterance.gold_intent, utterance)
print(f"--- multi-prompt baseline: {len(multi)} requests for the same utterance ---")
for prompt in multi:
    print(prompt.text)
print()

# Generated text maps back to raw labels through the descriptions.
for answer in ("find restaurant", "Intent: play music", "make me a sandwich"):
    label = map_description_to_label(schema, answer)
    print(f"{answer!r} -> {label}")
print(f"unmatched answers fall back to general slots only: "
      f"{[d.slot_type for d in candidate_slots(schema, UNMATCHED)] or '[]'}")
