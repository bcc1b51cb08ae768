from __future__ import annotations

import json

from hypothesis import given, settings
from hypothesis import strategies as st

from nluharness import synth
from nluharness.backend import Generation
from nluharness.decode import parse_sf
from nluharness.fewshot import sample_ic_fewshot, sample_sf_fewshot
from nluharness.prompting import (
    IC_TEMPLATES,
    SF_NO_SLOTS_LINE,
    export_instruction_dataset,
    render_ic_prompt,
    render_sf_multiprompts,
    render_sf_prompt,
    serialize_slots,
)
from nluharness.schema import candidate_slots

from conftest import make_schema


def test_templates_reproduce_published_wording():
    assert IC_TEMPLATES["P1"].instruction_pattern == "Given the possible intents: {L}"
    assert IC_TEMPLATES["P1"].input_pattern == "What is the user's intent in '{x}'? Intent:"
    assert IC_TEMPLATES["P2"].instruction_pattern == "Given the following options: {L}"
    assert (
        IC_TEMPLATES["P2"].input_pattern
        == "What did the user want when the user said, '{x}'? Answer:"
    )
    assert (
        IC_TEMPLATES["P3"].instruction_pattern
        == "Classify the USER's utterances into one of the following intent options: {L}"
    )
    assert IC_TEMPLATES["P3"].input_pattern == "USER: '{x}' Intent:"
    assert (
        IC_TEMPLATES["P4"].instruction_pattern
        == "Given a USER's utterance, choose one of the following intents: {L}"
    )
    assert IC_TEMPLATES["P4"].input_pattern == "USER: '{x}' Intent:"


def test_p1_zero_shot_structure(restaurant_world, restaurant_schema):
    prompt = render_ic_prompt("P1", restaurant_schema, None, synth.restaurant_utterance())
    lines = prompt.text.split("\n")
    assert lines[0] == "Given the possible intents:"
    assert lines[1:4] == ["find restaurant", "book hotel", "play music"]
    assert prompt.text.endswith("Intent:")
    assert prompt.max_new_tokens == 10


def test_label_block_removed_without_exposure(restaurant_schema):
    exposed = render_ic_prompt("P3", restaurant_schema, None, synth.restaurant_utterance())
    hidden = render_ic_prompt(
        IC_TEMPLATES["P3"].without_labels(), restaurant_schema, None, synth.restaurant_utterance()
    )
    assert "intent options" in exposed.text
    assert "intent options" not in hidden.text
    assert hidden.text == "USER: 'Find me a restaurant serving Italian food in Torino' Intent:"
    assert hidden.candidate_intents == ()


def test_rendering_is_byte_stable(restaurant_world, restaurant_schema):
    u = synth.restaurant_utterance()
    train = restaurant_world.dataset(seed=3, split="train")
    fs = sample_ic_fewshot(train, restaurant_schema, seed=1, cap=3)
    a = render_ic_prompt("P2", restaurant_schema, fs, u)
    b = render_ic_prompt("P2", restaurant_schema, fs, u)
    assert a.text == b.text
    assert "\r" not in a.text


def test_every_description_exactly_once_in_instruction(toy_world, toy_schema):
    u = toy_world.dataset(5, seed=0, split="test").examples[0]
    for tid in IC_TEMPLATES:
        prompt = render_ic_prompt(tid, toy_schema, None, u)
        instruction = prompt.text.split("\n\n")[0]
        for descriptor in toy_schema.intents:
            assert instruction.count(descriptor.description) == 1


def test_fewshot_block_sits_between_instruction_and_input(restaurant_world, restaurant_schema):
    train = restaurant_world.dataset(seed=3, split="train")
    fs = sample_ic_fewshot(train, restaurant_schema, seed=1, cap=2)
    prompt = render_ic_prompt("P1", restaurant_schema, fs, synth.restaurant_utterance())
    segments = prompt.text.split("\n\n")
    assert len(segments) == 1 + len(fs.exemplars) + 1
    for segment, exemplar in zip(segments[1:-1], fs.exemplars):
        assert segment.endswith(exemplar.target_text)
        assert exemplar.utterance.text in segment
    assert segments[-1].endswith("Intent:")


def test_sf_prompt_lists_both_slots(restaurant_schema):
    prompt = render_sf_prompt(restaurant_schema, "find_restaurant", None, synth.restaurant_utterance())
    assert prompt.text.count("cuisine: type of cuisine") == 1
    assert prompt.text.count("city: name of the city") == 1
    assert prompt.task == "SF"
    assert prompt.max_new_tokens == 100


def test_sf_prompt_empty_candidates(restaurant_schema):
    u = synth.restaurant_utterance()
    prompt = render_sf_prompt(restaurant_schema, "unknown_intent_without_slots", None, u)
    assert SF_NO_SLOTS_LINE in prompt.text
    assert prompt.candidate_slots == ()


def test_sf_fewshot_block(restaurant_world, restaurant_schema):
    train = restaurant_world.dataset(seed=3, split="train")
    fs = sample_sf_fewshot(train, restaurant_schema, seed=2, cap=2)
    prompt = render_sf_prompt(restaurant_schema, "find_restaurant", fs, synth.restaurant_utterance())
    segments = prompt.text.split("\n\n")
    assert len(segments) == 1 + len(fs.exemplars) + 1
    assert segments[-1].endswith("Slots:")


def test_sf_label_block_removed_without_exposure(restaurant_schema):
    prompt = render_sf_prompt(
        restaurant_schema, "find_restaurant", None, synth.restaurant_utterance(), expose_labels=False
    )
    assert "Slots:\n" not in prompt.text
    assert "type of cuisine" not in prompt.text
    assert prompt.text.split("\n\n")[0].startswith("Extract values")


def test_multiprompt_counts(restaurant_schema):
    u = synth.restaurant_utterance()
    prompts = render_sf_multiprompts(restaurant_schema, "find_restaurant", u)
    assert len(prompts) == len(candidate_slots(restaurant_schema, "find_restaurant"))
    prompts = render_sf_multiprompts(restaurant_schema, "unknown_intent", u)
    assert prompts == []


def test_multiprompt_snips_shape_counts():
    world = synth.snips_world()
    train = world.dataset(seed=5, split="train")
    schema = make_schema(world, train)
    assert len(schema.slots) == 45
    u = train.examples[0]
    total = 0
    for descriptor in schema.intents:
        prompts = render_sf_multiprompts(schema, descriptor.raw_label, u)
        expected = candidate_slots(schema, descriptor.raw_label)
        assert len(prompts) == len(expected)
        for prompt, cand in zip(prompts, expected):
            # each prompt carries exactly its one slot description
            assert prompt.text.count(f"{cand.slot_type}: {cand.description}") == 1
            other = [c for c in expected if c.slot_type != cand.slot_type]
            assert all(f"'{o.slot_type}: {o.description}'" not in prompt.text for o in other)
        total += len(prompts)
    assert total == sum(len(candidate_slots(schema, d.raw_label)) for d in schema.intents)


def test_serialize_slots_examples():
    assert (
        serialize_slots([("cuisine", "Chinese"), ("price-range", None)])
        == "cuisine: Chinese; price-range: null"
    )
    assert serialize_slots([]) == ""


_slot_names = st.sampled_from(["cuisine", "city", "price-range", "artist", "venue"])
_values = st.text(
    alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=8
).filter(lambda s: s not in ("null", "none"))


@given(
    pairs=st.dictionaries(_slot_names, st.one_of(st.none(), _values), min_size=0, max_size=5)
)
@settings(max_examples=200, deadline=None)
def test_serialize_parse_round_trip(pairs):
    ordered = sorted(pairs.items())
    candidates = [t for t, _ in ordered]
    text = serialize_slots(ordered)
    parsed = parse_sf(Generation(text, 0.0, "t"), candidates)
    assert parsed.as_tuples() == [(t, v) for t, v in ordered if v is not None]
    assert all(p.in_candidates for p in parsed.pairs)


# -- export ---------------------------------------------------------------------


def test_export_cartesian_count(tmp_path, toy_world, toy_schema):
    train = toy_world.dataset(10, seed=1, split="train")
    out = tmp_path / "ft.jsonl"
    count = export_instruction_dataset(train, toy_schema, ["P1", "P2", "P3", "P4"], out)
    assert count == 40
    assert len(out.read_text(encoding="utf-8").splitlines()) == 40


def test_export_restaurant_sf_target(tmp_path):
    # city co-occurs with >3 intents, so it lands in the general block after
    # the relevant cuisine slot.
    intents = {
        "find_restaurant": "find restaurant",
        "book_hotel": "book hotel",
        "find_attraction": "find attraction",
        "book_taxi": "book taxi",
        "find_train": "find train",
    }
    world = synth.ToyWorld(
        name="restaurant-demo",
        intents=intents,
        slots={"cuisine": ("type of cuisine", ()), "city": ("name of the city", ())},
        intent_slots={label: ["city"] for label in intents} | {"find_restaurant": ["cuisine", "city"]},
    )
    from nluharness.corpus import Dataset, GoldSlot, Utterance

    fillers = tuple(
        Utterance(
            id=f"f{i}",
            text=f"please {desc} in lisbon now",
            gold_intent=label,
            gold_slots=(GoldSlot("city", "lisbon", False),),
        )
        for i, (label, desc) in enumerate(intents.items())
        if label != "find_restaurant"
    )
    train = Dataset(name="restaurant-demo", split="train", examples=(synth.restaurant_utterance(),) + fillers)
    schema = make_schema(world, train)
    assert schema.general == ("city",)
    out = tmp_path / "ft.jsonl"
    count = export_instruction_dataset(train, schema, ["SF1"], out)
    assert count == len(train.examples)
    record = json.loads(out.read_text(encoding="utf-8").splitlines()[0])
    assert record["target"] == "cuisine: Italian; city: Torino"


def test_export_prompts_byte_equal_fresh_render(tmp_path, toy_world, toy_schema):
    train = toy_world.dataset(8, seed=2, split="train")
    out = tmp_path / "ft.jsonl"
    export_instruction_dataset(train, toy_schema, ["P1", "SF1"], out)
    records = [json.loads(line) for line in out.read_text(encoding="utf-8").splitlines()]
    fresh = []
    for ex in train.examples:
        fresh.append(render_ic_prompt("P1", toy_schema, None, ex).text)
    for ex in train.examples:
        fresh.append(render_sf_prompt(toy_schema, ex.gold_intent, None, ex).text)
    assert [r["prompt"] for r in records] == fresh
