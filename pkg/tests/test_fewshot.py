from __future__ import annotations

import pytest

from nluharness import synth
from nluharness.corpus import Dataset, GoldSlot, Utterance
from nluharness.errors import EmptyCorpus
from nluharness.fewshot import (
    fill_nulls,
    sample_ic_fewshot,
    sample_sf_fewshot,
    subsample_per_label,
)
from nluharness.prompting import serialize_slots

from conftest import make_schema


def _world(n_intents, n_slots, seed=0):
    world = synth.toy_world(n_intents=n_intents, n_slots=n_slots, n_general=1, seed=seed)
    train = world.dataset(seed=seed, split="train")
    return world, train, make_schema(world, train)


def test_ic_sixty_intents_capped_to_ten():
    world, train, schema = _world(60, 70)
    fs = sample_ic_fewshot(train, schema, seed=11, cap=10)
    assert len(fs.exemplars) == 10
    assert len({ex.utterance.gold_intent for ex in fs.exemplars}) == 10


def test_ic_seven_intents_below_cap():
    world, train, schema = _world(7, 12)
    fs = sample_ic_fewshot(train, schema, seed=11, cap=10)
    assert len(fs.exemplars) == 7
    assert {ex.utterance.gold_intent for ex in fs.exemplars} == set(world.intents)


def test_ic_targets_are_descriptions():
    world, train, schema = _world(5, 8)
    fs = sample_ic_fewshot(train, schema, seed=2, cap=10)
    for ex in fs.exemplars:
        assert ex.target_text == world.intents[ex.utterance.gold_intent]


def test_ic_same_seed_same_ids():
    world, train, schema = _world(20, 25)
    a = sample_ic_fewshot(train, schema, seed=5, cap=10)
    b = sample_ic_fewshot(train, schema, seed=5, cap=10)
    assert a.ids() == b.ids()
    c = sample_ic_fewshot(train, schema, seed=6, cap=10)
    assert a.ids() != c.ids()  # overwhelmingly likely with 20 intents


def test_ic_empty_corpus():
    world, train, schema = _world(3, 5)
    with pytest.raises(EmptyCorpus):
        sample_ic_fewshot(Dataset(name="t", split="train"), schema, seed=0)


def test_sf_distinct_types_one_per_utterance():
    slots = [f"slot-{i}" for i in range(5)]
    examples = tuple(
        Utterance(
            id=f"u{i}",
            text=f"the word w{i} appears",
            gold_intent="only_intent",
            gold_slots=(GoldSlot(slots[i], f"w{i}", False),),
        )
        for i in range(5)
    )
    train = Dataset(name="t", split="train", examples=examples)
    world = synth.ToyWorld(
        name="w",
        intents={"only_intent": "do the thing"},
        slots={t: (f"the {t}", ()) for t in slots},
        intent_slots={"only_intent": slots},
    )
    schema = make_schema(world, train)
    fs = sample_sf_fewshot(train, schema, seed=0, cap=10)
    assert len(fs.exemplars) == 5


def test_sf_single_covering_utterance_stops_at_one():
    slots = ["a-slot", "b-slot"]
    big = Utterance(
        id="big",
        text="covers w1 and w2 here",
        gold_intent="only_intent",
        gold_slots=(GoldSlot("a-slot", "w1", False), GoldSlot("b-slot", "w2", False)),
    )
    train = Dataset(name="t", split="train", examples=(big,))
    world = synth.ToyWorld(
        name="w",
        intents={"only_intent": "do the thing"},
        slots={t: (f"the {t}", ()) for t in slots},
        intent_slots={"only_intent": slots},
    )
    schema = make_schema(world, train)
    fs = sample_sf_fewshot(train, schema, seed=3, cap=10)
    assert len(fs.exemplars) == 1


def test_sf_precap_covers_pool_types():
    world, train, schema = _world(6, 9, seed=4)
    fs = sample_sf_fewshot(train, schema, seed=4, cap=10_000)  # cap never binds
    pool_types = {s.slot_type for ex in train.examples for s in ex.gold_slots}
    covered = set()
    for ex in fs.exemplars:  # brute-force union of gold types
        covered |= {s.slot_type for s in ex.utterance.gold_slots}
    assert covered == pool_types


def test_sf_cap_binds():
    world, train, schema = _world(12, 30, seed=5)
    fs = sample_sf_fewshot(train, schema, seed=5, cap=10)
    assert len(fs.exemplars) <= 10


def test_sf_targets_null_filled():
    world, train, schema = _world(4, 8, seed=6)
    fs = sample_sf_fewshot(train, schema, seed=6, cap=10)
    for ex in fs.exemplars:
        entries = ex.target_text.split("; ") if ex.target_text else []
        from nluharness.schema import candidate_slots

        candidates = candidate_slots(schema, ex.utterance.gold_intent)
        assert len(entries) == len(candidates)
        gold = {s.slot_type: s.value for s in ex.utterance.gold_slots}
        for entry, cand in zip(entries, candidates):
            slot_type, _, value = entry.partition(": ")
            assert slot_type == cand.slot_type
            assert value == gold.get(cand.slot_type, "null")


def test_sf_determinism():
    world, train, schema = _world(8, 14, seed=7)
    assert (
        sample_sf_fewshot(train, schema, seed=9, cap=10).ids()
        == sample_sf_fewshot(train, schema, seed=9, cap=10).ids()
    )


# -- fill_nulls -----------------------------------------------------------------


def _chinese_example():
    return Utterance(
        id="x",
        text="I'd like to find a restaurant that serves Chinese food!",
        gold_intent="find_restaurant",
        gold_slots=(GoldSlot("cuisine", "Chinese", False),),
    )


def test_fill_nulls_worked_example():
    pairs = fill_nulls(_chinese_example(), ["cuisine", "price-range"])
    assert pairs == [("cuisine", "Chinese"), ("price-range", None)]
    assert serialize_slots(pairs) == "cuisine: Chinese; price-range: null"


def test_fill_nulls_all_absent():
    u = Utterance(id="x", text="nothing here", gold_intent="i")
    assert fill_nulls(u, ["a", "b", "c"]) == [("a", None), ("b", None), ("c", None)]


def test_fill_nulls_follows_candidate_order():
    u = _chinese_example()
    forward = fill_nulls(u, ["cuisine", "price-range"])
    backward = fill_nulls(u, ["price-range", "cuisine"])
    assert backward == list(reversed(forward))


def test_subsample_per_label_counts():
    world, train, schema = _world(4, 8, seed=8)
    # inflate: many examples per intent
    big = world.dataset(200, seed=8, split="train")
    pool = subsample_per_label(big, k=10, seed=1)
    per_label = {}
    for ex in pool.examples:
        per_label[ex.gold_intent] = per_label.get(ex.gold_intent, 0) + 1
    assert all(count <= 10 for count in per_label.values())
    assert subsample_per_label(big, k=10, seed=1) == pool
