"""Acceptance suite: every criterion runs against mock backends only and
prints one ACCEPTANCE PASS/FAIL line."""

from __future__ import annotations

import hashlib
import json
import random
import time
from contextlib import contextmanager

import pytest

from nluharness import synth
from nluharness.backend import Generation
from nluharness.corpus import Dataset, GoldSlot, Utterance, load_dataset, write_canonical
from nluharness.decode import parse_ic, parse_sf
from nluharness.errors import TransportError
from nluharness.metrics import eval_ic, eval_sf, recall_ceiling
from nluharness.prompting import render_ic_prompt
from nluharness.runner import Run, RunConfig, run_ic, run_joint, run_sf
from nluharness.schema import candidate_slots, derive_schema

from bruteforce import brute_force_sf_counts
from conftest import make_schema
from test_metrics import _random_sf_instances
from test_runner import DyingBackend


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE FAIL: {name}")
        raise
    print(f"ACCEPTANCE PASS: {name}")


def _write_world(world, tmp_path, n_test, seed=2):
    train = world.dataset(seed=1, split="train")
    test = world.dataset(n_test, seed=seed, split="test")
    write_canonical(train, tmp_path / "train.json")
    write_canonical(test, tmp_path / "test.json")
    world.write_descriptions(tmp_path / "desc.json")
    return train, test


def _config(tmp_path, **kw):
    base = dict(
        task="IC",
        eval_path=str(tmp_path / "test.json"),
        eval_split="test",
        train_path=str(tmp_path / "train.json"),
        descriptions_path=str(tmp_path / "desc.json"),
        output_dir=str(tmp_path / "out"),
        backend={"kind": "oracle"},
        parallelism=4,
    )
    base.update(kw)
    return RunConfig(**base)


def test_oracle_identity_end_to_end(tmp_path):
    with criterion("oracle identity: IC accuracy = 1.0 and SF micro-F1 = 1.0 in < 10 s"):
        world = synth.toy_world(n_intents=8, n_slots=16, n_general=2, seed=11)
        _write_world(world, tmp_path, n_test=200)
        started = time.perf_counter()
        ic_report, sf_report = run_joint(
            _config(tmp_path, task="JOINT", templates=["P1"])
        )
        elapsed = time.perf_counter() - started
        assert ic_report.accuracy == 1.0
        assert sf_report.f1 == 1.0
        assert ic_report.n_examples == 200
        assert elapsed < 10.0, f"took {elapsed:.1f}s"


def test_corruption_calibration_1000_queries(tmp_path):
    with criterion("corruption calibration: accuracy = 1 - corrupted/1000 exactly, in [0.65, 0.75]"):
        seed, rate = 37, 0.3
        world = synth.toy_world(n_intents=10, n_slots=18, n_general=2, seed=5)
        _, test = _write_world(world, tmp_path, n_test=1000, seed=7)
        report = run_ic(
            _config(
                tmp_path,
                templates=["P1"],
                seed=seed,
                backend={"kind": "oracle", "corruption_rate": rate},
            )
        )
        # independent replay of the seeded per-prompt Bernoulli decisions
        schema = make_schema(world, world.dataset(seed=1, split="train"))
        corrupted = 0
        for u in test.examples:
            prompt = render_ic_prompt("P1", schema, None, u)
            digest = hashlib.sha256(prompt.text.encode("utf-8")).hexdigest()
            corrupted += random.Random(f"{seed}:{digest}").random() < rate
        assert report.accuracy == (1000 - corrupted) / 1000
        assert 0.65 <= report.accuracy <= 0.75


def test_metric_oracle_equivalence_200_instances():
    with criterion("metric oracle equivalence: eval_sf counts = brute-force counts on 200 instances"):
        dataset, predictions, candidate_sets = _random_sf_instances(200, seed=99)
        intents = {ex.gold_intent: "do the intent" for ex in dataset.examples}
        slot_types = sorted(
            {s.slot_type for ex in dataset.examples for s in ex.gold_slots}
            | {t for group in candidate_sets for t in group}
        )
        world = synth.ToyWorld(
            name="m",
            intents=intents,
            slots={t: (f"the {t}", ()) for t in slot_types},
            intent_slots={},
        )
        schema = derive_schema(dataset, world.descriptors(), 3)
        report = eval_sf(predictions, dataset, schema, candidate_sets)
        closed = {d.slot_type: d.closed_values for d in schema.slots}
        expected = brute_force_sf_counts(dataset, predictions, candidate_sets, closed)
        got = (
            report.counts.tp,
            report.counts.fp,
            report.counts.fn,
            report.counts.fp_hallucinated,
        )
        assert got == expected


def test_inference_count_claim(tmp_path):
    with criterion("inference count: multi-prompt SF = sum |S_i|, single-prompt = n, exactly"):
        world = synth.snips_world()
        train, test = _write_world(world, tmp_path, n_test=None)
        run_sf(_config(tmp_path, task="SF", output_dir=str(tmp_path / "single")))
        run_sf(
            _config(tmp_path, task="SF", sf_strategy="multi", output_dir=str(tmp_path / "multi"))
        )
        schema = make_schema(world, train)
        expected_multi = sum(len(candidate_slots(schema, ex.gold_intent)) for ex in test.examples)
        single = json.loads((tmp_path / "single" / "ledger.json").read_text(encoding="utf-8"))
        multi = json.loads((tmp_path / "multi" / "ledger.json").read_text(encoding="utf-8"))
        assert single["SF/single"]["requests"] == len(test.examples)
        assert multi["SF/multi"]["requests"] == expected_multi


def test_recall_ceiling_with_span_restricted_oracle(tmp_path):
    with criterion("recall ceiling: span-restricted oracle recall = 0.862 +- 0.001, precision = 1.0"):
        dataset, world = synth.dataset_with_inferred_share(n_pairs=1000, n_inferred=138, seed=3)
        assert recall_ceiling(dataset) == pytest.approx(0.862, abs=1e-9)
        train = dataset
        write_canonical(dataset, tmp_path / "test.json")
        write_canonical(train, tmp_path / "train.json")
        world.write_descriptions(tmp_path / "desc.json")
        report = run_sf(
            _config(
                tmp_path,
                task="SF",
                backend={"kind": "oracle", "span_restricted": True},
            )
        )
        assert report.precision == 1.0
        assert abs(report.recall - 0.862) <= 0.001


def test_table8_fixture_verdicts():
    with criterion("qualitative fixtures: artist pair TP; unseen label and ungrounded value hallucinate"):
        # highly correlated labels: (artist, 'lindsey cardinale') is a TP
        u4 = Utterance(
            id="ex4",
            text="put lindsey cardinale into my hillary clinton s women s history month playlist",
            gold_intent="playlist_add",
            gold_slots=(GoldSlot("artist", "lindsey cardinale", False),),
        )
        ds4 = Dataset(name="t", split="test", examples=(u4,))
        world4 = synth.ToyWorld(
            name="t",
            intents={"playlist_add": "add to playlist"},
            slots={"artist": ("the artist", ()), "entity-name": ("the entity name", ())},
            intent_slots={},
        )
        schema4 = derive_schema(ds4, world4.descriptors(), 3)
        pred4 = parse_sf(
            Generation("artist: lindsey cardinale", 0.0, "m"), ("artist", "entity-name")
        )
        report4 = eval_sf([pred4], ds4, schema4, [("artist", "entity-name")])
        assert (report4.counts.tp, report4.counts.fp, report4.counts.fn) == (1, 0, 0)

        # generated label absent from the inventory: IC hallucination
        u5 = Utterance(id="ex5", text="turn my morning alarm on", gold_intent="alarm_set")
        ds5 = Dataset(name="t", split="test", examples=(u5,))
        schema5 = derive_schema(
            ds5,
            ({"alarm_set": "set an alarm", "play_music": "play music"}, {}),
            3,
        )
        pred5 = parse_ic(Generation("turn an alarm on", 0.0, "m"), schema5)
        assert pred5.matched_via == "none"
        report5 = eval_ic([pred5], ds5, schema5)
        assert report5.accuracy == 0.0
        assert report5.hallucination_ratio == 1.0

        # value never mentioned in the utterance: SF hallucination
        u6 = Utterance(id="ex6", text="play it again please", gold_intent="play_music")
        ds6 = Dataset(name="t", split="test", examples=(u6,))
        world6 = synth.ToyWorld(
            name="t",
            intents={"play_music": "play music"},
            slots={"player-setting": ("the player setting", ())},
            intent_slots={},
        )
        schema6 = derive_schema(ds6, world6.descriptors(), 3)
        pred6 = parse_sf(Generation("player-setting: repeat", 0.0, "m"), ("player-setting",))
        report6 = eval_sf([pred6], ds6, schema6, [("player-setting",)])
        assert report6.counts.fp == 1
        assert report6.counts.fp_hallucinated == 1
        assert report6.hallucination_ratio == 1.0


def test_determinism_and_resume_byte_identical(tmp_path):
    with criterion("determinism and resume: interrupted run resumes to byte-identical report.json"):
        world = synth.toy_world(n_intents=6, n_slots=12, n_general=2, seed=13)
        _write_world(world, tmp_path, n_test=80)
        full_dir = tmp_path / "full"
        run_ic(_config(tmp_path, templates=["P1", "P3"], output_dir=str(full_dir), seed=4))

        resumed_dir = tmp_path / "resumed"
        config = _config(
            tmp_path,
            templates=["P1", "P3"],
            output_dir=str(resumed_dir),
            seed=4,
            retry_limit=0,
            parallelism=1,
        )
        helper = Run(config)
        dying = DyingBackend(helper._build_backend(), die_after=47)
        with pytest.raises(TransportError):
            run_ic(config, backend=dying)
        assert not (resumed_dir / "report.json").exists()
        resumed = run_ic(
            _config(tmp_path, templates=["P1", "P3"], output_dir=str(resumed_dir), seed=4)
        )
        assert resumed.accuracy == 1.0
        assert (resumed_dir / "report.json").read_bytes() == (full_dir / "report.json").read_bytes()


def test_schema_inventory_counts(tmp_path):
    with criterion("schema counts: fixtures load with 7/45, 60/55 and 11/24 inventories exactly"):
        expected = {"snips": (7, 45), "massive": (60, 55), "multiwoz": (11, 24)}

        snips = synth.snips_world()
        ds = snips.dataset(seed=5, split="train")
        path = synth.write_snips_native(ds, tmp_path / "snips.json")
        loaded = load_dataset(path, "snips-native", split="train", name="snips")
        desc = snips.write_descriptions(tmp_path / "snips-desc.json")
        schema = derive_schema(loaded, desc, 3)
        assert (len(schema.intents), len(schema.slots)) == expected["snips"]
        assert len(loaded.intents()) == 7
        assert len(loaded.slot_types()) == 45

        massive = synth.massive_world()
        ds = massive.dataset(seed=6, split="train")
        path = synth.write_massive_native(ds, tmp_path / "massive.jsonl")
        loaded = load_dataset(path, "massive-native", split="train", name="massive")
        desc = massive.write_descriptions(tmp_path / "massive-desc.json")
        schema = derive_schema(loaded, desc, 3)
        assert (len(schema.intents), len(schema.slots)) == expected["massive"]
        assert len(loaded.intents()) == 60
        assert len(loaded.slot_types()) == 55

        multiwoz = synth.multiwoz_world()
        ds = multiwoz.dataset(seed=7, split="test")
        path = synth.write_multiwoz_native(ds, tmp_path / "multiwoz.json")
        loaded = load_dataset(path, "multiwoz-native", split="test", name="multiwoz")
        desc = multiwoz.write_descriptions(tmp_path / "multiwoz-desc.json")
        schema = derive_schema(loaded, desc, 3)
        assert (len(schema.intents), len(schema.slots)) == expected["multiwoz"]
        assert len(loaded.intents()) == 11
        assert len(loaded.slot_types()) == 24
