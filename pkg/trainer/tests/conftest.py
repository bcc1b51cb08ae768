from __future__ import annotations

import json
import subprocess

import pytest

from peft_trainer import PeftConfig, train_adapter

INTENT_WORDS = ["alpha", "beta", "gamma", "delta", "epsilon"]


def _write_corpus(work):
    """Interface-level fixtures: the harness's canonical dataset and
    description file formats, consumed through its CLI."""
    intents = {f"intent_{i}": f"do action {w}" for i, w in enumerate(INTENT_WORDS)}
    examples = []
    for i in range(10):
        word = INTENT_WORDS[i % 5]
        examples.append(
            {
                "id": f"u{i}",
                "text": f"please do action {word} variant {i}",
                "intent": f"intent_{i % 5}",
                "slots": [],
            }
        )
    (work / "train.json").write_text(
        json.dumps({"name": "toy", "split": "train", "examples": examples}), encoding="utf-8"
    )
    (work / "test.json").write_text(
        json.dumps({"name": "toy", "split": "test", "examples": examples[:5]}), encoding="utf-8"
    )
    (work / "desc.json").write_text(json.dumps({"intents": intents, "slots": {}}), encoding="utf-8")


def _export(work, templates, out_name):
    out = work / out_name
    subprocess.run(
        [
            "nlu", "export-ft",
            "--train", str(work / "train.json"),
            "--descriptions", str(work / "desc.json"),
            "--templates", templates,
            "--out", str(out),
        ],
        check=True,
        capture_output=True,
    )
    return out


@pytest.fixture(scope="session")
def workspace(tmp_path_factory):
    work = tmp_path_factory.mktemp("trainer")
    _write_corpus(work)
    return work


@pytest.fixture(scope="session")
def export40(workspace):
    """10 examples x 4 IC templates = the 40-record export."""
    return _export(workspace, "P1,P2,P3,P4", "ft40.jsonl")


@pytest.fixture(scope="session")
def export10(workspace):
    return _export(workspace, "P1", "ft10.jsonl")


@pytest.fixture(scope="session")
def lora_artifact(workspace, export40):
    config = PeftConfig(technique="lora", epochs=5, seed=0)
    return train_adapter(export40, config, workspace / "adapters" / "lora")


@pytest.fixture(scope="session")
def all_artifacts(workspace, export10, lora_artifact):
    artifacts = {"lora": lora_artifact}
    for technique in ("ia3", "prefix", "prompt"):
        config = PeftConfig(technique=technique, epochs=5, seed=0)
        artifacts[technique] = train_adapter(
            export10, config, workspace / "adapters" / technique
        )
    return artifacts
