from __future__ import annotations

import hashlib
import json

import pytest

from peft_trainer import ModelConfig, PeftConfig, train_adapter
from peft_trainer.errors import ConfigError, DataError, ResourceError
from peft_trainer.train import read_instruction_dataset, select_hyperparameters


def test_config_defaults_follow_recipe():
    assert PeftConfig(technique="lora").learning_rate == 5e-3
    assert PeftConfig(technique="ia3").learning_rate == 5e-3
    assert PeftConfig(technique="prefix").learning_rate == 1e-2
    assert PeftConfig(technique="prompt").learning_rate == 1e-2
    assert PeftConfig().lora_r == 16
    assert PeftConfig().lora_alpha == 32
    assert PeftConfig().lora_dropout == 0.1
    assert PeftConfig().virtual_tokens == 20


def test_config_rejects_off_recipe_values():
    with pytest.raises(ConfigError):
        PeftConfig(technique="lora", learning_rate=2e-5)
    with pytest.raises(ConfigError):
        PeftConfig(technique="prompt", learning_rate=5e-3)
    with pytest.raises(ConfigError):
        PeftConfig(epochs=7)
    with pytest.raises(ConfigError):
        PeftConfig(technique="adapters")


def test_read_dataset_errors(tmp_path):
    with pytest.raises(DataError):
        read_instruction_dataset(tmp_path / "missing.jsonl")
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"prompt": "x"}\n', encoding="utf-8")  # no target
    with pytest.raises(DataError):
        read_instruction_dataset(bad)
    empty = tmp_path / "empty.jsonl"
    empty.write_text("\n", encoding="utf-8")
    with pytest.raises(DataError):
        read_instruction_dataset(empty)


def test_loss_decreases_over_five_epochs(lora_artifact, export40):
    manifest = lora_artifact.manifest
    assert manifest["dataset_records"] == 40
    losses = manifest["losses_per_epoch"]
    assert len(losses) == 5
    assert losses[-1] < losses[0]


def test_manifest_dataset_hash_matches_export(lora_artifact, export40):
    assert lora_artifact.manifest["dataset_sha256"] == hashlib.sha256(export40.read_bytes()).hexdigest()


def test_manifest_is_persisted(lora_artifact):
    on_disk = json.loads((lora_artifact.path / "manifest.json").read_text(encoding="utf-8"))
    assert on_disk == lora_artifact.manifest
    assert (lora_artifact.path / "adapter.pt").exists()
    assert (lora_artifact.path / "vocab.json").exists()


def test_same_seed_reproduces_final_loss(tmp_path, export10):
    config = PeftConfig(technique="prompt", epochs=5, seed=11)
    a = train_adapter(export10, config, tmp_path / "a")
    b = train_adapter(export10, PeftConfig(technique="prompt", epochs=5, seed=11), tmp_path / "b")
    assert abs(a.manifest["final_loss"] - b.manifest["final_loss"]) < 1e-5


def test_oversized_adapter_rejected(tmp_path, export10):
    # a base this small cannot host r=16 LoRA under the 0.1% budget
    tiny = ModelConfig(vocab_size=2048, d_model=64, n_heads=4, d_ff=128)
    config = PeftConfig(technique="lora", epochs=5, base_model=tiny)
    with pytest.raises(ResourceError):
        train_adapter(export10, config, tmp_path / "too-big")


def test_grid_selection_by_dev_loss(tmp_path, export10, export40):
    config, dev_loss = select_hyperparameters(
        export10, export10, "prompt", tmp_path / "grid", epochs_grid=(5,)
    )
    assert config.technique == "prompt"
    assert config.epochs == 5
    assert dev_loss > 0.0
