"""Adapter training over the instruction-pair JSONL export.

The consumed file is UTF-8 JSON-Lines with one {"prompt", "target"} object
per line, exactly as the harness's exporter writes it. Training uses AdamW
with default hyper-parameters at the recipe learning rates and is
deterministic given the seed.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path

import torch
from torch import nn

from .adapters import LORA_TARGETS, adapter_state_dict, install_adapter, trainable_parameters
from .errors import ConfigError, DataError, ResourceError
from .model import ModelConfig, Seq2SeqModel, build_model, parameter_count
from .vocab import PAD, WordVocab

LORA_IA3_LEARNING_RATES = (5e-4, 1e-3, 5e-3)
PROMPT_LEARNING_RATE = 1e-2
EPOCH_CHOICES = (5, 10, 20)

# Hard budget: every technique must train under 0.1% of the base parameters.
MAX_TRAINABLE_RATIO = 1e-3

MAX_SOURCE_LEN = 192
MAX_TARGET_LEN = 48


@dataclass
class PeftConfig:
    technique: str = "lora"
    lora_r: int = 16
    lora_alpha: int = 32
    lora_dropout: float = 0.1
    virtual_tokens: int = 20
    learning_rate: float | None = None  # default: per-technique recipe value
    epochs: int = 5
    base_model: ModelConfig = field(default_factory=ModelConfig)
    seed: int = 0
    batch_size: int = 8

    def __post_init__(self):
        if self.technique not in ("lora", "ia3", "prefix", "prompt"):
            raise ConfigError(f"unknown technique {self.technique!r}")
        if self.epochs not in EPOCH_CHOICES:
            raise ConfigError(f"epochs must be one of {EPOCH_CHOICES}")
        if self.learning_rate is None:
            self.learning_rate = (
                PROMPT_LEARNING_RATE
                if self.technique in ("prefix", "prompt")
                else LORA_IA3_LEARNING_RATES[-1]
            )
        if self.technique in ("lora", "ia3") and self.learning_rate not in LORA_IA3_LEARNING_RATES:
            raise ConfigError(f"learning rate for {self.technique} must be in {LORA_IA3_LEARNING_RATES}")
        if self.technique in ("prefix", "prompt") and self.learning_rate != PROMPT_LEARNING_RATE:
            raise ConfigError(f"learning rate for {self.technique} is {PROMPT_LEARNING_RATE}")

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["base_model"] = self.base_model.to_dict()
        return doc


@dataclass
class AdapterArtifact:
    path: Path
    manifest: dict

    @property
    def artifact_id(self) -> str:
        return self.manifest["artifact_id"]


def read_instruction_dataset(path: str | Path) -> list[tuple[str, str]]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no dataset at {path}")
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                records.append((doc["prompt"], doc["target"]))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise DataError(f"bad record at {path}:{lineno}: {e}") from e
    if not records:
        raise DataError(f"dataset {path} is empty")
    return records


def _dataset_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _encode_records(records, vocab: WordVocab) -> list[tuple[list[int], list[int]]]:
    encoded = []
    for prompt, target in records:
        src = vocab.encode(prompt, max_len=MAX_SOURCE_LEN)
        tgt = vocab.encode(target, add_eos=True, max_len=MAX_TARGET_LEN)
        encoded.append((src, tgt))
    return encoded


def _pad_batch(rows: list[list[int]]) -> torch.Tensor:
    width = max(len(r) for r in rows)
    out = torch.full((len(rows), width), PAD, dtype=torch.long)
    for i, row in enumerate(rows):
        out[i, : len(row)] = torch.tensor(row, dtype=torch.long)
    return out


def _batches(encoded, batch_size: int, rng: random.Random | None):
    order = list(range(len(encoded)))
    if rng is not None:
        rng.shuffle(order)
    for start in range(0, len(order), batch_size):
        chunk = [encoded[i] for i in order[start : start + batch_size]]
        src = _pad_batch([c[0] for c in chunk])
        tgt = _pad_batch([c[1] for c in chunk])
        tgt_in = torch.cat([torch.full((tgt.shape[0], 1), PAD, dtype=torch.long), tgt[:, :-1]], dim=1)
        yield src, tgt_in, tgt


def _batch_loss(model: Seq2SeqModel, src, tgt_in, tgt) -> torch.Tensor:
    logits = model(src, tgt_in)
    return nn.functional.cross_entropy(
        logits.reshape(-1, logits.shape[-1]), tgt.reshape(-1), ignore_index=PAD
    )


def evaluate_loss(model: Seq2SeqModel, encoded, batch_size: int = 8) -> float:
    model.eval()
    total, denom = 0.0, 0
    with torch.no_grad():
        for src, tgt_in, tgt in _batches(encoded, batch_size, rng=None):
            total += float(_batch_loss(model, src, tgt_in, tgt)) * src.shape[0]
            denom += src.shape[0]
    return total / denom


def train_adapter(dataset: str | Path, config: PeftConfig, out_dir: str | Path) -> AdapterArtifact:
    """Train one adapter over the export and write the artifact directory
    (adapter weights, vocab, manifest)."""
    records = read_instruction_dataset(dataset)
    dataset_hash = _dataset_sha256(dataset)

    vocab = WordVocab.build(
        [text for pair in records for text in pair], config.base_model.vocab_size
    )
    encoded = _encode_records(records, vocab)

    model = build_model(config.base_model)
    base_params = parameter_count(model)

    torch.manual_seed(config.seed)
    trainable_names = install_adapter(
        model,
        config.technique,
        lora_r=config.lora_r,
        lora_alpha=config.lora_alpha,
        lora_dropout=config.lora_dropout,
        virtual_tokens=config.virtual_tokens,
    )
    trainable = parameter_count(model, trainable_only=True)
    ratio = trainable / base_params
    if ratio >= MAX_TRAINABLE_RATIO:
        raise ResourceError(
            f"{config.technique} trains {trainable} of {base_params} base parameters "
            f"({ratio:.4%}); budget is {MAX_TRAINABLE_RATIO:.1%}"
        )

    optimizer = torch.optim.AdamW(trainable_parameters(model), lr=config.learning_rate)
    losses = []
    for epoch in range(config.epochs):
        model.train()
        epoch_rng = random.Random(config.seed * 10_000 + epoch)
        total, denom = 0.0, 0
        for src, tgt_in, tgt in _batches(encoded, config.batch_size, epoch_rng):
            optimizer.zero_grad()
            loss = _batch_loss(model, src, tgt_in, tgt)
            loss.backward()
            optimizer.step()
            total += float(loss.detach()) * src.shape[0]
            denom += src.shape[0]
        losses.append(total / denom)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.save(adapter_state_dict(model), out_dir / "adapter.pt")
    vocab.save(out_dir / "vocab.json")
    manifest = {
        "artifact_id": f"{config.technique}-{dataset_hash[:8]}-seed{config.seed}",
        "technique": config.technique,
        "base_model": config.base_model.to_dict(),
        "base_parameters": base_params,
        "trainable_parameters": trainable,
        "trainable_ratio": ratio,
        "trainable_names": trainable_names,
        "lora_target_modules": list(LORA_TARGETS) if config.technique == "lora" else None,
        "config": config.to_dict(),
        "seed": config.seed,
        "dataset_sha256": dataset_hash,
        "dataset_records": len(records),
        "losses_per_epoch": losses,
        "final_loss": losses[-1],
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return AdapterArtifact(path=out_dir, manifest=manifest)


def select_hyperparameters(
    train_path: str | Path,
    dev_path: str | Path,
    technique: str,
    out_dir: str | Path,
    epochs_grid=EPOCH_CHOICES,
    seed: int = 0,
) -> tuple[PeftConfig, float]:
    """Grid over the recipe learning rates and epoch counts, picked by dev loss."""
    rates = (PROMPT_LEARNING_RATE,) if technique in ("prefix", "prompt") else LORA_IA3_LEARNING_RATES
    dev_records = read_instruction_dataset(dev_path)
    best: tuple[PeftConfig, float] | None = None
    for lr in rates:
        for epochs in epochs_grid:
            config = PeftConfig(technique=technique, learning_rate=lr, epochs=epochs, seed=seed)
            tag = f"{technique}-lr{lr}-ep{epochs}"
            artifact = train_adapter(train_path, config, Path(out_dir) / tag)
            from .serve import load_artifact  # avoids a cycle at import time

            model, vocab, _ = load_artifact(artifact.path)
            dev_loss = evaluate_loss(model, _encode_records(dev_records, vocab))
            if best is None or dev_loss < best[1]:
                best = (config, dev_loss)
    assert best is not None
    return best
