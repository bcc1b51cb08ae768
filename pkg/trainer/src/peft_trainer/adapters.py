"""The four parameter-efficient techniques, installed onto a frozen base.

- lora:   low-rank deltas on the q and v attention projections
- ia3:    learned rescaling of k/v attention outputs and the feed-forward
          inner activations
- prefix: learned key/value prefixes prepended inside every attention block
- prompt: learned virtual-token embeddings prepended to the encoder input

Installation freezes every base parameter first; afterwards exactly the
adapter parameters require grad, so the adapter state dict is simply the
trainable subset of the model.
"""

from __future__ import annotations

import torch
from torch import nn

from .errors import ConfigError
from .model import Attention, FeedForward, Seq2SeqModel

TECHNIQUES = ("lora", "ia3", "prefix", "prompt")

# Attention projections by default; recorded in the training manifest.
LORA_TARGETS = ("q", "v")


class LoRALinear(nn.Module):
    def __init__(self, base: nn.Linear, r: int, alpha: int, dropout: float):
        super().__init__()
        self.base = base
        self.lora_a = nn.Parameter(torch.randn(r, base.in_features) * 0.01)
        self.lora_b = nn.Parameter(torch.zeros(base.out_features, r))
        self.scaling = alpha / r
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        delta = self.dropout(x) @ self.lora_a.T @ self.lora_b.T
        return self.base(x) + delta * self.scaling


class OutputScale(nn.Module):
    """(IA)3-style learned rescale of a projection's output."""

    def __init__(self, base: nn.Linear):
        super().__init__()
        self.base = base
        self.scale = nn.Parameter(torch.ones(base.out_features))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.base(x) * self.scale


class InputScale(nn.Module):
    """(IA)3-style learned rescale of a projection's input activations."""

    def __init__(self, base: nn.Linear):
        super().__init__()
        self.base = base
        self.scale = nn.Parameter(torch.ones(base.in_features))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.base(x * self.scale)


def _attention_blocks(model: Seq2SeqModel) -> list[Attention]:
    return [m for m in model.modules() if isinstance(m, Attention)]


def install_adapter(
    model: Seq2SeqModel,
    technique: str,
    *,
    lora_r: int = 16,
    lora_alpha: int = 32,
    lora_dropout: float = 0.1,
    virtual_tokens: int = 20,
) -> list[str]:
    """Freeze the base and attach the technique's parameters.

    Returns the names of the trainable parameters.
    """
    if technique not in TECHNIQUES:
        raise ConfigError(f"unknown technique {technique!r}")
    for param in model.parameters():
        param.requires_grad_(False)

    if technique == "lora":
        for attn in _attention_blocks(model):
            attn.q = LoRALinear(attn.q, lora_r, lora_alpha, lora_dropout)
            attn.v = LoRALinear(attn.v, lora_r, lora_alpha, lora_dropout)
    elif technique == "ia3":
        for attn in _attention_blocks(model):
            attn.k = OutputScale(attn.k)
            attn.v = OutputScale(attn.v)
        for module in model.modules():
            if isinstance(module, FeedForward) and isinstance(module.wo, nn.Linear):
                module.wo = InputScale(module.wo)
    elif technique == "prefix":
        d_model = model.cfg.d_model
        for attn in _attention_blocks(model):
            attn.prefix_k = nn.Parameter(torch.randn(virtual_tokens, d_model) * 0.02)
            attn.prefix_v = nn.Parameter(torch.randn(virtual_tokens, d_model) * 0.02)
    else:  # prompt
        d_model = model.cfg.d_model
        model.prompt_embedding = nn.Parameter(torch.randn(virtual_tokens, d_model) * 0.02)

    return [name for name, param in model.named_parameters() if param.requires_grad]


def trainable_parameters(model: nn.Module) -> list[torch.Tensor]:
    return [p for p in model.parameters() if p.requires_grad]


def adapter_state_dict(model: nn.Module) -> dict[str, torch.Tensor]:
    return {
        name: param.detach().clone()
        for name, param in model.named_parameters()
        if param.requires_grad
    }


def load_adapter_state(model: nn.Module, state: dict[str, torch.Tensor]) -> None:
    trainable = {name: param for name, param in model.named_parameters() if param.requires_grad}
    if set(trainable) != set(state):
        missing = set(trainable) ^ set(state)
        raise ConfigError(f"adapter state does not match installed technique: {sorted(missing)[:4]}")
    with torch.no_grad():
        for name, param in trainable.items():
            param.copy_(state[name])
