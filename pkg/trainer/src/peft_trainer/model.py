"""Compact encoder-decoder transformer used as the frozen base model.

Dimensions follow the multilingual-small recipe: a large embedding table over
a narrow single-layer trunk, so parameter count is embedding-dominated and
adapter budgets stay far below 0.1% of the base. Weights are reproducible
from (config, init_seed); artifacts only need to store adapter deltas.

Attention modules expose optional prefix key/value parameters and the model
an optional prompt-embedding parameter; both are None on the plain base and
are populated by adapter installation.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import torch
from torch import nn

from .vocab import EOS, PAD


@dataclass
class ModelConfig:
    vocab_size: int = 122_880
    d_model: int = 256
    n_heads: int = 8
    d_ff: int = 512
    n_encoder_layers: int = 1
    n_decoder_layers: int = 1
    max_len: int = 512
    init_seed: int = 1234

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelConfig":
        return cls(**doc)


def _sinusoidal(max_len: int, d_model: int) -> torch.Tensor:
    position = torch.arange(max_len).unsqueeze(1).float()
    div = torch.exp(torch.arange(0, d_model, 2).float() * (-math.log(10_000.0) / d_model))
    table = torch.zeros(max_len, d_model)
    table[:, 0::2] = torch.sin(position * div)
    table[:, 1::2] = torch.cos(position * div)
    return table


class Attention(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.n_heads = cfg.n_heads
        self.d_head = cfg.d_model // cfg.n_heads
        self.q = nn.Linear(cfg.d_model, cfg.d_model, bias=False)
        self.k = nn.Linear(cfg.d_model, cfg.d_model, bias=False)
        self.v = nn.Linear(cfg.d_model, cfg.d_model, bias=False)
        self.o = nn.Linear(cfg.d_model, cfg.d_model, bias=False)
        # populated by prefix-tuning installation; always-visible positions
        self.prefix_k: nn.Parameter | None = None
        self.prefix_v: nn.Parameter | None = None

    def _split(self, x: torch.Tensor) -> torch.Tensor:
        b, t, _ = x.shape
        return x.view(b, t, self.n_heads, self.d_head).transpose(1, 2)

    def forward(self, x_q: torch.Tensor, x_kv: torch.Tensor, keep: torch.Tensor) -> torch.Tensor:
        """keep: boolean (B, 1, Tq, Tk) over computed key positions."""
        b = x_q.shape[0]
        q, k, v = self.q(x_q), self.k(x_kv), self.v(x_kv)
        if self.prefix_k is not None:
            n_virtual = self.prefix_k.shape[0]
            k = torch.cat([self.prefix_k.unsqueeze(0).expand(b, -1, -1), k], dim=1)
            v = torch.cat([self.prefix_v.unsqueeze(0).expand(b, -1, -1), v], dim=1)
            prefix_keep = keep.new_ones(b, 1, keep.shape[2], n_virtual)
            keep = torch.cat([prefix_keep, keep], dim=-1)
        q, k, v = self._split(q), self._split(k), self._split(v)
        scores = (q @ k.transpose(-1, -2)) / math.sqrt(self.d_head)
        scores = scores.masked_fill(~keep, torch.finfo(scores.dtype).min)
        out = torch.softmax(scores, dim=-1) @ v
        out = out.transpose(1, 2).reshape(b, -1, self.n_heads * self.d_head)
        return self.o(out)


class FeedForward(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.wi = nn.Linear(cfg.d_model, cfg.d_ff, bias=False)
        self.wo = nn.Linear(cfg.d_ff, cfg.d_model, bias=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.wo(torch.relu(self.wi(x)))


class EncoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.d_model)
        self.self_attn = Attention(cfg)
        self.ln2 = nn.LayerNorm(cfg.d_model)
        self.ff = FeedForward(cfg)

    def forward(self, x: torch.Tensor, keep: torch.Tensor) -> torch.Tensor:
        h = self.ln1(x)
        x = x + self.self_attn(h, h, keep)
        return x + self.ff(self.ln2(x))


class DecoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.d_model)
        self.self_attn = Attention(cfg)
        self.ln2 = nn.LayerNorm(cfg.d_model)
        self.cross_attn = Attention(cfg)
        self.ln3 = nn.LayerNorm(cfg.d_model)
        self.ff = FeedForward(cfg)

    def forward(
        self, x: torch.Tensor, memory: torch.Tensor, self_keep: torch.Tensor, cross_keep: torch.Tensor
    ) -> torch.Tensor:
        h = self.ln1(x)
        x = x + self.self_attn(h, h, self_keep)
        x = x + self.cross_attn(self.ln2(x), memory, cross_keep)
        return x + self.ff(self.ln3(x))


class Seq2SeqModel(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.embedding = nn.Embedding(cfg.vocab_size, cfg.d_model, padding_idx=PAD)
        self.encoder = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.n_encoder_layers))
        self.decoder = nn.ModuleList(DecoderLayer(cfg) for _ in range(cfg.n_decoder_layers))
        self.enc_norm = nn.LayerNorm(cfg.d_model)
        self.dec_norm = nn.LayerNorm(cfg.d_model)
        self.lm_head = nn.Linear(cfg.d_model, cfg.vocab_size, bias=False)
        self.register_buffer("positions", _sinusoidal(cfg.max_len, cfg.d_model), persistent=False)
        # populated by prompt-tuning installation; prepended to encoder input
        self.prompt_embedding: nn.Parameter | None = None

    def _embed(self, ids: torch.Tensor) -> torch.Tensor:
        return self.embedding(ids) * math.sqrt(self.cfg.d_model) + self.positions[: ids.shape[1]]

    def encode(self, src: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Returns (memory, keep-1d over memory positions)."""
        x = self._embed(src)
        keep_1d = src != PAD
        if self.prompt_embedding is not None:
            b = src.shape[0]
            prompt = self.prompt_embedding.unsqueeze(0).expand(b, -1, -1)
            x = torch.cat([prompt, x], dim=1)
            keep_1d = torch.cat([keep_1d.new_ones(b, prompt.shape[1]), keep_1d], dim=1)
        keep = keep_1d[:, None, None, :]
        for layer in self.encoder:
            x = layer(x, keep)
        return self.enc_norm(x), keep_1d

    def decode(
        self, tgt_in: torch.Tensor, memory: torch.Tensor, memory_keep: torch.Tensor
    ) -> torch.Tensor:
        x = self._embed(tgt_in)
        t = tgt_in.shape[1]
        causal = torch.tril(torch.ones(t, t, dtype=torch.bool, device=tgt_in.device))
        self_keep = causal[None, None] & (tgt_in != PAD)[:, None, None, :]
        cross_keep = memory_keep[:, None, None, :]
        for layer in self.decoder:
            x = layer(x, memory, self_keep, cross_keep)
        return self.lm_head(self.dec_norm(x))

    def forward(self, src: torch.Tensor, tgt_in: torch.Tensor) -> torch.Tensor:
        memory, keep = self.encode(src)
        return self.decode(tgt_in, memory, keep)

    @torch.no_grad()
    def greedy_generate(self, src: torch.Tensor, max_new_tokens: int) -> list[int]:
        """Greedy decoding for a single sequence (B=1), stopping at EOS."""
        memory, keep = self.encode(src)
        out: list[int] = []
        tgt = torch.full((1, 1), PAD, dtype=torch.long, device=src.device)
        for _ in range(max_new_tokens):
            logits = self.decode(tgt, memory, keep)
            token = int(logits[0, -1].argmax())
            if token == EOS:
                break
            out.append(token)
            tgt = torch.cat([tgt, torch.tensor([[token]], device=src.device)], dim=1)
        return out


def build_model(cfg: ModelConfig) -> Seq2SeqModel:
    """Deterministic base: weights are a pure function of (config, init_seed)."""
    generator_state = torch.random.get_rng_state()
    torch.manual_seed(cfg.init_seed)
    model = Seq2SeqModel(cfg)
    torch.random.set_rng_state(generator_state)
    return model


def parameter_count(model: nn.Module, trainable_only: bool = False) -> int:
    return sum(p.numel() for p in model.parameters() if p.requires_grad or not trainable_only)
