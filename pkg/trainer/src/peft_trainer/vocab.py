"""Word-level tokenizer built from the instruction dataset.

Lowercased words, digits and punctuation marks become tokens; decoding joins
tokens with single spaces, which the harness-side parsers normalize away.
The id table size is fixed by the model config; unseen words map to UNK.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

PAD, EOS, UNK = 0, 1, 2
_SPECIALS = ("<pad>", "</s>", "<unk>")

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:'[a-z]+)?|[^\sa-z0-9]")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class WordVocab:
    def __init__(self, tokens: list[str], table_size: int):
        if len(tokens) + len(_SPECIALS) > table_size:
            tokens = tokens[: table_size - len(_SPECIALS)]
        self.table_size = table_size
        self.id_of = {tok: i + len(_SPECIALS) for i, tok in enumerate(tokens)}
        self.token_of = {i: tok for tok, i in self.id_of.items()}

    @classmethod
    def build(cls, texts, table_size: int, max_entries: int = 20_000) -> "WordVocab":
        counts: dict[str, int] = {}
        for text in texts:
            for token in tokenize(text):
                counts[token] = counts.get(token, 0) + 1
        ranked = sorted(counts, key=lambda t: (-counts[t], t))[:max_entries]
        return cls(ranked, table_size)

    def __len__(self) -> int:
        return len(self.id_of) + len(_SPECIALS)

    def encode(self, text: str, add_eos: bool = False, max_len: int | None = None) -> list[int]:
        ids = [self.id_of.get(tok, UNK) for tok in tokenize(text)]
        if max_len is not None:
            ids = ids[: max_len - (1 if add_eos else 0)]
        if add_eos:
            ids.append(EOS)
        return ids

    def decode(self, ids) -> str:
        words = []
        for i in ids:
            if i == EOS:
                break
            if i in (PAD, UNK):
                continue
            words.append(self.token_of.get(int(i), ""))
        return " ".join(w for w in words if w)

    def save(self, path: str | Path) -> None:
        doc = {
            "table_size": self.table_size,
            "tokens": [self.token_of[i] for i in sorted(self.token_of)],
        }
        Path(path).write_text(json.dumps(doc, ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "WordVocab":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(doc["tokens"], doc["table_size"])
