from __future__ import annotations

import torch

from peft_trainer import ModelConfig, WordVocab, build_model, parameter_count
from peft_trainer.vocab import EOS, PAD, UNK, tokenize


def test_tokenize_words_and_punctuation():
    assert tokenize("Cuisine: Italian; price-range: null") == [
        "cuisine", ":", "italian", ";", "price", "-", "range", ":", "null",
    ]


def test_vocab_round_trip():
    vocab = WordVocab.build(["find me a restaurant", "book a hotel"], table_size=1000)
    ids = vocab.encode("find a hotel", add_eos=True)
    assert ids[-1] == EOS
    assert vocab.decode(ids) == "find a hotel"


def test_vocab_unknown_maps_to_unk():
    vocab = WordVocab.build(["known words only"], table_size=1000)
    assert UNK in vocab.encode("completely novel input")


def test_vocab_save_load(tmp_path):
    vocab = WordVocab.build(["alpha beta gamma"], table_size=500)
    vocab.save(tmp_path / "v.json")
    again = WordVocab.load(tmp_path / "v.json")
    assert again.id_of == vocab.id_of
    assert again.table_size == 500


def test_base_build_is_deterministic():
    cfg = ModelConfig(vocab_size=2048, d_model=64, n_heads=4, d_ff=128, init_seed=5)
    a, b = build_model(cfg), build_model(cfg)
    for pa, pb in zip(a.parameters(), b.parameters()):
        assert torch.equal(pa, pb)


def test_forward_shapes_and_pad_mask():
    cfg = ModelConfig(vocab_size=256, d_model=32, n_heads=4, d_ff=64)
    model = build_model(cfg)
    src = torch.tensor([[5, 6, 7, PAD], [8, 9, PAD, PAD]])
    tgt_in = torch.tensor([[PAD, 10, 11], [PAD, 12, PAD]])
    logits = model(src, tgt_in)
    assert logits.shape == (2, 3, 256)


def test_greedy_generate_bounded():
    cfg = ModelConfig(vocab_size=256, d_model=32, n_heads=4, d_ff=64)
    model = build_model(cfg).eval()
    src = torch.tensor([[5, 6, 7]])
    out = model.greedy_generate(src, max_new_tokens=4)
    assert len(out) <= 4
    assert out == model.greedy_generate(src, max_new_tokens=4)


def test_parameter_count_matches_manual():
    cfg = ModelConfig(vocab_size=128, d_model=16, n_heads=2, d_ff=32)
    model = build_model(cfg)
    assert parameter_count(model) == sum(p.numel() for p in model.parameters())
