"""Builds a tiny local GPT-2-style checkpoint for offline extraction tests.

The tokenizer is a byte-level BPE with leading-space merge chains over a
small word list: some words are single tokens, some deliberately split, and
"waspish" shares its first subword with "wasp". The same vocab/merges are
written in the downstream toolkit's flat file formats for cross-component
round trips.
"""

import json

import pytest
import torch

WORDS_SINGLE = ["hive", "swarm", "bee", "nest", "wasp", "soup", "bread", "river", "stone"]
WORDS_SPLIT = {"waspish": 3, "breadth": 2, "riverbed": 3}  # chars left unmerged
ALL_WORDS = WORDS_SINGLE + list(WORDS_SPLIT)


def _byte_unicode_map():
    identity = list(range(33, 127)) + list(range(161, 173)) + list(range(174, 256))
    keep = set(identity)
    mapping = {}
    shifted = 0
    for b in range(256):
        if b in keep:
            mapping[b] = chr(b)
        else:
            mapping[b] = chr(256 + shifted)
            shifted += 1
    return mapping


def build_vocab_and_merges():
    byte_map = _byte_unicode_map()
    vocab = {byte_map[b]: b for b in range(256)}
    merges = []
    seen = set()
    space = byte_map[ord(" ")]
    for word in ALL_WORDS:
        tail = WORDS_SPLIT.get(word, 0)
        symbol = space
        for ch in word[: len(word) - tail]:
            pair = (symbol, ch)
            if pair not in seen:
                seen.add(pair)
                merges.append(pair)
            symbol += ch
            if symbol not in vocab:
                vocab[symbol] = len(vocab)
    vocab["<|endoftext|>"] = len(vocab)
    return vocab, merges


@pytest.fixture(scope="session")
def checkpoint_dir(tmp_path_factory):
    from tokenizers import Tokenizer, decoders, pre_tokenizers
    from tokenizers.models import BPE
    from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

    out = tmp_path_factory.mktemp("checkpoint")
    vocab, merges = build_vocab_and_merges()

    backend = Tokenizer(BPE(vocab=vocab, merges=merges, fuse_unk=False))
    backend.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False, use_regex=True)
    backend.decoder = decoders.ByteLevel()
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=backend, eos_token="<|endoftext|>", unk_token="<|endoftext|>"
    )
    tokenizer.save_pretrained(str(out))

    eot = vocab["<|endoftext|>"]
    config = GPT2Config(
        vocab_size=len(vocab), n_positions=48, n_embd=32, n_layer=2, n_head=2,
        bos_token_id=eot, eos_token_id=eot,
    )
    torch.manual_seed(1234)
    model = GPT2LMHeadModel(config)
    model.save_pretrained(str(out))

    # the same tokenizer in the downstream flat formats
    with open(out / "vocab.json", "w", encoding="utf-8") as f:
        json.dump(vocab, f, ensure_ascii=False)
    with open(out / "merges.txt", "w", encoding="utf-8") as f:
        f.write("#version: 0.2\n")
        for a, b in merges:
            f.write(f"{a} {b}\n")
    return str(out)


@pytest.fixture(scope="session")
def norms_path(tmp_path_factory):
    out = tmp_path_factory.mktemp("norms") / "norms.csv"
    templates = [
        "he feared finding a", "she slowly opened the", "they never trusted the",
        "we carefully packed a", "it floated down the",
    ]
    rows = ["stem_id,stem_text,response_text,response_count"]
    for i in range(20):
        stem_id = f"s{i:02d}"
        text = templates[i % len(templates)]
        words = [ALL_WORDS[i % len(ALL_WORDS)], ALL_WORDS[(i + 3) % len(ALL_WORDS)]]
        if words[0] == words[1]:
            words[1] = ALL_WORDS[(i + 5) % len(ALL_WORDS)]
        rows.append(f"{stem_id},{text},{words[0]},70")
        rows.append(f"{stem_id},{text},{words[1]},40")
    out.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return str(out)


@pytest.fixture(scope="session")
def loaded(checkpoint_dir):
    from cloze_extractor import load_model

    return load_model(checkpoint_dir, model_id="tiny-local")
