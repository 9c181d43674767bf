"""Next-token distribution and contextual-embedding extraction.

All inference runs with gradients disabled in float32; on CPU the outputs
are bit-reproducible, so re-extraction with identical inputs yields
byte-identical dumps.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np
import torch

from .formats import NormStem


@dataclass
class LoadedModel:
    model: torch.nn.Module
    tokenizer: object
    model_id: str
    n_params: int
    max_positions: int
    hidden_size: int


def load_model(model_ref: str, device: str = "cpu", model_id: str | None = None) -> LoadedModel:
    """Load a causal LM checkpoint and its tokenizer from a hub id or path."""
    from transformers import AutoModelForCausalLM, AutoTokenizer

    model = AutoModelForCausalLM.from_pretrained(model_ref).to(device)
    model.eval()
    tokenizer = AutoTokenizer.from_pretrained(model_ref)
    config = model.config
    max_positions = int(
        getattr(config, "n_positions", None) or getattr(config, "max_position_embeddings", 10**9)
    )
    return LoadedModel(
        model=model,
        tokenizer=tokenizer,
        model_id=model_id or str(model_ref),
        n_params=sum(p.numel() for p in model.parameters()),
        max_positions=max_positions,
        hidden_size=int(getattr(config, "hidden_size", getattr(config, "n_embd", 0))),
    )


def encode_continuation(tokenizer, word: str) -> list[int]:
    """Subword ids of a continuation word, with the leading-space convention."""
    return list(tokenizer.encode(" " + word, add_special_tokens=False))


def next_token_distribution(lm: LoadedModel, text: str) -> np.ndarray:
    """Full softmax over the vocabulary at the final position of text."""
    ids = lm.tokenizer.encode(text, add_special_tokens=False)
    if len(ids) > lm.max_positions:
        raise ValueError(f"context of {len(ids)} tokens exceeds window {lm.max_positions}")
    with torch.no_grad():
        logits = lm.model(torch.tensor([ids], device=lm.model.device)).logits[0, -1]
    return torch.softmax(logits.float(), dim=-1).cpu().numpy()


def full_vocabulary_rank(probs: np.ndarray, token_id: int) -> int:
    """1-based rank of token_id under probs; ties broken by token id."""
    p = probs[token_id]
    higher = int((probs > p).sum())
    tied_before = int((probs[:token_id] == p).sum())
    return higher + tied_before + 1


def extract_predictions(
    lm: LoadedModel, stems: list[NormStem], top_k: int
) -> tuple[list[dict], list[str]]:
    """Per-stem top-k lists plus probability and rank of each response head.

    Returns (records, skipped_stem_ids); stems whose preamble exceeds the
    model context window are skipped with a log line.
    """
    records: list[dict] = []
    skipped: list[str] = []
    for stem in stems:
        try:
            probs = next_token_distribution(lm, stem.text)
        except ValueError as e:
            print(f"skipping stem {stem.stem_id}: {e}", file=sys.stderr)
            skipped.append(stem.stem_id)
            continue
        order = np.lexsort((np.arange(len(probs)), -probs))[:top_k]
        top = [[int(t), float(probs[t])] for t in order]
        responses = []
        for word, _count in stem.responses:
            head = encode_continuation(lm.tokenizer, word)[0]
            responses.append(
                {
                    "text": word,
                    "first_id": int(head),
                    "prob": float(probs[head]),
                    "rank": full_vocabulary_rank(probs, head),
                }
            )
        records.append({"stem_id": stem.stem_id, "top": top, "responses": responses})
    return records, skipped


def pooled_embedding(lm: LoadedModel, stem_text: str, word: str) -> tuple[np.ndarray, int]:
    """Mean of the last-layer hidden states at the word's subword positions.

    The word is appended to the preamble with a leading space; its subwords
    occupy the final positions of the sequence.
    """
    stem_ids = lm.tokenizer.encode(stem_text, add_special_tokens=False)
    word_ids = encode_continuation(lm.tokenizer, word)
    ids = stem_ids + word_ids
    if len(ids) > lm.max_positions:
        raise ValueError(f"context of {len(ids)} tokens exceeds window {lm.max_positions}")
    with torch.no_grad():
        out = lm.model(torch.tensor([ids], device=lm.model.device), output_hidden_states=True)
    states = out.hidden_states[-1][0, len(stem_ids):].float()
    return states.mean(dim=0).cpu().numpy(), len(word_ids)


def extract_embeddings(
    lm: LoadedModel, stems: list[NormStem], completions: dict[str, list[str]]
) -> tuple[list[dict], np.ndarray, list[str]]:
    """Pooled vectors for every (stem, completion); stem order preserved."""
    records: list[dict] = []
    rows: list[np.ndarray] = []
    skipped: list[str] = []
    for stem in stems:
        for word in completions.get(stem.stem_id, []):
            try:
                vector, n_subwords = pooled_embedding(lm, stem.text, word)
            except ValueError as e:
                print(f"skipping embedding {stem.stem_id}/{word}: {e}", file=sys.stderr)
                skipped.append(f"{stem.stem_id}/{word}")
                continue
            records.append(
                {
                    "stem_id": stem.stem_id,
                    "word": word,
                    "offset": len(rows),
                    "n_subwords": n_subwords,
                }
            )
            rows.append(vector)
    if rows:
        vectors = np.stack(rows)
    else:
        vectors = np.zeros((0, lm.hidden_size), dtype=np.float32)
    return records, vectors, skipped


def emit_tokenization_map(lm: LoadedModel, words: list[str]) -> dict[str, list[int]]:
    """Leading-space tokenization of each word, for the shared map format."""
    if not words:
        raise ValueError("words must be non-empty")
    return {word: encode_continuation(lm.tokenizer, word) for word in words}


def decode_top_words(lm: LoadedModel, record: dict, k: int) -> list[str]:
    """Decode a stem record's top tokens into folded unique word strings."""
    words: list[str] = []
    seen: set[str] = set()
    for token_id, _prob in record["top"]:
        text = lm.tokenizer.decode([token_id]).strip().lower()
        if text and text not in seen:
            seen.add(text)
            words.append(text)
        if len(words) == k:
            break
    return words
