"""Byte-level BPE encoding against flat vocab/merges files.

The encoder is deliberately minimal: text is mapped byte-by-byte through a
256-entry printable-character table, then merge rules are applied greedily in
priority order (lowest merge index first, leftmost occurrence on ties). There
is no pre-tokenizer and no special-token handling; continuation words are
encoded with an explicit leading space by the caller.

File formats:
  vocab  -- JSON object mapping token string to integer id.
  merges -- one space-separated pair per line, highest priority first; the
            first line is skipped when it starts with "#version".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

from .errors import DataError, ParseError, VocabularyError

_UNMERGEABLE = float("inf")


def byte_unicode_map() -> dict[int, str]:
    """Bijection from the 256 byte values to printable characters.

    Bytes 33-126, 161-172 and 174-255 map to their own codepoints; the
    remaining bytes map to successive codepoints starting at 256.
    """
    identity = (
        list(range(33, 127)) + list(range(161, 173)) + list(range(174, 256))
    )
    keep = set(identity)
    mapping: dict[int, str] = {}
    shifted = 0
    for b in range(256):
        if b in keep:
            mapping[b] = chr(b)
        else:
            mapping[b] = chr(256 + shifted)
            shifted += 1
    return mapping


@dataclass(frozen=True)
class TokenizerSpec:
    """A byte-level BPE tokenizer: vocabulary, ordered merges, byte table."""

    vocab: dict[str, int]
    merges: tuple[tuple[str, str], ...]
    byte_map: dict[int, str] = field(default_factory=byte_unicode_map)
    name: str = "unknown"

    def __post_init__(self) -> None:
        ids = list(self.vocab.values())
        if len(set(ids)) != len(ids):
            raise DataError("tokenizer vocabulary contains duplicate ids")
        if sorted(self.byte_map) != list(range(256)) or len(set(self.byte_map.values())) != 256:
            raise DataError("byte_map must be a bijection over the 256 byte values")
        for left, right in self.merges:
            if left + right not in self.vocab:
                raise DataError(f"merge result {left + right!r} missing from vocabulary")

    @cached_property
    def merge_ranks(self) -> dict[tuple[str, str], int]:
        # first occurrence wins when a pair is listed twice
        ranks: dict[tuple[str, str], int] = {}
        for i, pair in enumerate(self.merges):
            ranks.setdefault(pair, i)
        return ranks

    @cached_property
    def id_to_token(self) -> dict[int, str]:
        return {i: tok for tok, i in self.vocab.items()}

    @cached_property
    def char_to_byte(self) -> dict[str, int]:
        return {c: b for b, c in self.byte_map.items()}

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)


def load_vocab(path: str) -> dict[str, int]:
    """Read a flat token -> id JSON mapping."""
    with open(path, encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(f"vocabulary is not valid JSON ({e.msg})", path=path, line=e.lineno) from e
    if not isinstance(raw, dict):
        raise ParseError("vocabulary must be a JSON object", path=path)
    vocab: dict[str, int] = {}
    for token, idx in raw.items():
        if not isinstance(idx, int) or isinstance(idx, bool):
            raise ParseError(f"id for token {token!r} is not an integer", path=path)
        vocab[token] = idx
    return vocab


def load_merges(path: str) -> list[tuple[str, str]]:
    """Read merge pairs, one per line, in priority order."""
    merges: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if lineno == 1 and line.startswith("#version"):
                continue
            if not line:
                continue
            parts = line.split(" ")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ParseError("merge line must contain exactly two tokens", path=path, line=lineno)
            merges.append((parts[0], parts[1]))
    return merges


def load_tokenizer_spec(vocab_path: str, merges_path: str, name: str = "unknown") -> TokenizerSpec:
    return TokenizerSpec(vocab=load_vocab(vocab_path), merges=tuple(load_merges(merges_path)), name=name)


def save_tokenizer_spec(spec: TokenizerSpec, vocab_path: str, merges_path: str) -> None:
    with open(vocab_path, "w", encoding="utf-8") as f:
        json.dump(spec.vocab, f, ensure_ascii=False, indent=0)
        f.write("\n")
    with open(merges_path, "w", encoding="utf-8") as f:
        f.write("#version: 0.2\n")
        for left, right in spec.merges:
            f.write(f"{left} {right}\n")


def _apply_merges(symbols: list[str], ranks: dict[tuple[str, str], int]) -> list[str]:
    """Greedy merging: repeatedly merge the lowest-ranked pair present.

    All occurrences of the winning pair are merged leftmost-first in one
    pass; any pair created by such a merge necessarily has a higher rank
    than the pair just merged, so this is equivalent to merging one
    occurrence at a time.
    """
    while len(symbols) > 1:
        best: tuple[str, str] | None = None
        best_rank = _UNMERGEABLE
        for pair in zip(symbols, symbols[1:]):
            rank = ranks.get(pair, _UNMERGEABLE)
            if rank < best_rank:
                best, best_rank = pair, rank
        if best is None:
            break
        merged: list[str] = []
        i = 0
        while i < len(symbols):
            if i + 1 < len(symbols) and (symbols[i], symbols[i + 1]) == best:
                merged.append(symbols[i] + symbols[i + 1])
                i += 2
            else:
                merged.append(symbols[i])
                i += 1
        symbols = merged
    return symbols


def bpe_encode(spec: TokenizerSpec, text: str) -> list[int]:
    """Encode UTF-8 text to subword ids. Deterministic; empty text gives []."""
    if text == "":
        return []
    mapped = "".join(spec.byte_map[b] for b in text.encode("utf-8"))
    symbols = _apply_merges(list(mapped), spec.merge_ranks)
    ids: list[int] = []
    for sym in symbols:
        idx = spec.vocab.get(sym)
        if idx is None:
            raise VocabularyError(
                f"token {sym!r} produced by merging is absent from the vocabulary"
            )
        ids.append(idx)
    return ids


def bpe_decode(spec: TokenizerSpec, ids: list[int]) -> str:
    """Inverse of bpe_encode: ids -> token strings -> bytes -> UTF-8 text."""
    chars: list[str] = []
    for idx in ids:
        token = spec.id_to_token.get(idx)
        if token is None:
            raise VocabularyError(f"id {idx} is absent from the vocabulary")
        chars.append(token)
    data = bytes(spec.char_to_byte[c] for c in "".join(chars))
    return data.decode("utf-8")


def first_subword(spec: TokenizerSpec, response: str, leading_space: bool = True) -> int:
    """Id of the first subword of a response word.

    With leading_space set (the default for cloze continuations, which follow
    the preamble's final blank) the response is encoded as " " + response.
    """
    if response == "":
        raise ValueError("response must be non-empty")
    text = " " + response if leading_space else response
    return bpe_encode(spec, text)[0]
