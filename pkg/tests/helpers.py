"""Shared builders for test tokenizers."""

from clozealign.bpe import TokenizerSpec, byte_unicode_map


def word_spec(words: list[str], partial: dict[str, int] | None = None) -> TokenizerSpec:
    """Tokenizer with full byte alphabet plus leading-space merge chains.

    Each word gets merges building " word" into one token, except words in
    `partial`, whose chain stops `partial[word]` characters early (leaving
    that many single-byte tail tokens).
    """
    byte_map = byte_unicode_map()
    vocab = {byte_map[b]: b for b in range(256)}
    merges: list[tuple[str, str]] = []
    seen = set()
    space = byte_map[ord(" ")]
    for word in words:
        tail = (partial or {}).get(word, 0)
        symbol = space
        for ch in word[: len(word) - tail]:
            pair = (symbol, ch)
            if pair not in seen:
                seen.add(pair)
                merges.append(pair)
            symbol = symbol + ch
            if symbol not in vocab:
                vocab[symbol] = len(vocab)
    return TokenizerSpec(vocab=vocab, merges=tuple(merges), name="word-chains")
