"""N-gram counting and Stupid Backoff / unigram scoring.

Counting never crosses document boundaries: a corpus is a sequence of
documents and every contiguous k-window inside one document is counted once.
Count tables are keyed by subword-id tuples of the model tokenizer so n-gram
and neural-model analyses share a vocabulary.

Stupid Backoff produces scores, not probabilities: S(w | ctx) is the relative
frequency of ctx+w when attested, and otherwise alpha * S(w | shorter ctx),
bottoming out at count(w)/N. Entirely unseen words score 0.

Binary count-table format (little endian):
    magic "NGRAMCT1" | u64 max_order | u64 total_tokens
    | u64 table length for each order 1..max_order
    | per order k, entries sorted by id tuple: k * u32 ids, u64 count
"""

from __future__ import annotations

import struct
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .bpe import TokenizerSpec, bpe_encode
from .errors import CoverageError, EmptyModelError, ParseError
from .norms import ClozeNorms, TokenizationMap

MAGIC = b"NGRAMCT1"


@dataclass
class NgramCounts:
    """Count tables for orders 1..max_order plus the token total."""

    max_order: int
    tables: list[Counter]  # tables[k-1] maps k-id tuples to counts
    total_tokens: int

    def table(self, order: int) -> Counter:
        if not 1 <= order <= self.max_order:
            raise ValueError(f"order {order} outside 1..{self.max_order}")
        return self.tables[order - 1]

    def count(self, seq: tuple[int, ...]) -> int:
        return self.tables[len(seq) - 1].get(seq, 0)


@dataclass(frozen=True)
class BackoffParams:
    alpha: float = 0.4
    order: int = 5

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")


def count_ngrams(tokens: Sequence[int], max_order: int) -> NgramCounts:
    """Count every contiguous k-window of a single document, k = 1..max_order."""
    if max_order < 1:
        raise ValueError(f"max_order must be >= 1, got {max_order}")
    counts = NgramCounts(max_order=max_order, tables=[Counter() for _ in range(max_order)], total_tokens=0)
    _count_into(counts, tokens)
    return counts


def count_documents(docs: Iterable[Sequence[int]], max_order: int) -> NgramCounts:
    """Count a document stream; windows never span document boundaries."""
    if max_order < 1:
        raise ValueError(f"max_order must be >= 1, got {max_order}")
    counts = NgramCounts(max_order=max_order, tables=[Counter() for _ in range(max_order)], total_tokens=0)
    for doc in docs:
        _count_into(counts, doc)
    return counts


def _count_into(counts: NgramCounts, tokens: Sequence[int]) -> None:
    toks = tuple(tokens)
    n = len(toks)
    counts.total_tokens += n
    for k in range(1, counts.max_order + 1):
        table = counts.tables[k - 1]
        for i in range(n - k + 1):
            table[toks[i : i + k]] += 1


def merge_counts(a: NgramCounts, b: NgramCounts) -> NgramCounts:
    """Pointwise sum of two count tables; commutative and associative."""
    if a.max_order != b.max_order:
        raise ValueError(f"order mismatch: {a.max_order} != {b.max_order}")
    tables = []
    for ta, tb in zip(a.tables, b.tables):
        merged = Counter(ta)
        merged.update(tb)
        tables.append(merged)
    return NgramCounts(max_order=a.max_order, tables=tables, total_tokens=a.total_tokens + b.total_tokens)


def stupid_backoff_score(
    counts: NgramCounts, context: Sequence[int], word: int, params: BackoffParams
) -> float:
    """Stupid Backoff score of word given context; in [0, 1], 0 when unseen."""
    if params.order > counts.max_order:
        raise ValueError(
            f"params.order {params.order} exceeds counted order {counts.max_order}"
        )
    if len(context) > params.order - 1:
        raise ValueError(
            f"context length {len(context)} exceeds order-1 = {params.order - 1}"
        )
    if counts.total_tokens == 0:
        raise EmptyModelError("cannot score against an empty model (N = 0)")
    return _backoff(counts, tuple(context), word, params.alpha)


def _backoff(counts: NgramCounts, ctx: tuple[int, ...], word: int, alpha: float) -> float:
    if not ctx:
        return counts.count((word,)) / counts.total_tokens
    joint = counts.count(ctx + (word,))
    if joint > 0:
        return joint / counts.count(ctx)
    return alpha * _backoff(counts, ctx[1:], word, alpha)


def unigram_score(counts: NgramCounts, word: int) -> float:
    """Relative frequency count(word)/N."""
    if counts.total_tokens == 0:
        raise EmptyModelError("cannot score against an empty model (N = 0)")
    return counts.count((word,)) / counts.total_tokens


@dataclass(frozen=True)
class StemResponseScore:
    stem_id: str
    response: str
    count: int
    cloze_prob: float
    backoff_score: float
    unigram_score: float


def score_stems(
    counts: NgramCounts,
    norms: ClozeNorms,
    tokmap: TokenizationMap,
    spec: TokenizerSpec,
    params: BackoffParams,
) -> list[StemResponseScore]:
    """Backoff and unigram scores for every (stem, response) pair.

    The context is the last order-1 subword ids of the tokenized preamble
    (the full prefix when the preamble is shorter; no padding). Each response
    is represented by the head of its tokenization-map entry.
    """
    missing = sorted(
        {r.text for g in norms.responses.values() for r in g if r.text not in tokmap.entries}
    )
    if missing:
        shown = ", ".join(repr(w) for w in missing[:20])
        raise CoverageError(
            f"{len(missing)} response words missing from tokenization map: {shown}",
            missing=missing,
        )
    rows: list[StemResponseScore] = []
    for stem in norms.stems:
        stem_ids = bpe_encode(spec, stem.text)
        context = stem_ids[-(params.order - 1):] if params.order > 1 else []
        for resp in norms.responses[stem.stem_id]:
            word = tokmap.entries[resp.text][0]
            rows.append(
                StemResponseScore(
                    stem_id=stem.stem_id,
                    response=resp.text,
                    count=resp.count,
                    cloze_prob=resp.cloze_prob,
                    backoff_score=stupid_backoff_score(counts, context, word, params),
                    unigram_score=unigram_score(counts, word),
                )
            )
    return rows


def tokenize_corpus_file(
    path: str, spec: TokenizerSpec | None = None, pretokenized: bool = False
) -> Iterable[list[int]]:
    """Yield one id list per line-delimited document.

    Raw text lines are encoded with the tokenizer; pretokenized lines carry
    space-separated integer ids. Blank lines are skipped.
    """
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if pretokenized:
                try:
                    yield [int(tok) for tok in line.split()]
                except ValueError:
                    raise ParseError("pretokenized line contains a non-integer", path=path, line=lineno) from None
            else:
                if spec is None:
                    raise ValueError("raw-text corpus requires a tokenizer spec")
                yield bpe_encode(spec, line)


def save_counts(counts: NgramCounts, path: str) -> None:
    """Serialize count tables to the versioned binary format."""
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<QQ", counts.max_order, counts.total_tokens))
        f.write(struct.pack(f"<{counts.max_order}Q", *(len(t) for t in counts.tables)))
        for k, table in enumerate(counts.tables, start=1):
            fmt = f"<{k}IQ"
            for seq in sorted(table):
                f.write(struct.pack(fmt, *seq, table[seq]))


def load_counts(path: str) -> NgramCounts:
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != MAGIC:
            raise ParseError(f"bad magic {magic!r}; not a count-table file", path=path)
        max_order, total_tokens = struct.unpack("<QQ", f.read(16))
        lengths = struct.unpack(f"<{max_order}Q", f.read(8 * max_order))
        tables: list[Counter] = []
        for k in range(1, max_order + 1):
            fmt = f"<{k}IQ"
            size = struct.calcsize(fmt)
            table: Counter = Counter()
            for _ in range(lengths[k - 1]):
                buf = f.read(size)
                if len(buf) != size:
                    raise ParseError("truncated count-table file", path=path)
                *seq, count = struct.unpack(fmt, buf)
                table[tuple(seq)] = count
            tables.append(table)
        if f.read(1):
            raise ParseError("trailing bytes after count tables", path=path)
    return NgramCounts(max_order=max_order, tables=tables, total_tokens=total_tokens)
