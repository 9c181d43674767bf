"""Cloze completion norms: loading, validation, and subword statistics.

Norms CSV schema (UTF-8, comma separated, quoted strings):
    stem_id,stem_text,response_text,response_count,cloze_prob
The cloze_prob column is optional; probabilities are always recomputed as
count/total so the per-stem distribution sums to 1 exactly. Supplied
probabilities are cross-checked against the recomputation.

A tokenization map is stored as line-delimited JSON records
``{"word": ..., "ids": [...]}``; an optional leading record
``{"source_tokenizer": ...}`` names the tokenizer that produced it.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass

from .bpe import TokenizerSpec, bpe_encode
from .errors import (
    ConsistencyError,
    CoverageError,
    DuplicateRecordError,
    ParseError,
)

EXPECTED_COLUMNS = ["stem_id", "stem_text", "response_text", "response_count", "cloze_prob"]

# Sources derived from the real norms promise at least this many responses
# per stem; synthetic fixtures may carry fewer, so this is a warning only.
MIN_EXPECTED_RESPONSES = 100

PROB_CHECK_TOLERANCE = 1e-6


class LowResponseCountWarning(UserWarning):
    """A stem carries fewer responses than real norms guarantee."""


@dataclass(frozen=True)
class SentenceStem:
    stem_id: str
    text: str
    n_words: int


@dataclass(frozen=True)
class ClozeResponse:
    stem_id: str
    text: str
    count: int
    cloze_prob: float


@dataclass
class ClozeNorms:
    """Sentence stems plus their human completion distributions."""

    stems: list[SentenceStem]
    responses: dict[str, list[ClozeResponse]]  # keyed by stem_id, file order

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for stem in self.stems:
            if stem.stem_id in seen:
                raise DuplicateRecordError(f"duplicate stem_id {stem.stem_id!r}")
            seen.add(stem.stem_id)
        for stem_id, group in self.responses.items():
            if stem_id not in seen:
                raise ConsistencyError(f"responses reference unknown stem {stem_id!r}")
            if not group:
                raise ConsistencyError(f"stem {stem_id!r} has zero responses")
            total = math.fsum(r.cloze_prob for r in group)
            if abs(total - 1.0) > 1e-9:
                raise ConsistencyError(
                    f"cloze probabilities for stem {stem_id!r} sum to {total}, not 1"
                )

    def stem(self, stem_id: str) -> SentenceStem:
        for stem in self.stems:
            if stem.stem_id == stem_id:
                return stem
        raise KeyError(stem_id)

    def iter_pairs(self):
        """Yield (stem, response) pairs in file order."""
        by_id = {s.stem_id: s for s in self.stems}
        for stem_id, group in self.responses.items():
            for resp in group:
                yield by_id[stem_id], resp

    def response_words(self) -> list[str]:
        """Unique response strings, sorted, as typed."""
        return sorted({r.text for group in self.responses.values() for r in group})

    @property
    def n_responses(self) -> int:
        return sum(len(g) for g in self.responses.values())


def load_cloze_norms(path: str, format: str = "csv") -> ClozeNorms:
    """Load and validate a norms file.

    Rejects malformed rows (with line numbers), duplicate (stem_id, response)
    records, zero-count responses, and supplied probabilities inconsistent
    with counts beyond 1e-6. Emits LowResponseCountWarning for stems whose
    total count falls below the real-norms floor of 100.
    """
    if format != "csv":
        raise ValueError(f"unsupported norms format {format!r}")

    stem_texts: dict[str, str] = {}
    counts: dict[str, list[tuple[str, int, float | None, int]]] = {}
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("file is empty", path=path, line=1) from None
        if header not in (EXPECTED_COLUMNS, EXPECTED_COLUMNS[:4]):
            raise ParseError(
                f"unexpected header {header!r}; expected {EXPECTED_COLUMNS!r} "
                "(cloze_prob optional)",
                path=path,
                line=1,
            )
        has_prob = len(header) == 5
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, found {len(row)}", path=path, line=lineno
                )
            stem_id, stem_text, response_text = row[0], row[1], row[2]
            if not stem_id or not stem_text.strip() or not response_text:
                raise ParseError("empty stem_id, stem_text or response_text", path=path, line=lineno)
            try:
                count = int(row[3])
            except ValueError:
                raise ParseError(f"response_count {row[3]!r} is not an integer", path=path, line=lineno) from None
            if count < 1:
                raise ParseError("stored responses must have count >= 1", path=path, line=lineno)
            prob: float | None = None
            if has_prob and row[4] != "":
                try:
                    prob = float(row[4])
                except ValueError:
                    raise ParseError(f"cloze_prob {row[4]!r} is not a number", path=path, line=lineno) from None
            if stem_id in stem_texts and stem_texts[stem_id] != stem_text:
                raise ConsistencyError(
                    f"{path}:{lineno}: stem {stem_id!r} repeats with different text"
                )
            stem_texts.setdefault(stem_id, stem_text)
            group = counts.setdefault(stem_id, [])
            if any(prev[0] == response_text for prev in group):
                raise DuplicateRecordError(
                    f"{path}:{lineno}: duplicate response {response_text!r} for stem {stem_id!r}"
                )
            group.append((response_text, count, prob, lineno))

    if not counts:
        raise ParseError("file contains no response rows", path=path)

    stems: list[SentenceStem] = []
    responses: dict[str, list[ClozeResponse]] = {}
    for stem_id, text in stem_texts.items():
        group = counts[stem_id]
        total = sum(c for _, c, _, _ in group)
        if total < MIN_EXPECTED_RESPONSES:
            warnings.warn(
                f"stem {stem_id!r} has only {total} responses (real norms have >= 100)",
                LowResponseCountWarning,
                stacklevel=2,
            )
        stems.append(SentenceStem(stem_id=stem_id, text=text, n_words=len(text.split())))
        built: list[ClozeResponse] = []
        for response_text, count, prob, lineno in group:
            recomputed = count / total
            if prob is not None and abs(prob - recomputed) > PROB_CHECK_TOLERANCE:
                raise ConsistencyError(
                    f"{path}:{lineno}: cloze_prob {prob} disagrees with "
                    f"count/total = {recomputed} for {response_text!r}"
                )
            built.append(
                ClozeResponse(stem_id=stem_id, text=response_text, count=count, cloze_prob=recomputed)
            )
        responses[stem_id] = built
    return ClozeNorms(stems=stems, responses=responses)


def save_cloze_norms(norms: ClozeNorms, path: str) -> None:
    """Write the canonical 5-column CSV with recomputed probabilities."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
        writer.writerow(EXPECTED_COLUMNS)
        for stem, resp in norms.iter_pairs():
            writer.writerow([stem.stem_id, stem.text, resp.text, resp.count, repr(resp.cloze_prob)])


@dataclass
class TokenizationMap:
    """Precomputed word -> subword-id lists for one tokenizer."""

    entries: dict[str, tuple[int, ...]]
    source_tokenizer: str = "unknown"

    def __post_init__(self) -> None:
        for word, ids in self.entries.items():
            if len(ids) == 0:
                raise ConsistencyError(f"tokenization map entry for {word!r} is empty")


def load_tokenization_map(path: str) -> TokenizationMap:
    entries: dict[str, tuple[int, ...]] = {}
    source = "unknown"
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON record ({e.msg})", path=path, line=lineno) from e
            if lineno == 1 and "word" not in record:
                source = str(record.get("source_tokenizer", "unknown"))
                continue
            try:
                word = record["word"]
                ids = record["ids"]
            except KeyError as e:
                raise ParseError(f"record missing key {e}", path=path, line=lineno) from None
            if not isinstance(ids, list) or not ids or not all(
                isinstance(i, int) and i >= 0 for i in ids
            ):
                raise ParseError("ids must be a non-empty list of nonnegative ints", path=path, line=lineno)
            if word in entries:
                raise DuplicateRecordError(f"{path}:{lineno}: duplicate word {word!r}")
            entries[word] = tuple(ids)
    return TokenizationMap(entries=entries, source_tokenizer=source)


def save_tokenization_map(tokmap: TokenizationMap, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps({"source_tokenizer": tokmap.source_tokenizer}) + "\n")
        for word in sorted(tokmap.entries):
            f.write(json.dumps({"word": word, "ids": list(tokmap.entries[word])}, ensure_ascii=False) + "\n")


def build_tokenization_map(
    spec: TokenizerSpec, words: list[str], leading_space: bool = True
) -> TokenizationMap:
    """Tokenize each word (with a leading space by default) into a map."""
    entries = {
        w: tuple(bpe_encode(spec, (" " + w) if leading_space else w)) for w in words
    }
    return TokenizationMap(entries=entries, source_tokenizer=spec.name)


@dataclass(frozen=True)
class SubwordStats:
    single_token_fraction: float
    mean_subwords: float
    sd_subwords: float


def response_subword_stats(norms: ClozeNorms, tokmap: TokenizationMap) -> SubwordStats:
    """Subword statistics of the human responses.

    The single-token fraction is weighted by response counts (how often a
    token was produced); the mean and population sd of subwords-per-response
    are computed over unique response types, unweighted.
    """
    words = norms.response_words()
    missing = sorted(w for w in words if w not in tokmap.entries)
    if missing:
        shown = ", ".join(repr(w) for w in missing[:20])
        more = "" if len(missing) <= 20 else f" (+{len(missing) - 20} more)"
        raise CoverageError(
            f"{len(missing)} response words missing from tokenization map: {shown}{more}",
            missing=missing,
        )

    total_count = 0
    single_count = 0
    for group in norms.responses.values():
        for resp in group:
            total_count += resp.count
            if len(tokmap.entries[resp.text]) == 1:
                single_count += resp.count

    lengths = [len(tokmap.entries[w]) for w in words]
    mean = math.fsum(lengths) / len(lengths)
    var = math.fsum((x - mean) ** 2 for x in lengths) / len(lengths)
    return SubwordStats(
        single_token_fraction=single_count / total_count,
        mean_subwords=mean,
        sd_subwords=math.sqrt(var),
    )
