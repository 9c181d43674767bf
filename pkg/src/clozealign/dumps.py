"""Wire formats for model prediction dumps and embedding dumps.

Prediction dump (JSONL): the first line is a header object
``{"model_id", "n_params", "checkpoint_step", "dedup", "tokenizer",
"top_k"}``; each following line is one stem record
``{"stem_id", "top": [[token_id, prob], ...],
"responses": [{"text", "first_id", "prob", "rank"}, ...]}``.

Embedding dump: a JSONL index whose first line is a header
``{"reference_model", "layer", "dim", "dataset", "blob"}`` followed by
records ``{"stem_id", "word", "offset", "n_subwords"}`` where offset is the
0-based row into the binary blob. Blob layout (little endian):
magic "EMBVEC01" | u64 dim | u64 count | count*dim float32, row major.
"""

from __future__ import annotations

import json
import math
import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DataError, ParseError

EMB_MAGIC = b"EMBVEC01"

PROB_MASS_TOLERANCE = 1e-6


@dataclass(frozen=True)
class DumpHeader:
    model_id: str
    n_params: int
    checkpoint_step: int
    dedup: bool
    tokenizer: str
    top_k: int


@dataclass(frozen=True)
class ResponseEntry:
    text: str
    first_id: int
    prob: float
    rank: int


@dataclass(frozen=True)
class StemPrediction:
    stem_id: str
    top: tuple[tuple[int, float], ...]
    responses: tuple[ResponseEntry, ...]


@dataclass
class PredictionDump:
    header: DumpHeader
    stems: list[StemPrediction]

    def by_stem(self) -> dict[str, StemPrediction]:
        return {s.stem_id: s for s in self.stems}


def _validate_stem(stem: StemPrediction, path: str, lineno: int) -> None:
    probs = [p for _, p in stem.top]
    if any(not (0.0 < p <= 1.0) for p in probs):
        raise ConsistencyError(f"{path}:{lineno}: top-k probabilities must be in (0, 1]")
    if any(probs[i] < probs[i + 1] for i in range(len(probs) - 1)):
        raise ConsistencyError(f"{path}:{lineno}: top-k list is not sorted descending")
    if math.fsum(probs) > 1.0 + PROB_MASS_TOLERANCE:
        raise ConsistencyError(f"{path}:{lineno}: top-k probability mass exceeds 1")
    by_id: dict[int, tuple[float, int]] = {}
    for entry in stem.responses:
        if not (0.0 < entry.prob <= 1.0):
            raise ConsistencyError(f"{path}:{lineno}: response probability must be in (0, 1]")
        if entry.rank < 1:
            raise ConsistencyError(f"{path}:{lineno}: response rank must be >= 1")
        if entry.first_id < 0:
            raise ConsistencyError(f"{path}:{lineno}: first_id must be nonnegative")
        prev = by_id.get(entry.first_id)
        if prev is not None and prev != (entry.prob, entry.rank):
            raise ConsistencyError(
                f"{path}:{lineno}: responses sharing first subword id {entry.first_id} "
                "carry different probabilities or ranks"
            )
        by_id[entry.first_id] = (entry.prob, entry.rank)


def load_prediction_dump(path: str) -> PredictionDump:
    with open(path, encoding="utf-8") as f:
        lines = [(i, line) for i, line in enumerate(f, start=1) if line.strip()]
    if not lines:
        raise ParseError("prediction dump is empty", path=path)

    def parse(lineno: int, line: str) -> dict:
        try:
            return json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON record ({e.msg})", path=path, line=lineno) from e

    head_no, head_line = lines[0]
    raw = parse(head_no, head_line)
    try:
        header = DumpHeader(
            model_id=str(raw["model_id"]),
            n_params=int(raw["n_params"]),
            checkpoint_step=int(raw["checkpoint_step"]),
            dedup=bool(raw["dedup"]),
            tokenizer=str(raw["tokenizer"]),
            top_k=int(raw["top_k"]),
        )
    except KeyError as e:
        raise ParseError(f"dump header missing key {e}", path=path, line=head_no) from None
    if header.n_params <= 0:
        raise ConsistencyError(f"{path}: n_params must be positive")

    stems: list[StemPrediction] = []
    seen: set[str] = set()
    for lineno, line in lines[1:]:
        raw = parse(lineno, line)
        try:
            stem = StemPrediction(
                stem_id=str(raw["stem_id"]),
                top=tuple((int(t), float(p)) for t, p in raw["top"]),
                responses=tuple(
                    ResponseEntry(
                        text=str(r["text"]),
                        first_id=int(r["first_id"]),
                        prob=float(r["prob"]),
                        rank=int(r["rank"]),
                    )
                    for r in raw["responses"]
                ),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"malformed stem record ({e})", path=path, line=lineno) from None
        if stem.stem_id in seen:
            raise ConsistencyError(f"{path}:{lineno}: duplicate stem {stem.stem_id!r}")
        seen.add(stem.stem_id)
        _validate_stem(stem, path, lineno)
        stems.append(stem)
    if not stems:
        raise ParseError("prediction dump has a header but no stem records", path=path)
    return PredictionDump(header=header, stems=stems)


def save_prediction_dump(dump: PredictionDump, path: str) -> None:
    h = dump.header
    with open(path, "w", encoding="utf-8") as f:
        f.write(
            json.dumps(
                {
                    "model_id": h.model_id,
                    "n_params": h.n_params,
                    "checkpoint_step": h.checkpoint_step,
                    "dedup": h.dedup,
                    "tokenizer": h.tokenizer,
                    "top_k": h.top_k,
                }
            )
            + "\n"
        )
        for stem in dump.stems:
            record = {
                "stem_id": stem.stem_id,
                "top": [[t, p] for t, p in stem.top],
                "responses": [
                    {"text": r.text, "first_id": r.first_id, "prob": r.prob, "rank": r.rank}
                    for r in stem.responses
                ],
            }
            f.write(json.dumps(record, ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class EmbeddingHeader:
    reference_model: str
    layer: str
    dim: int
    dataset: str
    blob: str


@dataclass(frozen=True)
class EmbeddingRecord:
    stem_id: str
    word: str
    offset: int
    n_subwords: int


@dataclass
class EmbeddingDump:
    header: EmbeddingHeader
    records: list[EmbeddingRecord]
    vectors: np.ndarray  # (count, dim) float32

    def vector(self, record: EmbeddingRecord) -> np.ndarray:
        return self.vectors[record.offset]


def save_embedding_dump(dump: EmbeddingDump, index_path: str) -> None:
    blob_path = os.path.join(os.path.dirname(index_path) or ".", dump.header.blob)
    vectors = np.ascontiguousarray(dump.vectors, dtype="<f4")
    with open(blob_path, "wb") as f:
        f.write(EMB_MAGIC)
        f.write(struct.pack("<QQ", vectors.shape[1], vectors.shape[0]))
        f.write(vectors.tobytes())
    h = dump.header
    with open(index_path, "w", encoding="utf-8") as f:
        f.write(
            json.dumps(
                {
                    "reference_model": h.reference_model,
                    "layer": h.layer,
                    "dim": h.dim,
                    "dataset": h.dataset,
                    "blob": h.blob,
                }
            )
            + "\n"
        )
        for r in dump.records:
            f.write(
                json.dumps(
                    {"stem_id": r.stem_id, "word": r.word, "offset": r.offset, "n_subwords": r.n_subwords},
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_embedding_dump(index_path: str, expected_reference_model: str | None = None) -> EmbeddingDump:
    with open(index_path, encoding="utf-8") as f:
        lines = [(i, line) for i, line in enumerate(f, start=1) if line.strip()]
    if not lines:
        raise ParseError("embedding index is empty", path=index_path)
    try:
        raw = json.loads(lines[0][1])
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON header ({e.msg})", path=index_path, line=lines[0][0]) from e
    try:
        header = EmbeddingHeader(
            reference_model=str(raw["reference_model"]),
            layer=str(raw["layer"]),
            dim=int(raw["dim"]),
            dataset=str(raw["dataset"]),
            blob=str(raw["blob"]),
        )
    except KeyError as e:
        raise ParseError(f"embedding header missing key {e}", path=index_path) from None
    if expected_reference_model is not None and header.reference_model != expected_reference_model:
        raise DataError(
            f"embedding dump was produced by {header.reference_model!r}, "
            f"expected {expected_reference_model!r}"
        )

    blob_path = os.path.join(os.path.dirname(index_path) or ".", header.blob)
    with open(blob_path, "rb") as f:
        magic = f.read(8)
        if magic != EMB_MAGIC:
            raise ParseError(f"bad magic {magic!r}; not an embedding blob", path=blob_path)
        dim, count = struct.unpack("<QQ", f.read(16))
        if dim != header.dim:
            raise ConsistencyError(
                f"{blob_path}: blob dimension {dim} disagrees with index header {header.dim}"
            )
        payload = f.read()
    expected_bytes = dim * count * 4
    if len(payload) != expected_bytes:
        raise ParseError(
            f"blob payload is {len(payload)} bytes, expected {expected_bytes}", path=blob_path
        )
    vectors = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    if not np.isfinite(vectors).all():
        raise ConsistencyError(f"{blob_path}: embedding vectors must be finite")

    records: list[EmbeddingRecord] = []
    for lineno, line in lines[1:]:
        try:
            raw = json.loads(line)
            record = EmbeddingRecord(
                stem_id=str(raw["stem_id"]),
                word=str(raw["word"]),
                offset=int(raw["offset"]),
                n_subwords=int(raw["n_subwords"]),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise ParseError(f"malformed index record ({e})", path=index_path, line=lineno) from None
        if not 0 <= record.offset < count:
            raise ConsistencyError(f"{index_path}:{lineno}: offset {record.offset} outside blob")
        if record.n_subwords < 1:
            raise ConsistencyError(f"{index_path}:{lineno}: n_subwords must be >= 1")
        records.append(record)
    if not records:
        raise ParseError("embedding index has a header but no records", path=index_path)
    return EmbeddingDump(header=header, records=records, vectors=vectors)
