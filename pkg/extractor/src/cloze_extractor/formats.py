"""Writers for the clozealign wire formats and a reader for the norms CSV.

These are independent implementations of the downstream toolkit's external
interfaces; conformance is checked by parsing the emitted files with the
downstream readers in the test suite.

Prediction dump: JSONL, header line then one record per stem.
Embedding dump: JSONL index (header line with a `blob` filename, then one
record per pooled vector) plus a binary blob: magic "EMBVEC01", u64 dim,
u64 count, float32 little-endian, row major.
Tokenization map: JSONL, header line naming the source tokenizer, then
``{"word": ..., "ids": [...]}`` records sorted by word.
"""

from __future__ import annotations

import csv
import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

EMB_MAGIC = b"EMBVEC01"

NORMS_COLUMNS = ["stem_id", "stem_text", "response_text", "response_count", "cloze_prob"]


@dataclass
class NormStem:
    stem_id: str
    text: str
    responses: list[tuple[str, int]] = field(default_factory=list)


def read_norms_csv(path: str) -> list[NormStem]:
    """Read stems and their response words from the shared norms schema."""
    stems: dict[str, NormStem] = {}
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header not in (NORMS_COLUMNS, NORMS_COLUMNS[:4]):
            raise ValueError(f"{path}: unexpected norms header {header!r}")
        for row in reader:
            if not row:
                continue
            stem_id, text, response = row[0], row[1], row[2]
            count = int(row[3])
            stem = stems.setdefault(stem_id, NormStem(stem_id=stem_id, text=text))
            stem.responses.append((response, count))
    return list(stems.values())


def write_prediction_dump(
    path: str,
    *,
    model_id: str,
    n_params: int,
    checkpoint_step: int,
    dedup: bool,
    tokenizer_id: str,
    top_k: int,
    stem_records: list[dict],
) -> None:
    header = {
        "model_id": model_id,
        "n_params": n_params,
        "checkpoint_step": checkpoint_step,
        "dedup": dedup,
        "tokenizer": tokenizer_id,
        "top_k": top_k,
        # records the subword convention used for response probabilities
        "leading_space": True,
    }
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(header) + "\n")
        for record in stem_records:
            f.write(json.dumps(record, ensure_ascii=False) + "\n")


def write_embedding_dump(
    index_path: str,
    *,
    reference_model: str,
    layer: str,
    dataset: str,
    records: list[dict],
    vectors: np.ndarray,
) -> None:
    blob_name = os.path.splitext(os.path.basename(index_path))[0] + ".bin"
    blob_path = os.path.join(os.path.dirname(index_path) or ".", blob_name)
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    with open(blob_path, "wb") as f:
        f.write(EMB_MAGIC)
        f.write(struct.pack("<QQ", vectors.shape[1], vectors.shape[0]))
        f.write(vectors.tobytes())
    header = {
        "reference_model": reference_model,
        "layer": layer,
        "dim": int(vectors.shape[1]),
        "dataset": dataset,
        "blob": blob_name,
    }
    with open(index_path, "w", encoding="utf-8") as f:
        f.write(json.dumps(header) + "\n")
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False) + "\n")


def write_tokenization_map(path: str, entries: dict[str, list[int]], source_tokenizer: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps({"source_tokenizer": source_tokenizer}) + "\n")
        for word in sorted(entries):
            f.write(json.dumps({"word": word, "ids": list(entries[word])}, ensure_ascii=False) + "\n")
