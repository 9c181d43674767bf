import json

import numpy as np
import pytest

from clozealign.dumps import (
    DumpHeader,
    EmbeddingDump,
    EmbeddingHeader,
    EmbeddingRecord,
    PredictionDump,
    ResponseEntry,
    StemPrediction,
    load_embedding_dump,
    load_prediction_dump,
    save_embedding_dump,
    save_prediction_dump,
)
from clozealign.errors import ConsistencyError, DataError, ParseError


def _dump() -> PredictionDump:
    header = DumpHeader(
        model_id="toy-1m", n_params=1_000_000, checkpoint_step=1000, dedup=True,
        tokenizer="toy", top_k=3,
    )
    stems = [
        StemPrediction(
            stem_id="s1",
            top=((7, 0.4), (3, 0.3), (9, 0.1)),
            responses=(
                ResponseEntry(text="hive", first_id=7, prob=0.4, rank=1),
                ResponseEntry(text="bee", first_id=3, prob=0.3, rank=2),
            ),
        ),
        StemPrediction(
            stem_id="s2",
            top=((2, 0.5),),
            responses=(ResponseEntry(text="soup", first_id=2, prob=0.5, rank=1),),
        ),
    ]
    return PredictionDump(header=header, stems=stems)


def test_prediction_dump_roundtrip(tmp_path):
    path = str(tmp_path / "dump.jsonl")
    save_prediction_dump(_dump(), path)
    loaded = load_prediction_dump(path)
    assert loaded.header == _dump().header
    assert loaded.stems == _dump().stems


def test_prediction_dump_rejects_unsorted_top(tmp_path):
    path = tmp_path / "dump.jsonl"
    lines = [
        json.dumps({"model_id": "m", "n_params": 1, "checkpoint_step": 0, "dedup": False,
                    "tokenizer": "t", "top_k": 2}),
        json.dumps({"stem_id": "s1", "top": [[1, 0.1], [2, 0.5]],
                    "responses": [{"text": "x", "first_id": 1, "prob": 0.1, "rank": 1}]}),
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(ConsistencyError):
        load_prediction_dump(str(path))


def test_prediction_dump_rejects_excess_mass(tmp_path):
    path = tmp_path / "dump.jsonl"
    lines = [
        json.dumps({"model_id": "m", "n_params": 1, "checkpoint_step": 0, "dedup": False,
                    "tokenizer": "t", "top_k": 2}),
        json.dumps({"stem_id": "s1", "top": [[1, 0.7], [2, 0.6]],
                    "responses": [{"text": "x", "first_id": 1, "prob": 0.7, "rank": 1}]}),
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(ConsistencyError):
        load_prediction_dump(str(path))


def test_prediction_dump_rejects_inconsistent_shared_subword(tmp_path):
    # two responses mapping to the same first subword must agree on prob/rank
    path = tmp_path / "dump.jsonl"
    lines = [
        json.dumps({"model_id": "m", "n_params": 1, "checkpoint_step": 0, "dedup": False,
                    "tokenizer": "t", "top_k": 1}),
        json.dumps({"stem_id": "s1", "top": [[1, 0.5]],
                    "responses": [
                        {"text": "was", "first_id": 1, "prob": 0.5, "rank": 1},
                        {"text": "wasp", "first_id": 1, "prob": 0.4, "rank": 2},
                    ]}),
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(ConsistencyError):
        load_prediction_dump(str(path))


def test_prediction_dump_rejects_bad_rank_and_prob(tmp_path):
    for entry in (
        {"text": "x", "first_id": 1, "prob": 0.0, "rank": 1},
        {"text": "x", "first_id": 1, "prob": 0.5, "rank": 0},
    ):
        path = tmp_path / "dump.jsonl"
        lines = [
            json.dumps({"model_id": "m", "n_params": 1, "checkpoint_step": 0, "dedup": False,
                        "tokenizer": "t", "top_k": 1}),
            json.dumps({"stem_id": "s1", "top": [[1, 0.5]], "responses": [entry]}),
        ]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(ConsistencyError):
            load_prediction_dump(str(path))


def test_prediction_dump_requires_header_keys(tmp_path):
    path = tmp_path / "dump.jsonl"
    path.write_text(json.dumps({"model_id": "m"}) + "\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_prediction_dump(str(path))


def test_prediction_dump_parses_cleanly_with_no_warnings(tmp_path, recwarn):
    path = str(tmp_path / "dump.jsonl")
    save_prediction_dump(_dump(), path)
    load_prediction_dump(path)
    assert len(recwarn) == 0


def _emb_dump(dim=3) -> EmbeddingDump:
    rng = np.random.default_rng(0)
    vectors = rng.normal(size=(4, dim)).astype(np.float32)
    return EmbeddingDump(
        header=EmbeddingHeader(
            reference_model="ref-2b", layer="last", dim=dim, dataset="human", blob="emb.bin"
        ),
        records=[
            EmbeddingRecord("s1", "hive", 0, 1),
            EmbeddingRecord("s1", "bee", 1, 1),
            EmbeddingRecord("s2", "soup", 2, 2),
            EmbeddingRecord("s2", "hive", 3, 1),
        ],
        vectors=vectors,
    )


def test_embedding_dump_roundtrip(tmp_path):
    index = str(tmp_path / "emb.jsonl")
    dump = _emb_dump()
    save_embedding_dump(dump, index)
    loaded = load_embedding_dump(index)
    assert loaded.header == dump.header
    assert loaded.records == dump.records
    assert np.array_equal(loaded.vectors, dump.vectors)


def test_embedding_dump_reference_model_enforced(tmp_path):
    index = str(tmp_path / "emb.jsonl")
    save_embedding_dump(_emb_dump(), index)
    with pytest.raises(DataError):
        load_embedding_dump(index, expected_reference_model="some-other-model")


def test_embedding_dump_offset_bounds(tmp_path):
    index = tmp_path / "emb.jsonl"
    dump = _emb_dump()
    save_embedding_dump(dump, str(index))
    lines = index.read_text(encoding="utf-8").splitlines()
    lines.append(json.dumps({"stem_id": "s3", "word": "x", "offset": 99, "n_subwords": 1}))
    index.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(ConsistencyError):
        load_embedding_dump(str(index))


def test_embedding_blob_magic_checked(tmp_path):
    index = tmp_path / "emb.jsonl"
    dump = _emb_dump()
    save_embedding_dump(dump, str(index))
    (tmp_path / "emb.bin").write_bytes(b"WRONGMAG" + b"\x00" * 16)
    with pytest.raises(ParseError):
        load_embedding_dump(str(index))


def test_embedding_dim_mismatch_detected(tmp_path):
    index = tmp_path / "emb.jsonl"
    dump = _emb_dump()
    save_embedding_dump(dump, str(index))
    lines = index.read_text(encoding="utf-8").splitlines()
    header = json.loads(lines[0])
    header["dim"] = 5
    lines[0] = json.dumps(header)
    index.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(ConsistencyError):
        load_embedding_dump(str(index))
