"""Extraction CLI.

    clozealign-extract --model <id-or-path> --step <n> --dedup <bool> \
        --norms <csv> --top-k <n> --out <dir>

Writes into the output directory:
    predictions.jsonl          prediction dump (header + one record per stem)
    tokmap.jsonl               tokenization map of all response words
    embed_human.jsonl/.bin     pooled embeddings of the human responses
    embed_model.jsonl/.bin     pooled embeddings of the model's top completions
"""

from __future__ import annotations

import argparse
import os
import sys

from .extract import (
    decode_top_words,
    extract_embeddings,
    extract_predictions,
    emit_tokenization_map,
    load_model,
)
from .formats import (
    read_norms_csv,
    write_embedding_dump,
    write_prediction_dump,
    write_tokenization_map,
)


def _bool(value: str) -> bool:
    if value.lower() in ("true", "1", "yes"):
        return True
    if value.lower() in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {value!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clozealign-extract", description=__doc__)
    parser.add_argument("--model", required=True, help="checkpoint hub id or local path")
    parser.add_argument("--step", type=int, required=True, help="checkpoint training step")
    parser.add_argument("--dedup", type=_bool, required=True, help="trained on deduplicated data")
    parser.add_argument("--norms", required=True, help="completion norms CSV")
    parser.add_argument("--top-k", type=int, default=200)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--model-id", default=None, help="model id recorded in headers")
    parser.add_argument("--tokenizer-id", default=None, help="tokenizer id recorded in headers")
    parser.add_argument("--embed-top-k", type=int, default=40,
                        help="model completions per stem to embed")
    parser.add_argument("--no-embeddings", action="store_true")
    parser.add_argument("--layer", default="last")
    parser.add_argument("--device", default="cpu")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    os.makedirs(args.out, exist_ok=True)

    lm = load_model(args.model, device=args.device, model_id=args.model_id)
    tokenizer_id = args.tokenizer_id or lm.model_id
    stems = read_norms_csv(args.norms)
    print(f"loaded {lm.model_id} ({lm.n_params} parameters), {len(stems)} stems", file=sys.stderr)

    records, skipped = extract_predictions(lm, stems, args.top_k)
    if skipped:
        print(f"skipped {len(skipped)} stems over the context window", file=sys.stderr)
    dump_path = os.path.join(args.out, "predictions.jsonl")
    write_prediction_dump(
        dump_path,
        model_id=lm.model_id,
        n_params=lm.n_params,
        checkpoint_step=args.step,
        dedup=args.dedup,
        tokenizer_id=tokenizer_id,
        top_k=args.top_k,
        stem_records=records,
    )

    words = sorted({word for stem in stems for word, _ in stem.responses})
    write_tokenization_map(
        os.path.join(args.out, "tokmap.jsonl"), emit_tokenization_map(lm, words), tokenizer_id
    )

    if not args.no_embeddings:
        kept = {r["stem_id"] for r in records}
        live_stems = [s for s in stems if s.stem_id in kept]
        human = {s.stem_id: [w for w, _ in s.responses] for s in live_stems}
        emb_records, vectors, _ = extract_embeddings(lm, live_stems, human)
        write_embedding_dump(
            os.path.join(args.out, "embed_human.jsonl"),
            reference_model=lm.model_id,
            layer=args.layer,
            dataset="human",
            records=emb_records,
            vectors=vectors,
        )
        by_stem = {r["stem_id"]: r for r in records}
        model_words = {
            s.stem_id: decode_top_words(lm, by_stem[s.stem_id], args.embed_top_k)
            for s in live_stems
        }
        emb_records, vectors, _ = extract_embeddings(lm, live_stems, model_words)
        write_embedding_dump(
            os.path.join(args.out, "embed_model.jsonl"),
            reference_model=lm.model_id,
            layer=args.layer,
            dataset=lm.model_id,
            records=emb_records,
            vectors=vectors,
        )

    print(f"wrote extraction artifacts to {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
