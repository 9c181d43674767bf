"""Command-line surface.

Exit codes: 0 success, 2 configuration error, 3 data/format error,
4 degenerate-statistics error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .bpe import load_tokenizer_spec
from .dumps import load_embedding_dump, load_prediction_dump
from .errors import ConfigurationError, DataError, DegenerateError
from .ngram import (
    BackoffParams,
    count_documents,
    load_counts,
    save_counts,
    score_stems,
    tokenize_corpus_file,
)
from .norms import (
    build_tokenization_map,
    load_cloze_norms,
    load_tokenization_map,
    response_subword_stats,
    save_cloze_norms,
)
from .report import (
    ReportRow,
    config_from_file,
    emit_report,
    human_topk_sets,
    join_dump,
    load_report,
    model_topk_sets,
    ppmi_space,
    run_sweep,
    substream_seed,
    write_calibration_csv,
    write_correlation_csv,
)
from .semspace import (
    cosine_similarity_matrix,
    intersect_spaces,
    mean_pool_embeddings,
    neighborhood_overlap,
    rsa_spearman,
)
from .stats import (
    PairedSeries,
    bootstrap_ci,
    calibration_curve,
    pearson,
    spearman,
    within_stem_ranks,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DEGENERATE = 4


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="global random seed (u64)")
    parser.add_argument("--config", default=None, help="key/value config file")
    parser.add_argument("--out", default=None, help="output path")
    parser.add_argument("--format", choices=["csv", "jsonl"], default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clozealign",
        description="Quantify alignment between model next-token predictions and human cloze norms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-norms", help="validate norms and emit the canonical CSV")
    p.add_argument("--norms", required=True)
    p.add_argument("--tokmap", default=None, help="optional tokenization map for subword stats")
    _add_common(p)

    p = sub.add_parser("ngram-count", help="count n-grams over a line-delimited document corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--order", type=int, default=5)
    p.add_argument("--vocab")
    p.add_argument("--merges")
    p.add_argument("--pretokenized", action="store_true", help="corpus lines are id sequences")
    _add_common(p)

    p = sub.add_parser("ngram-score", help="Stupid Backoff / unigram scores per (stem, response)")
    p.add_argument("--counts", required=True)
    p.add_argument("--norms", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--merges", required=True)
    p.add_argument("--tokmap", default=None)
    p.add_argument("--order", type=int, default=5)
    p.add_argument("--backoff-alpha", type=float, default=0.4)
    _add_common(p)

    for name, help_text in (
        ("align-prob", "probability-scale correlations between cloze and model"),
        ("align-rank", "rank-scale correlation between cloze and model"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--norms", required=True)
        p.add_argument("--dump", required=True)
        p.add_argument("--tokmap", default=None)
        p.add_argument("--n-resamples", type=int, default=1000)
        _add_common(p)

    p = sub.add_parser("calibrate", help="binned calibration curve of model vs cloze probability")
    p.add_argument("--norms", required=True)
    p.add_argument("--dump", required=True)
    p.add_argument("--tokmap", default=None)
    p.add_argument("--n-bins", type=int, default=10)
    _add_common(p)

    p = sub.add_parser("rsa-ppmi", help="RSA between PPMI+PCA spaces of human and model top-k")
    p.add_argument("--norms", required=True)
    p.add_argument("--dump", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--merges", required=True)
    p.add_argument("--k", type=int, default=40)
    p.add_argument("--d", default="10,25,50,100,200", help="comma-separated PCA dimensionalities")
    _add_common(p)

    p = sub.add_parser("rsa-embed", help="RSA between two pooled-embedding spaces")
    p.add_argument("--embed-a", required=True)
    p.add_argument("--embed-b", required=True)
    _add_common(p)

    p = sub.add_parser("overlap", help="k-NN neighborhood overlap between two embedding spaces")
    p.add_argument("--embed-a", required=True)
    p.add_argument("--embed-b", required=True)
    p.add_argument("--knn-k", default="20", help="comma-separated neighborhood sizes")
    _add_common(p)

    p = sub.add_parser("sweep", help="run all configured analyses over all configured dumps")
    _add_common(p)

    p = sub.add_parser("report", help="re-emit an existing report in another format")
    p.add_argument("--in", dest="in_path", required=True)
    _add_common(p)

    return parser


def _require(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if getattr(args, name, None) is None:
            raise ConfigurationError(f"--{name.replace('_', '-')} is required for this command")


def _tokmap_for(args, norms):
    if args.tokmap is not None:
        return load_tokenization_map(args.tokmap)
    vocab = getattr(args, "vocab", None)
    merges = getattr(args, "merges", None)
    if vocab and merges:
        spec = load_tokenizer_spec(vocab, merges)
        return build_tokenization_map(spec, norms.response_words())
    return None


def _joined(args):
    norms = load_cloze_norms(args.norms)
    dump = load_prediction_dump(args.dump)
    tokmap = _tokmap_for(args, norms)
    if tokmap is None:
        from .norms import TokenizationMap

        tokmap = TokenizationMap(entries={}, source_tokenizer="unknown")
    return norms, dump, join_dump(norms, dump, tokmap)


def _correlation_row(name, joined, x, y, seed, n_resamples) -> ReportRow:
    h = joined.dump.header
    series = PairedSeries(x, y)
    stat = pearson if name.startswith("pearson") else spearman
    value = stat(series)
    ci = bootstrap_ci(stat, series, n_resamples=n_resamples, seed=substream_seed(seed, name, h.model_id))
    return ReportRow(
        analysis=name,
        model_id=h.model_id,
        n_params=h.n_params,
        checkpoint_step=h.checkpoint_step,
        dedup=h.dedup,
        statistic=value,
        ci_low=min(ci.low, value),
        ci_high=max(ci.high, value),
        n=len(series),
    )


def cmd_ingest_norms(args) -> int:
    import csv as _csv

    norms = load_cloze_norms(args.norms)
    total = sum(r.count for g in norms.responses.values() for r in g)
    print(f"stems: {len(norms.stems)}")
    print(f"responses: {norms.n_responses} ({total} productions)")
    lengths = [s.n_words for s in norms.stems]
    print(f"preamble words: min {min(lengths)}, max {max(lengths)}")
    if args.tokmap:
        stats = response_subword_stats(norms, load_tokenization_map(args.tokmap))
        print(f"single_token_fraction: {stats.single_token_fraction:.6g}")
        print(f"mean_subwords: {stats.mean_subwords:.6g}")
        print(f"sd_subwords: {stats.sd_subwords:.6g}")
    if args.out:
        save_cloze_norms(norms, args.out)
        # per-stem length/total sidecar so downstream analyses can stratify
        stem_path = os.path.splitext(args.out)[0] + ".stems.csv"
        with open(stem_path, "w", encoding="utf-8", newline="") as f:
            writer = _csv.writer(f, lineterminator="\n")
            writer.writerow(["stem_id", "n_words", "total_count"])
            for stem in norms.stems:
                stem_total = sum(r.count for r in norms.responses[stem.stem_id])
                writer.writerow([stem.stem_id, stem.n_words, stem_total])
        print(f"wrote canonical norms to {args.out} (stem summary: {stem_path})")
    return EXIT_OK


def cmd_ngram_count(args) -> int:
    _require(args, "out")
    if args.pretokenized:
        docs = tokenize_corpus_file(args.corpus, pretokenized=True)
    else:
        _require(args, "vocab", "merges")
        spec = load_tokenizer_spec(args.vocab, args.merges)
        docs = tokenize_corpus_file(args.corpus, spec)
    counts = count_documents(docs, args.order)
    save_counts(counts, args.out)
    sizes = ", ".join(f"{k + 1}-grams: {len(t)}" for k, t in enumerate(counts.tables))
    print(f"counted {counts.total_tokens} tokens ({sizes})")
    print(f"wrote counts to {args.out}")
    return EXIT_OK


def cmd_ngram_score(args) -> int:
    _require(args, "out")
    import csv as _csv

    norms = load_cloze_norms(args.norms)
    spec = load_tokenizer_spec(args.vocab, args.merges)
    tokmap = _tokmap_for(args, norms)
    counts = load_counts(args.counts)
    params = BackoffParams(alpha=args.backoff_alpha, order=args.order)
    rows = score_stems(counts, norms, tokmap, spec, params)
    with open(args.out, "w", encoding="utf-8", newline="") as f:
        writer = _csv.writer(f, lineterminator="\n")
        writer.writerow(["stem_id", "response", "count", "cloze_prob", "backoff_score", "unigram_score"])
        for r in rows:
            writer.writerow(
                [r.stem_id, r.response, r.count, f"{r.cloze_prob:.6g}", f"{r.backoff_score:.6g}", f"{r.unigram_score:.6g}"]
            )
    print(f"wrote {len(rows)} scores to {args.out}")
    return EXIT_OK


def cmd_align_prob(args) -> int:
    _require(args, "seed", "out")
    _, _, joined = _joined(args)
    rows = [
        _correlation_row("pearson_prob", joined, joined.cloze, joined.model_prob, args.seed, args.n_resamples),
        _correlation_row("spearman_prob", joined, joined.cloze, joined.model_prob, args.seed, args.n_resamples),
    ]
    write_correlation_csv(rows, args.out)
    for r in rows:
        print(f"{r.analysis}: {r.statistic:.6g} [{r.ci_low:.6g}, {r.ci_high:.6g}] n={r.n}")
    return EXIT_OK


def cmd_align_rank(args) -> int:
    _require(args, "seed", "out")
    _, _, joined = _joined(args)
    cloze_ranks = np.empty(len(joined.cloze))
    for _, idx in joined.groups:
        cloze_ranks[idx] = within_stem_ranks(joined.cloze[idx])
    row = _correlation_row("spearman_rank", joined, cloze_ranks, joined.model_rank, args.seed, args.n_resamples)
    write_correlation_csv([row], args.out)
    print(f"{row.analysis}: {row.statistic:.6g} [{row.ci_low:.6g}, {row.ci_high:.6g}] n={row.n}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    _require(args, "seed", "out")
    _, _, joined = _joined(args)
    curve = calibration_curve(PairedSeries(joined.cloze, joined.model_prob), args.n_bins, seed=args.seed)
    write_calibration_csv(curve, args.out)
    print(f"wrote {len(curve.bins)} calibration bins to {args.out}")
    return EXIT_OK


def cmd_rsa_ppmi(args) -> int:
    _require(args, "out")
    norms = load_cloze_norms(args.norms)
    dump = load_prediction_dump(args.dump)
    spec = load_tokenizer_spec(args.vocab, args.merges)
    human_sets = human_topk_sets(norms, args.k)
    model_sets = model_topk_sets(dump, spec, args.k)
    rows = []
    for d in [int(v) for v in str(args.d).split(",")]:
        human_space = ppmi_space(human_sets, d, source="human")
        model_space = ppmi_space(model_sets, d, source=dump.header.model_id)
        a, b = intersect_spaces(human_space, model_space)
        value = rsa_spearman(cosine_similarity_matrix(a), cosine_similarity_matrix(b))
        h = dump.header
        rows.append(
            ReportRow(
                analysis=f"rsa_ppmi_d{d}",
                model_id=h.model_id,
                n_params=h.n_params,
                checkpoint_step=h.checkpoint_step,
                dedup=h.dedup,
                statistic=value,
                ci_low=None,
                ci_high=None,
                n=len(a.words),
            )
        )
        print(f"rsa_ppmi_d{d}: {value:.6g} over {len(a.words)} shared words")
    write_correlation_csv(rows, args.out)
    return EXIT_OK


def _embedding_spaces(args):
    dump_a = load_embedding_dump(args.embed_a)
    dump_b = load_embedding_dump(args.embed_b, expected_reference_model=dump_a.header.reference_model)
    return intersect_spaces(mean_pool_embeddings(dump_a), mean_pool_embeddings(dump_b))


def cmd_rsa_embed(args) -> int:
    a, b = _embedding_spaces(args)
    value = rsa_spearman(cosine_similarity_matrix(a), cosine_similarity_matrix(b))
    print(f"rsa_embed: {value:.6g} over {len(a.words)} shared words")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(f"rsa_embed,{value:.6g},{len(a.words)}\n")
    return EXIT_OK


def cmd_overlap(args) -> int:
    a, b = _embedding_spaces(args)
    lines = []
    for k in [int(v) for v in str(args.knn_k).split(",")]:
        value = neighborhood_overlap(a, b, k)
        print(f"overlap_k{k}: {value:.6g} over {len(a.words)} shared words")
        lines.append(f"overlap_k{k},{value:.6g},{len(a.words)}\n")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.writelines(lines)
    return EXIT_OK


def cmd_sweep(args) -> int:
    _require(args, "config", "out")
    if not os.path.exists(args.config):
        raise ConfigurationError(f"config file does not exist: {args.config}")
    config = config_from_file(args.config, seed_override=args.seed)
    report = run_sweep(config)
    emit_report(report, args.out, format=args.format)
    print(f"wrote {len(report.rows)} report rows to {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    _require(args, "out")
    report = load_report(args.in_path)
    emit_report(report, args.out, format=args.format)
    print(f"re-emitted {len(report.rows)} rows to {args.out}")
    return EXIT_OK


_HANDLERS = {
    "ingest-norms": cmd_ingest_norms,
    "ngram-count": cmd_ngram_count,
    "ngram-score": cmd_ngram_score,
    "align-prob": cmd_align_prob,
    "align-rank": cmd_align_rank,
    "calibrate": cmd_calibrate,
    "rsa-ppmi": cmd_rsa_ppmi,
    "rsa-embed": cmd_rsa_embed,
    "overlap": cmd_overlap,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", None) is not None and args.seed < 0:
        print("error: --seed must be nonnegative", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _HANDLERS[args.command](args)
    except ConfigurationError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except DegenerateError as e:
        print(f"degenerate statistics: {e}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
