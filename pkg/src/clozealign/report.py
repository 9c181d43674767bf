"""Sweep orchestration over prediction dumps and plot-ready report emission.

A run config is a key/value text file (``key = value``, ``#`` comments,
paths relative to the config file). ``dump`` and ``embeddings`` may repeat;
``analyses``, ``d`` and ``knn_k`` accept comma-separated lists.

Every randomized analysis derives its substream from (seed, analysis name,
model id), so adding analyses or dumps never perturbs existing numbers and
identical configs produce byte-identical reports.
"""

from __future__ import annotations

import csv
import json
import os
import zlib
from dataclasses import dataclass, field

import numpy as np

from .bpe import TokenizerSpec, bpe_decode, load_tokenizer_spec
from .dumps import EmbeddingDump, PredictionDump, load_embedding_dump, load_prediction_dump
from .errors import (
    CompatibilityError,
    ConfigurationError,
    CoverageError,
    ParseError,
)
from .ngram import (
    BackoffParams,
    StemResponseScore,
    count_documents,
    load_counts,
    score_stems,
    tokenize_corpus_file,
)
from .norms import ClozeNorms, TokenizationMap, build_tokenization_map, load_cloze_norms, load_tokenization_map
from .semspace import (
    cooccurrence_counts,
    cosine_similarity_matrix,
    intersect_spaces,
    mean_pool_embeddings,
    neighborhood_overlap,
    pca_project,
    ppmi,
    row_normalize,
    rsa_spearman,
    topk_responses,
)
from .stats import (
    PairedSeries,
    bootstrap_ci,
    logit,
    luce_renormalize,
    ols_fit,
    pearson,
    spearman,
    within_stem_ranks,
)

KNOWN_ANALYSES = ("prob", "logit", "luce", "rank", "ngram", "rsa_ppmi", "rsa_embed", "overlap")

REPORT_COLUMNS = [
    "analysis",
    "model_id",
    "n_params",
    "checkpoint_step",
    "dedup",
    "statistic",
    "ci_low",
    "ci_high",
    "n",
]

CORRELATION_COLUMNS = ["analysis", "model_id", "checkpoint", "dedup", "rho", "ci_low", "ci_high", "n"]

CALIBRATION_COLUMNS = ["bin_center", "mean_model_prob", "ci_low", "ci_high", "n"]

_REPEATABLE_KEYS = {"dump", "embeddings"}

_DEFAULTS = {
    "k": "40",
    "d": "100",
    "knn_k": "20",
    "n_bins": "10",
    "alpha": "1e-6",
    "backoff_alpha": "0.4",
    "order": "5",
    "n_resamples": "1000",
    "analyses": "prob,rank",
    "tokenizer_id": "unknown",
}


@dataclass
class RunConfig:
    norms: str
    vocab: str
    merges: str
    seed: int
    tokmap: str | None = None
    corpus: str | None = None
    counts: str | None = None
    dumps: list[str] = field(default_factory=list)
    embeddings: list[str] = field(default_factory=list)
    analyses: list[str] = field(default_factory=lambda: ["prob", "rank"])
    k: int = 40
    d_values: list[int] = field(default_factory=lambda: [100])
    knn_values: list[int] = field(default_factory=lambda: [20])
    n_bins: int = 10
    alpha: float = 1e-6
    backoff_alpha: float = 0.4
    order: int = 5
    n_resamples: int = 1000
    tokenizer_id: str = "unknown"

    def validate(self) -> None:
        for name in self.analyses:
            if name not in KNOWN_ANALYSES:
                raise ConfigurationError(
                    f"unknown analysis {name!r}; known: {', '.join(KNOWN_ANALYSES)}"
                )
        paths = [self.norms, self.vocab, self.merges, self.tokmap, self.corpus, self.counts]
        paths += self.dumps + self.embeddings
        for path in paths:
            if path is not None and not os.path.exists(path):
                raise ConfigurationError(f"referenced path does not exist: {path}")
        if not self.dumps:
            raise ConfigurationError("sweep requires at least one dump")
        if "ngram" in self.analyses and self.corpus is None and self.counts is None:
            raise ConfigurationError("ngram analyses need a corpus or a counts file")
        if ("rsa_embed" in self.analyses or "overlap" in self.analyses) and not self.embeddings:
            raise ConfigurationError("rsa_embed/overlap analyses need embedding dumps")


def parse_config_file(path: str) -> dict[str, object]:
    """Parse ``key = value`` lines; repeatable keys collect into lists."""
    values: dict[str, object] = {}
    base = os.path.dirname(os.path.abspath(path))
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError("expected 'key = value'", path=path, line=lineno)
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not key or not value:
                raise ParseError("empty key or value", path=path, line=lineno)
            if key in _REPEATABLE_KEYS:
                values.setdefault(key, []).append(os.path.join(base, value))
            elif key in ("norms", "vocab", "merges", "tokmap", "corpus", "counts"):
                if key in values:
                    raise ParseError(f"duplicate key {key!r}", path=path, line=lineno)
                values[key] = os.path.join(base, value)
            else:
                if key in values:
                    raise ParseError(f"duplicate key {key!r}", path=path, line=lineno)
                values[key] = value
    return values


def config_from_file(path: str, seed_override: int | None = None) -> RunConfig:
    raw = parse_config_file(path)

    def take(key: str) -> str:
        return str(raw.get(key, _DEFAULTS[key]))

    seed_raw = raw.get("seed")
    if seed_override is not None:
        seed = seed_override
    elif seed_raw is not None:
        seed = int(str(seed_raw))
    else:
        raise ConfigurationError(f"{path}: seed is mandatory (set 'seed =' or pass --seed)")
    for required in ("norms", "vocab", "merges"):
        if required not in raw:
            raise ConfigurationError(f"{path}: missing required key {required!r}")
    try:
        config = RunConfig(
            norms=str(raw["norms"]),
            vocab=str(raw["vocab"]),
            merges=str(raw["merges"]),
            seed=seed,
            tokmap=str(raw["tokmap"]) if "tokmap" in raw else None,
            corpus=str(raw["corpus"]) if "corpus" in raw else None,
            counts=str(raw["counts"]) if "counts" in raw else None,
            dumps=list(raw.get("dump", [])),
            embeddings=list(raw.get("embeddings", [])),
            analyses=[a.strip() for a in take("analyses").split(",") if a.strip()],
            k=int(take("k")),
            d_values=[int(v) for v in take("d").split(",")],
            knn_values=[int(v) for v in take("knn_k").split(",")],
            n_bins=int(take("n_bins")),
            alpha=float(take("alpha")),
            backoff_alpha=float(take("backoff_alpha")),
            order=int(take("order")),
            n_resamples=int(take("n_resamples")),
            tokenizer_id=take("tokenizer_id"),
        )
    except ValueError as e:
        raise ConfigurationError(f"{path}: bad value ({e})") from None
    config.validate()
    return config


@dataclass(frozen=True)
class ReportRow:
    analysis: str
    model_id: str
    n_params: int
    checkpoint_step: int
    dedup: bool
    statistic: float
    ci_low: float | None
    ci_high: float | None
    n: int

    def __post_init__(self) -> None:
        if self.ci_low is not None and self.ci_high is not None:
            if not (self.ci_low <= self.statistic <= self.ci_high):
                raise ValueError(
                    f"row {self.analysis}/{self.model_id}: statistic outside its CI"
                )


@dataclass
class AlignmentReport:
    rows: list[ReportRow]

    def __post_init__(self) -> None:
        # dedup joins the key so paired dumps that differ only in the
        # deduplication flag can sit side by side
        keys = [(r.analysis, r.model_id, r.checkpoint_step, r.dedup) for r in self.rows]
        if len(set(keys)) != len(keys):
            raise ValueError("report rows must be unique per (analysis, model, checkpoint, dedup)")


def substream_seed(seed: int, *parts: str) -> int:
    """Stable substream seed from the global seed and string labels."""
    digest = zlib.crc32(":".join(parts).encode("utf-8"))
    return (seed << 32) ^ digest


@dataclass
class JoinedDump:
    """Norms rows aligned with one dump's per-response entries."""

    dump: PredictionDump
    stem_ids: list[str]
    responses: list[str]
    cloze: np.ndarray
    model_prob: np.ndarray
    model_rank: np.ndarray
    groups: list[tuple[str, np.ndarray]]  # (stem_id, row indices)


def join_dump(norms: ClozeNorms, dump: PredictionDump, tokmap: TokenizationMap) -> JoinedDump:
    """Align every (stem, response) pair of the norms with the dump.

    Raises CoverageError when the dump misses stems or responses, and
    CompatibilityError when the dump's first-subword ids disagree with the
    tokenization map (a tokenizer mismatch).
    """
    if (
        dump.header.tokenizer != "unknown"
        and tokmap.source_tokenizer != "unknown"
        and dump.header.tokenizer != tokmap.source_tokenizer
    ):
        raise CompatibilityError(
            f"dump tokenized with {dump.header.tokenizer!r} but map comes from "
            f"{tokmap.source_tokenizer!r}"
        )
    by_stem = dump.by_stem()
    missing_stems = sorted(s.stem_id for s in norms.stems if s.stem_id not in by_stem)
    if missing_stems:
        raise CoverageError(
            f"dump {dump.header.model_id!r} misses {len(missing_stems)} stems "
            f"(first: {missing_stems[:5]})",
            missing=missing_stems,
        )
    stem_ids: list[str] = []
    responses: list[str] = []
    cloze: list[float] = []
    prob: list[float] = []
    rank: list[float] = []
    groups: list[tuple[str, np.ndarray]] = []
    for stem in norms.stems:
        record = by_stem[stem.stem_id]
        entries = {e.text: e for e in record.responses}
        start = len(stem_ids)
        for resp in norms.responses[stem.stem_id]:
            entry = entries.get(resp.text)
            if entry is None:
                raise CoverageError(
                    f"dump {dump.header.model_id!r} misses response {resp.text!r} "
                    f"for stem {stem.stem_id!r}",
                    missing=[resp.text],
                )
            mapped = tokmap.entries.get(resp.text)
            if mapped is not None and entry.first_id != mapped[0]:
                raise CompatibilityError(
                    f"dump {dump.header.model_id!r}: first subword id {entry.first_id} for "
                    f"{resp.text!r} disagrees with tokenization map head {mapped[0]}"
                )
            stem_ids.append(stem.stem_id)
            responses.append(resp.text)
            cloze.append(resp.cloze_prob)
            prob.append(entry.prob)
            rank.append(float(entry.rank))
        groups.append((stem.stem_id, np.arange(start, len(stem_ids))))
    return JoinedDump(
        dump=dump,
        stem_ids=stem_ids,
        responses=responses,
        cloze=np.array(cloze),
        model_prob=np.array(prob),
        model_rank=np.array(rank),
        groups=groups,
    )


def _per_stem_transform(joined: JoinedDump, values: np.ndarray, fn) -> np.ndarray:
    out = np.empty(len(values))
    for _, idx in joined.groups:
        out[idx] = fn(values[idx])
    return out


def _corr_rows(
    analysis: str, joined: JoinedDump, x: np.ndarray, y: np.ndarray, seed: int, n_resamples: int
) -> list[ReportRow]:
    h = joined.dump.header
    series = PairedSeries(x, y)
    rows = []
    for name, stat in ((f"pearson_{analysis}", pearson), (f"spearman_{analysis}", spearman)):
        ci = bootstrap_ci(stat, series, n_resamples=n_resamples, seed=substream_seed(seed, name, h.model_id))
        rows.append(
            ReportRow(
                analysis=name,
                model_id=h.model_id,
                n_params=h.n_params,
                checkpoint_step=h.checkpoint_step,
                dedup=h.dedup,
                statistic=stat(series),
                ci_low=min(ci.low, stat(series)),
                ci_high=max(ci.high, stat(series)),
                n=len(series),
            )
        )
    return rows


def _spearman_row(
    name: str, joined: JoinedDump, x: np.ndarray, y: np.ndarray, seed: int, n_resamples: int
) -> ReportRow:
    h = joined.dump.header
    series = PairedSeries(x, y)
    value = spearman(series)
    ci = bootstrap_ci(spearman, series, n_resamples=n_resamples, seed=substream_seed(seed, name, h.model_id))
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


def _ols_rows(name: str, joined: JoinedDump, x: np.ndarray, y: np.ndarray) -> list[ReportRow]:
    h = joined.dump.header
    fit = ols_fit(PairedSeries(x, y))
    rows = []
    for suffix, value, se in (
        ("slope", fit.slope, fit.slope_se),
        ("intercept", fit.intercept, fit.intercept_se),
    ):
        rows.append(
            ReportRow(
                analysis=f"{name}_{suffix}",
                model_id=h.model_id,
                n_params=h.n_params,
                checkpoint_step=h.checkpoint_step,
                dedup=h.dedup,
                statistic=value,
                ci_low=value - 1.96 * se,
                ci_high=value + 1.96 * se,
                n=len(x),
            )
        )
    return rows


def _plain_row(name: str, joined: JoinedDump, value: float, n: int) -> ReportRow:
    h = joined.dump.header
    return ReportRow(
        analysis=name,
        model_id=h.model_id,
        n_params=h.n_params,
        checkpoint_step=h.checkpoint_step,
        dedup=h.dedup,
        statistic=value,
        ci_low=None,
        ci_high=None,
        n=n,
    )


def human_topk_sets(norms: ClozeNorms, k: int) -> list[list[str]]:
    """Per-stem top-k human completions, count-ranked, lowercase-folded."""
    scored = {
        stem_id: _fold_scores([(r.text, float(r.count)) for r in group])
        for stem_id, group in norms.responses.items()
    }
    return [topk_responses(scored, stem.stem_id, k) for stem in norms.stems]


def model_topk_sets(dump: PredictionDump, spec: TokenizerSpec, k: int) -> list[list[str]]:
    """Per-stem top-k model completions, decoded to folded word strings."""
    sets = []
    for stem in dump.stems:
        pairs = []
        for token_id, prob in stem.top:
            word = bpe_decode(spec, [token_id]).strip().lower()
            if word:
                pairs.append((word, prob))
        scored = {stem.stem_id: _fold_scores(pairs)}
        sets.append(topk_responses(scored, stem.stem_id, k))
    return sets


def _fold_scores(pairs: list[tuple[str, float]]) -> dict[str, float]:
    scores: dict[str, float] = {}
    for word, score in pairs:
        key = word.lower()
        if key not in scores or score > scores[key]:
            scores[key] = score
    return scores


def ppmi_space(topk_sets: list[list[str]], d: int, source: str):
    """Co-occurrence -> PPMI -> row normalization -> d-dimensional SVD space.

    Words whose PPMI row is constant (no distributional signal) are dropped
    before normalization; they cannot be centered and scaled. d is capped at
    the matrix dimensions, so requesting more components than the space
    supports keeps them all.
    """
    cooc = cooccurrence_counts([s for s in topk_sets if len(s) >= 2])
    values = ppmi(cooc)
    keep = np.nonzero(values.std(axis=1) > 0)[0]
    if len(keep) < len(cooc.words):
        values = values[np.ix_(keep, keep)]
    words = tuple(cooc.words[i] for i in keep)
    if len(words) < 3:
        raise CoverageError("fewer than 3 words carry co-occurrence signal")
    normalized = row_normalize(values, words)
    d_eff = min(d, *normalized.shape)
    return pca_project(normalized, d_eff, words, source=source)


def _load_embedding_spaces(config: RunConfig) -> dict[str, EmbeddingDump]:
    dumps: dict[str, EmbeddingDump] = {}
    reference: str | None = None
    for path in config.embeddings:
        dump = load_embedding_dump(path, expected_reference_model=reference)
        reference = dump.header.reference_model
        if dump.header.dataset in dumps:
            raise ConfigurationError(
                f"two embedding dumps declare dataset {dump.header.dataset!r}"
            )
        dumps[dump.header.dataset] = dump
    return dumps


def run_sweep(config: RunConfig) -> AlignmentReport:
    """Compute every selected analysis for every dump; deterministic per seed."""
    config.validate()
    norms = load_cloze_norms(config.norms)
    spec = load_tokenizer_spec(config.vocab, config.merges, name=config.tokenizer_id)
    if config.tokmap is not None:
        tokmap = load_tokenization_map(config.tokmap)
    else:
        tokmap = build_tokenization_map(spec, norms.response_words())

    ngram_scores: list[StemResponseScore] | None = None
    if "ngram" in config.analyses:
        if config.counts is not None:
            counts = load_counts(config.counts)
        else:
            counts = count_documents(tokenize_corpus_file(config.corpus, spec), config.order)
        params = BackoffParams(alpha=config.backoff_alpha, order=config.order)
        ngram_scores = score_stems(counts, norms, tokmap, spec, params)

    embedding_dumps = _load_embedding_spaces(config) if config.embeddings else {}

    human_sets = human_topk_sets(norms, config.k) if "rsa_ppmi" in config.analyses else None

    seed = config.seed
    nres = config.n_resamples
    rows: list[ReportRow] = []
    for dump_path in config.dumps:
        dump = load_prediction_dump(dump_path)
        joined = join_dump(norms, dump, tokmap)
        h = dump.header
        if "prob" in config.analyses:
            rows.extend(_corr_rows("prob", joined, joined.cloze, joined.model_prob, seed, nres))
        if "logit" in config.analyses:
            lx = np.array([logit(p, config.alpha) for p in joined.cloze])
            ly = np.array([logit(p, config.alpha) for p in joined.model_prob])
            rows.extend(_ols_rows("ols_logit", joined, lx, ly))
        if "luce" in config.analyses:
            renorm = _per_stem_transform(joined, joined.model_prob, lambda v: np.array(luce_renormalize(v)))
            lx = np.array([logit(p, config.alpha) for p in joined.cloze])
            ly = np.array([logit(min(p, 1.0), config.alpha) for p in renorm])
            rows.extend(_ols_rows("ols_luce", joined, lx, ly))
        if "rank" in config.analyses:
            cloze_ranks = _per_stem_transform(joined, joined.cloze, within_stem_ranks)
            rows.append(_spearman_row("spearman_rank", joined, cloze_ranks, joined.model_rank, seed, nres))
        if "ngram" in config.analyses:
            rows.extend(_ngram_rows(joined, ngram_scores, seed, nres))
        if "rsa_ppmi" in config.analyses:
            model_sets = model_topk_sets(dump, spec, config.k)
            for d in config.d_values:
                human_space = ppmi_space(human_sets, d, source="human")
                model_space = ppmi_space(model_sets, d, source=h.model_id)
                a, b = intersect_spaces(human_space, model_space)
                value = rsa_spearman(cosine_similarity_matrix(a), cosine_similarity_matrix(b))
                rows.append(_plain_row(f"rsa_ppmi_d{d}", joined, value, len(a.words)))
        if "rsa_embed" in config.analyses or "overlap" in config.analyses:
            human_dump = embedding_dumps.get("human")
            model_dump = embedding_dumps.get(h.model_id)
            if human_dump is None or model_dump is None:
                raise ConfigurationError(
                    f"embedding analyses need dumps tagged 'human' and {h.model_id!r}"
                )
            a, b = intersect_spaces(mean_pool_embeddings(human_dump), mean_pool_embeddings(model_dump))
            if "rsa_embed" in config.analyses:
                value = rsa_spearman(cosine_similarity_matrix(a), cosine_similarity_matrix(b))
                rows.append(_plain_row("rsa_embed", joined, value, len(a.words)))
            if "overlap" in config.analyses:
                for k in config.knn_values:
                    value = neighborhood_overlap(a, b, k)
                    rows.append(_plain_row(f"overlap_k{k}", joined, value, len(a.words)))

    rows.sort(key=lambda r: (r.analysis, r.model_id, r.checkpoint_step, r.dedup))
    return AlignmentReport(rows=rows)


def _ngram_rows(
    joined: JoinedDump, scores: list[StemResponseScore], seed: int, n_resamples: int
) -> list[ReportRow]:
    by_key = {(s.stem_id, s.response): s for s in scores}
    missing = [k for k in zip(joined.stem_ids, joined.responses) if k not in by_key]
    if missing:
        raise CoverageError(f"n-gram score table misses {len(missing)} pairs (first: {missing[:3]})")
    backoff = np.array([by_key[k].backoff_score for k in zip(joined.stem_ids, joined.responses)])
    unigram = np.array([by_key[k].unigram_score for k in zip(joined.stem_ids, joined.responses)])
    ranks = {
        "human": _per_stem_transform(joined, joined.cloze, within_stem_ranks),
        "nlm": _per_stem_transform(joined, joined.model_prob, within_stem_ranks),
        "ngram": _per_stem_transform(joined, backoff, within_stem_ranks),
        "unigram": _per_stem_transform(joined, unigram, within_stem_ranks),
    }
    pairs = [
        ("spearman_nlm_human", "nlm", "human"),
        ("spearman_ngram_human", "ngram", "human"),
        ("spearman_unigram_human", "unigram", "human"),
        ("spearman_ngram_nlm", "ngram", "nlm"),
        ("spearman_unigram_nlm", "unigram", "nlm"),
        ("spearman_unigram_ngram", "unigram", "ngram"),
    ]
    return [
        _spearman_row(name, joined, ranks[a], ranks[b], seed, n_resamples)
        for name, a, b in pairs
    ]


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.6g}"


def emit_report(report: AlignmentReport, path: str, format: str = "csv") -> None:
    """Write the report with stable column order and 6-significant-digit numbers."""
    if not report.rows:
        raise ConfigurationError("refusing to emit an empty report")
    if format == "csv":
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(REPORT_COLUMNS)
            for r in report.rows:
                writer.writerow(
                    [
                        r.analysis,
                        r.model_id,
                        r.n_params,
                        r.checkpoint_step,
                        "true" if r.dedup else "false",
                        _fmt(r.statistic),
                        _fmt(r.ci_low),
                        _fmt(r.ci_high),
                        r.n,
                    ]
                )
    elif format == "jsonl":
        with open(path, "w", encoding="utf-8") as f:
            for r in report.rows:
                record = {
                    "analysis": r.analysis,
                    "model_id": r.model_id,
                    "n_params": r.n_params,
                    "checkpoint_step": r.checkpoint_step,
                    "dedup": r.dedup,
                    "statistic": float(_fmt(r.statistic)),
                    "ci_low": None if r.ci_low is None else float(_fmt(r.ci_low)),
                    "ci_high": None if r.ci_high is None else float(_fmt(r.ci_high)),
                    "n": r.n,
                }
                f.write(json.dumps(record) + "\n")
    else:
        raise ConfigurationError(f"unknown report format {format!r}")


def load_report(path: str, format: str | None = None) -> AlignmentReport:
    """Parse a report back from csv or jsonl (inferred from the extension)."""
    if format is None:
        format = "jsonl" if path.endswith(".jsonl") else "csv"
    rows: list[ReportRow] = []
    if format == "csv":
        with open(path, encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames != REPORT_COLUMNS:
                raise ParseError(f"unexpected report columns {reader.fieldnames!r}", path=path, line=1)
            for raw in reader:
                rows.append(
                    ReportRow(
                        analysis=raw["analysis"],
                        model_id=raw["model_id"],
                        n_params=int(raw["n_params"]),
                        checkpoint_step=int(raw["checkpoint_step"]),
                        dedup=raw["dedup"] == "true",
                        statistic=float(raw["statistic"]),
                        ci_low=float(raw["ci_low"]) if raw["ci_low"] else None,
                        ci_high=float(raw["ci_high"]) if raw["ci_high"] else None,
                        n=int(raw["n"]),
                    )
                )
    elif format == "jsonl":
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    raw = json.loads(line)
                except json.JSONDecodeError as e:
                    raise ParseError(f"invalid JSON ({e.msg})", path=path, line=lineno) from e
                rows.append(
                    ReportRow(
                        analysis=raw["analysis"],
                        model_id=raw["model_id"],
                        n_params=int(raw["n_params"]),
                        checkpoint_step=int(raw["checkpoint_step"]),
                        dedup=bool(raw["dedup"]),
                        statistic=float(raw["statistic"]),
                        ci_low=raw["ci_low"],
                        ci_high=raw["ci_high"],
                        n=int(raw["n"]),
                    )
                )
    else:
        raise ConfigurationError(f"unknown report format {format!r}")
    return AlignmentReport(rows=rows)


def write_correlation_csv(rows: list[ReportRow], path: str) -> None:
    """Per-analysis correlation schema used by the standalone subcommands."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CORRELATION_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.analysis,
                    r.model_id,
                    r.checkpoint_step,
                    "true" if r.dedup else "false",
                    _fmt(r.statistic),
                    _fmt(r.ci_low),
                    _fmt(r.ci_high),
                    r.n,
                ]
            )


def write_calibration_csv(curve, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CALIBRATION_COLUMNS)
        for b in curve.bins:
            writer.writerow([_fmt(b.bin_center), _fmt(b.mean_model_prob), _fmt(b.ci_low), _fmt(b.ci_high), b.n])
