"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with -s to see the lines for passing criteria).

The real-data subword-statistics criterion needs the real norms CSV and
tokenizer files vendored under data/real/ (see README); without them it
fails with instructions rather than silently passing.
"""

import json
import math
import pathlib
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy import stats as sps

import clozealign as ca
from clozealign.cli import main as cli_main
from clozealign.semspace import SemanticSpace, cooccurrence_counts
from clozealign.stats import PairedSeries

from oracle_ngram import oracle_backoff

FIXTURE = pathlib.Path(__file__).parent / "data" / "synthetic"
REAL_DATA = pathlib.Path(__file__).parent.parent / "data" / "real"


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    else:
        print(f"ACCEPTANCE {name}: PASS")


def test_ngram_oracle_equivalence():
    """50 random corpora: backoff scores equal the stream-rescanning oracle.

    Contexts probed per corpus: every observed k-gram for k = 0..4 plus
    unseen-context probes; words: the whole vocabulary plus an unseen id.
    """
    with criterion("ngram-oracle-equivalence"):
        started = time.perf_counter()
        rng = np.random.default_rng(52_001)
        params = ca.BackoffParams(alpha=0.4, order=5)
        for _ in range(50):
            vocab = int(rng.integers(2, 21))
            length = int(rng.integers(50, 251))
            tokens = rng.integers(0, vocab, length).tolist()
            stream = bytes(tokens)
            counts = ca.count_ngrams(tokens, 5)
            contexts = {tuple(tokens[i : i + k]) for k in range(5) for i in range(length - k + 1)}
            for _ in range(10):  # unseen-context probes
                contexts.add(tuple(rng.integers(0, vocab + 2, rng.integers(1, 5)).tolist()))
            words = list(range(vocab)) + [vocab + 1]
            for ctx in contexts:
                for word in words:
                    mine = ca.stupid_backoff_score(counts, ctx, word, params)
                    ref = oracle_backoff(stream, ctx, word, 0.4)
                    assert abs(mine - ref) <= 1e-12, (tokens[:20], ctx, word, mine, ref)
        elapsed = time.perf_counter() - started
        assert elapsed < 10.0, f"oracle sweep took {elapsed:.1f}s"


def test_shard_merge_exactness():
    """Merged document-boundary shards equal single-pass counts exactly."""
    with criterion("shard-merge-exactness"):
        rng = np.random.default_rng(52_002)
        for _ in range(20):
            n_docs = int(rng.integers(2, 12))
            docs = [
                rng.integers(0, 30, rng.integers(0, 80)).tolist() for _ in range(n_docs)
            ]
            order = int(rng.integers(1, 6))
            single = ca.count_documents(docs, order)
            cut = int(rng.integers(1, n_docs))
            merged = ca.merge_counts(
                ca.count_documents(docs[:cut], order), ca.count_documents(docs[cut:], order)
            )
            assert merged.tables == single.tables
            assert merged.total_tokens == single.total_tokens


def test_correlation_oracles():
    """pearson/spearman match scipy references; Spearman is monotone-invariant."""
    with criterion("correlation-oracles"):
        rng = np.random.default_rng(52_003)
        for _ in range(100):
            x = rng.normal(size=500)
            y = 0.3 * x + rng.normal(size=500)
            series = PairedSeries(x, y)
            assert abs(ca.pearson(series) - sps.pearsonr(x, y).statistic) <= 1e-10
            assert abs(ca.spearman(series) - sps.spearmanr(x, y).statistic) <= 1e-10
        transforms = [
            lambda v, a: np.exp(a * v),
            lambda v, a: a * v + 1.0,
            lambda v, a: v**3 + a * v,
            lambda v, a: np.arctan(v) * a,
        ]
        for i in range(100):
            x = rng.normal(size=120)
            y = rng.normal(size=120)
            base = ca.spearman(PairedSeries(x, y))
            f = transforms[i % len(transforms)]
            a = float(rng.uniform(0.2, 3.0))
            assert abs(ca.spearman(PairedSeries(f(x, a), y)) - base) <= 1e-12
            assert abs(ca.spearman(PairedSeries(x, f(y, a))) - base) <= 1e-12


def test_transform_properties():
    """logit antisymmetry exact; luce normalized and scale-free; rank sums."""
    with criterion("transform-properties"):
        for k in range(0, 4097):  # dyadic grid keeps the complement exact
            p = k / 4096.0
            assert ca.logit(p) + ca.logit(1.0 - p) == 0.0
        rng = np.random.default_rng(52_004)
        for _ in range(200):
            values = rng.uniform(0.0, 5.0, rng.integers(1, 40))
            if values.sum() == 0.0:
                continue
            out = ca.luce_renormalize(values)
            assert abs(math.fsum(out) - 1.0) <= 1e-12
            scaled = ca.luce_renormalize(values * float(rng.uniform(0.1, 50.0)))
            assert np.allclose(out, scaled, atol=1e-12)
        for _ in range(200):
            values = rng.choice([0.0, 0.2, 0.5, 0.9], size=rng.integers(1, 50))
            ranks = ca.within_stem_ranks(values)
            n = len(values)
            assert abs(ranks.sum() - n * (n + 1) / 2) <= 1e-9


def test_ppmi_pca_criteria():
    """Hand PPMI values; full-rank projections preserve dot products; RSA self."""
    with criterion("ppmi-pca"):
        cooc = cooccurrence_counts([["a", "b", "c"], ["a", "b"]])
        values = ca.ppmi(cooc)
        idx = {w: i for i, w in enumerate(cooc.words)}
        assert abs(values[idx["a"], idx["b"]] - 0.5754) <= 1e-4
        assert abs(values[idx["a"], idx["c"]] - 0.2877) <= 1e-4

        rng = np.random.default_rng(52_005)
        for _ in range(20):
            n = int(rng.integers(4, 31))
            cols = int(rng.integers(3, 31))
            inner = int(rng.integers(2, min(n, cols) + 1))
            m = rng.normal(size=(n, inner)) @ rng.normal(size=(inner, cols))
            rank = int(np.linalg.matrix_rank(m))
            words = tuple(f"w{i}" for i in range(n))
            space = ca.pca_project(m, rank, words)
            assert np.allclose(space.vectors @ space.vectors.T, m @ m.T, atol=1e-9)

        space = SemanticSpace(
            words=tuple(f"w{i}" for i in range(10)),
            vectors=rng.normal(size=(10, 6)),
            source="t",
        )
        sims = ca.cosine_similarity_matrix(space)
        assert ca.rsa_spearman(sims, sims) == pytest.approx(1.0, abs=1e-15)


def test_neighborhood_overlap_criteria():
    """Overlap equals a brute-force Jaccard oracle exactly; boundary cases."""
    with criterion("neighborhood-overlap"):
        rng = np.random.default_rng(52_006)
        for trial in range(10):
            n = int(rng.integers(25, 51))
            words = tuple(f"w{i:02d}" for i in range(n))
            a = SemanticSpace(words, rng.normal(size=(n, 8)), "a")
            b = SemanticSpace(words, rng.normal(size=(n, 8)), "b")
            for k in (1, 5, 20):
                mine = ca.neighborhood_overlap(a, b, k)
                assert mine == _brute_force_overlap(a, b, k)
        n = 30
        words = tuple(f"w{i:02d}" for i in range(n))
        same = SemanticSpace(words, rng.normal(size=(n, 8)), "same")
        assert ca.neighborhood_overlap(same, same, 5) == 1.0
        # paired clusters arranged so k=1 neighbors never agree
        pair_a = np.repeat(np.eye(8), 2, axis=0)[:16] + 0.01 * rng.normal(size=(16, 8))
        pair_b = np.vstack([pair_a[1::2], pair_a[0::2]])
        words16 = tuple(f"w{i:02d}" for i in range(16))
        disjoint = ca.neighborhood_overlap(
            SemanticSpace(words16, pair_a, "a"), SemanticSpace(words16, pair_b, "b"), 1
        )
        assert disjoint == 0.0


def _brute_force_overlap(a: SemanticSpace, b: SemanticSpace, k: int) -> float:
    def cosine(u, v):
        return float(u @ v) / (float(np.linalg.norm(u)) * float(np.linalg.norm(v)))

    def neighbors(space, i):
        sims = [
            (-cosine(space.vectors[i], space.vectors[j]), w)
            for j, w in enumerate(space.words)
            if j != i
        ]
        sims.sort()
        return {w for _, w in sims[:k]}

    import math

    scores = []
    for i in range(len(a.words)):
        na, nb = neighbors(a, i), neighbors(b, i)
        scores.append(len(na & nb) / len(na | nb))
    return math.fsum(scores) / len(scores)


def test_planted_correlation_end_to_end(tmp_path):
    """The bundled fixture recovers its planted Spearman through `sweep`."""
    with criterion("planted-correlation-end-to-end"):
        manifest = json.loads((FIXTURE / "manifest.json").read_text())
        out_a = tmp_path / "report_a.csv"
        out_b = tmp_path / "report_b.csv"
        assert cli_main(["sweep", "--config", str(FIXTURE / "config.txt"), "--out", str(out_a)]) == 0
        assert cli_main(["sweep", "--config", str(FIXTURE / "config.txt"), "--out", str(out_b)]) == 0
        assert out_a.read_bytes() == out_b.read_bytes(), "re-run must be byte-identical"
        import csv

        with open(out_a, newline="") as f:
            rows = {(r["analysis"], r["model_id"]): float(r["statistic"]) for r in csv.DictReader(f)}
        for model_id, target in manifest["targets"].items():
            recovered = rows[("spearman_prob", model_id)]
            assert abs(recovered - target) <= 0.03, (model_id, recovered, target)


def test_fixture_regenerates_byte_identically(tmp_path):
    """The committed fixture matches a fresh run of its simulation oracle."""
    with criterion("fixture-regeneration"):
        import subprocess
        import sys

        tool = pathlib.Path(__file__).parent.parent / "tools" / "make_synthetic_fixture.py"
        out = tmp_path / "regen"
        proc = subprocess.run(
            [sys.executable, str(tool), "--out", str(out)], capture_output=True, text=True
        )
        assert proc.returncode == 0, proc.stderr
        for path in sorted(FIXTURE.iterdir()):
            assert (out / path.name).read_bytes() == path.read_bytes(), path.name


def test_real_norms_subword_statistics():
    """Real norms + real tokenizer reproduce the reported subword statistics.

    Requires data/real/norms.csv plus data/real/vocab.json and
    data/real/merges.txt (the byte-level BPE tokenizer of the evaluated
    models). These artifacts cannot be redistributed with the repository and
    this sandbox has no network access to fetch them, so without them this
    criterion fails rather than silently passing; see README for how to
    vendor the files.
    """
    with criterion("real-norms-subword-statistics"):
        norms_path = REAL_DATA / "norms.csv"
        vocab_path = REAL_DATA / "vocab.json"
        merges_path = REAL_DATA / "merges.txt"
        missing = [p.name for p in (norms_path, vocab_path, merges_path) if not p.exists()]
        if missing:
            pytest.fail(
                f"real-data files not vendored under {REAL_DATA}: missing {missing}; "
                "place the real completion norms CSV (schema: stem_id,stem_text,"
                "response_text,response_count[,cloze_prob]) and the tokenizer's "
                "vocab.json/merges.txt there to run this criterion"
            )
        started = time.perf_counter()
        norms = ca.load_cloze_norms(str(norms_path))
        assert len(norms.stems) == 3085
        spec = ca.load_tokenizer_spec(str(vocab_path), str(merges_path), name="real")
        tokmap = ca.build_tokenization_map(spec, norms.response_words())
        stats = ca.response_subword_stats(norms, tokmap)
        elapsed = time.perf_counter() - started
        assert abs(stats.single_token_fraction - 0.504) <= 0.01
        assert abs(stats.mean_subwords - 1.64) <= 0.05
        assert elapsed < 30.0, f"took {elapsed:.1f}s"
