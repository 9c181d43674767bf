#!/usr/bin/env python3
"""Generate the bundled synthetic end-to-end fixture.

This is the simulation oracle behind tests/data/synthetic: 50 sentence stems
with human-like completion counts, a byte-level BPE tokenizer whose words are
one to three subwords, two model prediction dumps whose per-response
probabilities carry a planted rank correlation with the cloze probabilities,
embedding dumps for the RSA/overlap analyses, and an n-gram corpus.

Planting procedure (Gaussian copula): the pooled cloze probabilities are
mapped to normal scores z_x; model scores are z_y = r*z_x + sqrt(1-r^2)*eps
with r = 2*sin(pi*rho/6), which targets Spearman rho between the two series.
z_y is squashed through a shifted sigmoid (monotone, so the copula survives)
and each stem's response mass is capped, modelling the under-allocation of
probability mass that motivates the logit analyses. The realized sample
Spearman is then measured with scipy (independent of the package under test)
and must land within 0.005 of the target; the default seed was chosen so
that it does. Everything is deterministic given the seed.

Usage: python tools/make_synthetic_fixture.py [--out tests/data/synthetic]
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np
from scipy import special
from scipy import stats as sps

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from clozealign.bpe import TokenizerSpec, bpe_encode, byte_unicode_map, save_tokenizer_spec
from clozealign.dumps import (
    DumpHeader,
    EmbeddingDump,
    EmbeddingHeader,
    EmbeddingRecord,
    PredictionDump,
    ResponseEntry,
    StemPrediction,
    save_embedding_dump,
    save_prediction_dump,
)
from clozealign.norms import build_tokenization_map, save_tokenization_map

SEED = 20260990

TARGETS = {"synth-62m": 0.45, "synth-1b": 0.75}
MODEL_META = {
    "synth-62m": dict(n_params=62_000_000, checkpoint_step=143000, dedup=False),
    "synth-1b": dict(n_params=1_000_000_000, checkpoint_step=143000, dedup=True),
}
TOKENIZER_ID = "synthetic-bpe-v1"
REFERENCE_MODEL = "synthetic-ref-1b"
N_STEMS = 50
TOP_K = 20
MAX_GAP = 0.005

NOUNS = [
    "hive", "swarm", "bee", "nest", "wasp", "soup", "stew", "bread", "cheese",
    "river", "boat", "bridge", "garden", "rose", "tulip", "hammer", "nail",
    "ladder", "candle", "flame", "storm", "cloud", "valley", "meadow", "horse",
    "saddle", "wagon", "barrel", "cellar", "lantern", "anchor", "harbor",
    "sailor", "compass", "meal", "feast", "piano", "violin", "melody", "chorus",
]
STEM_SUBJECTS = [
    "the farmer", "my neighbor", "the old sailor", "her brother", "the young cook",
    "our teacher", "the tired traveler", "his grandmother", "the carpenter",
    "the gardener",
]
STEM_VERBS = [
    "feared finding a", "slowly opened the", "never trusted the", "carefully packed a",
    "finally repaired the", "quietly admired the", "suddenly noticed a",
    "always wanted a", "patiently painted the", "nearly dropped the",
]


def build_tokenizer(rng: np.random.Generator, words: list[str]) -> TokenizerSpec:
    """Byte alphabet plus leading-space merge chains; ~55% single-token words."""
    byte_map = byte_unicode_map()
    vocab = {byte_map[b]: b for b in range(256)}
    merges: list[tuple[str, str]] = []
    seen: set[tuple[str, str]] = set()
    space = byte_map[ord(" ")]
    for word in sorted(words):
        if rng.random() < 0.55 or len(word) <= 3:
            tail = 0
        else:
            tail = int(rng.integers(1, 3))  # 1 or 2 trailing single-byte tokens
        symbol = space
        for ch in word[: len(word) - tail]:
            pair = (symbol, ch)
            if pair not in seen:
                seen.add(pair)
                merges.append(pair)
            symbol += ch
            if symbol not in vocab:
                vocab[symbol] = len(vocab)
    return TokenizerSpec(vocab=vocab, merges=tuple(merges), name=TOKENIZER_ID)


def build_stems(rng: np.random.Generator, spec: TokenizerSpec):
    """Stems plus per-stem (response, count) lists with distinct first subwords."""
    stems = []
    for i in range(N_STEMS):
        stem_id = f"stim{i:03d}"
        text = f"{STEM_SUBJECTS[i % len(STEM_SUBJECTS)]} {STEM_VERBS[(i * 7) % len(STEM_VERBS)]}"
        m = int(rng.integers(4, 11))
        picked: list[str] = []
        first_ids: set[int] = set()
        for word in rng.permutation(NOUNS):
            head = bpe_encode(spec, " " + word)[0]
            if head not in first_ids:
                first_ids.add(head)
                picked.append(str(word))
            if len(picked) == m:
                break
        weights = np.sort(rng.dirichlet(np.full(m, 0.6)))[::-1]
        total = int(rng.integers(100, 201))
        counts = np.maximum(1, np.round(weights * total).astype(int))
        stems.append((stem_id, text, list(zip(picked, counts.tolist()))))
    return stems


def write_norms(stems, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("stem_id,stem_text,response_text,response_count\n")
        for stem_id, text, responses in stems:
            for word, count in responses:
                f.write(f"{stem_id},{text},{word},{count}\n")


def plant_model_probs(
    rng: np.random.Generator, cloze: np.ndarray, groups: list[np.ndarray], target: float
) -> np.ndarray:
    """Model probabilities with Spearman(cloze, probs) ~= target."""
    n = len(cloze)
    z_x = special.ndtri((sps.rankdata(cloze) - 0.5) / n)
    z_x = (z_x - z_x.mean()) / z_x.std()
    r = 2.0 * math.sin(math.pi * target / 6.0)
    z_y = r * z_x + math.sqrt(1.0 - r * r) * rng.standard_normal(n)
    probs = special.expit(0.9 * z_y - 1.9)
    for idx in groups:
        mass = probs[idx].sum()
        if mass > 0.92:
            probs[idx] *= 0.92 / mass
    return probs


def build_dump(
    rng: np.random.Generator,
    model_id: str,
    stems,
    spec: TokenizerSpec,
    tokmap,
    probs: np.ndarray,
    groups: list[np.ndarray],
) -> PredictionDump:
    meta = MODEL_META[model_id]
    header = DumpHeader(
        model_id=model_id,
        n_params=meta["n_params"],
        checkpoint_step=meta["checkpoint_step"],
        dedup=meta["dedup"],
        tokenizer=TOKENIZER_ID,
        top_k=TOP_K,
    )
    records = []
    for (stem_id, _, responses), idx in zip(stems, groups):
        stem_probs = probs[idx]
        order = np.argsort(-stem_probs)
        ranks = np.empty(len(order), dtype=int)
        rank = 0
        for position in order:
            rank += 1 + int(rng.geometric(0.6)) - 1  # occasional gaps
            ranks[position] = rank
        entries = tuple(
            ResponseEntry(
                text=word,
                first_id=tokmap.entries[word][0],
                prob=float(stem_probs[j]),
                rank=int(ranks[j]),
            )
            for j, (word, _) in enumerate(responses)
        )
        top = [(tokmap.entries[word][0], float(stem_probs[j])) for j, (word, _) in enumerate(responses)]
        floor = min(p for _, p in top)
        filler_ids = rng.choice(np.arange(97, 123), size=6, replace=False)  # byte tokens a..z
        top += [(int(t), floor * 0.8 ** (j + 1)) for j, t in enumerate(filler_ids)]
        top.sort(key=lambda tp: (-tp[1], tp[0]))
        mass = sum(p for _, p in top)
        if mass > 0.999:
            top = [(t, p * 0.999 / mass) for t, p in top]
        records.append(
            StemPrediction(stem_id=stem_id, top=tuple(top[:TOP_K]), responses=entries)
        )
    return PredictionDump(header=header, stems=records)


def build_embeddings(
    rng: np.random.Generator, stems, tokmap, dataset: str, drift: float, out_dir: str, seed: int
) -> None:
    """Per-(stem, word) vectors around shared word anchors plus dataset drift."""
    anchor_rng = np.random.default_rng(seed + 777)  # shared across datasets
    clusters = anchor_rng.normal(size=(8, 16))
    anchors = {
        word: clusters[i % 8] + 0.35 * anchor_rng.normal(size=16)
        for i, word in enumerate(NOUNS)
    }
    records = []
    rows = []
    offset = 0
    for stem_id, _, responses in stems:
        for word, _ in responses:
            vec = anchors[word] + drift * rng.normal(size=16) + 0.10 * rng.normal(size=16)
            records.append(
                EmbeddingRecord(
                    stem_id=stem_id, word=word, offset=offset, n_subwords=len(tokmap.entries[word])
                )
            )
            rows.append(vec)
            offset += 1
    dump = EmbeddingDump(
        header=EmbeddingHeader(
            reference_model=REFERENCE_MODEL,
            layer="last",
            dim=16,
            dataset=dataset,
            blob=f"embed_{dataset}.bin",
        ),
        records=records,
        vectors=np.asarray(rows, dtype=np.float32),
    )
    save_embedding_dump(dump, os.path.join(out_dir, f"embed_{dataset}.jsonl"))


def write_corpus(rng: np.random.Generator, stems, path: str) -> None:
    """Documents echoing stem+response continuations plus background noise."""
    docs = []
    for stem_id, text, responses in stems:
        for word, count in responses:
            for _ in range(max(1, count // 25)):
                docs.append(f"{text} {word}.")
    for _ in range(250):
        salad = " ".join(rng.choice(NOUNS, size=rng.integers(4, 9)))
        docs.append(f"they spoke of the {salad}.")
    order = rng.permutation(len(docs))
    with open(path, "w", encoding="utf-8") as f:
        for i in order:
            f.write(docs[i] + "\n")


CONFIG_TEMPLATE = """\
# synthetic end-to-end fixture
norms = norms.csv
vocab = vocab.json
merges = merges.txt
tokmap = tokmap.jsonl
corpus = corpus.txt
dump = dump_synth-62m.jsonl
dump = dump_synth-1b.jsonl
embeddings = embed_human.jsonl
embeddings = embed_synth-62m.jsonl
embeddings = embed_synth-1b.jsonl
analyses = prob,logit,luce,rank,ngram,rsa_ppmi,rsa_embed,overlap
tokenizer_id = synthetic-bpe-v1
k = 40
d = 4,8
knn_k = 3,5
order = 4
backoff_alpha = 0.4
n_resamples = 500
seed = 415926535
"""


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="tests/data/synthetic")
    parser.add_argument("--seed", type=int, default=SEED)
    args = parser.parse_args(argv)
    os.makedirs(args.out, exist_ok=True)

    rng = np.random.default_rng(args.seed)
    spec = build_tokenizer(rng, NOUNS + [w for s in STEM_SUBJECTS + STEM_VERBS for w in s.split()])
    stems = build_stems(rng, spec)

    write_norms(stems, os.path.join(args.out, "norms.csv"))
    save_tokenizer_spec(
        spec, os.path.join(args.out, "vocab.json"), os.path.join(args.out, "merges.txt")
    )
    tokmap = build_tokenization_map(spec, sorted({w for _, _, rs in stems for w, _ in rs}))
    save_tokenization_map(tokmap, os.path.join(args.out, "tokmap.jsonl"))

    cloze = []
    groups = []
    start = 0
    for _, _, responses in stems:
        total = sum(c for _, c in responses)
        cloze.extend(c / total for _, c in responses)
        groups.append(np.arange(start, start + len(responses)))
        start += len(responses)
    cloze = np.asarray(cloze)

    manifest = {"seed": args.seed, "targets": TARGETS, "realized": {}, "n_pairs": int(len(cloze))}
    for model_id, target in TARGETS.items():
        probs = plant_model_probs(rng, cloze, groups, target)
        realized = float(sps.spearmanr(cloze, probs).statistic)
        gap = abs(realized - target)
        if gap > MAX_GAP:
            raise SystemExit(
                f"{model_id}: realized Spearman {realized:.4f} misses target {target} "
                f"by {gap:.4f} (> {MAX_GAP}); pick a different seed"
            )
        manifest["realized"][model_id] = realized
        dump = build_dump(rng, model_id, stems, spec, tokmap, probs, groups)
        save_prediction_dump(dump, os.path.join(args.out, f"dump_{model_id}.jsonl"))

    build_embeddings(rng, stems, tokmap, "human", 0.10, args.out, args.seed)
    build_embeddings(rng, stems, tokmap, "synth-62m", 0.70, args.out, args.seed)
    build_embeddings(rng, stems, tokmap, "synth-1b", 0.25, args.out, args.seed)
    write_corpus(rng, stems, os.path.join(args.out, "corpus.txt"))

    with open(os.path.join(args.out, "config.txt"), "w", encoding="utf-8") as f:
        f.write(CONFIG_TEMPLATE)
    with open(os.path.join(args.out, "manifest.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")

    for model_id, realized in manifest["realized"].items():
        print(f"{model_id}: planted {TARGETS[model_id]}, realized {realized:.4f}")
    print(f"fixture written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
