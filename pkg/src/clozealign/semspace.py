"""Semantic spaces from top-k completions and pooled embeddings.

Two routes produce d-dimensional word vectors over a shared word set:
symbolic co-occurrence (words co-occur when they appear in the same stem's
top-k completion set) run through PPMI and a truncated SVD, and mean-pooled
contextual embeddings. Spaces are compared second-order: Spearman over the
upper triangles of their cosine-similarity matrices (RSA), or the average
Jaccard overlap of per-word k-nearest-neighbor sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CompatibilityError,
    CoverageError,
    DataError,
    DegenerateError,
    InsufficientOverlapError,
)
from .stats import PairedSeries, spearman

MIN_SHARED_WORDS = 3


@dataclass(frozen=True)
class CoocCounts:
    """Symmetric within-stem co-occurrence counts over an ordered word set."""

    words: tuple[str, ...]
    matrix: np.ndarray  # |W| x |W| nonnegative ints, zero diagonal
    total: int

    def __post_init__(self) -> None:
        m = self.matrix
        if m.shape != (len(self.words), len(self.words)):
            raise ValueError("matrix shape must match word count")
        if (m < 0).any() or not np.array_equal(m, m.T) or np.diagonal(m).any():
            raise DataError("co-occurrence matrix must be symmetric, nonnegative, zero-diagonal")
        if int(m.sum()) != self.total:
            raise DataError("total must equal the matrix sum")


@dataclass(frozen=True)
class SemanticSpace:
    """Word vectors over an ordered word set, tagged with their provenance."""

    words: tuple[str, ...]
    vectors: np.ndarray  # |W| x d
    source: str

    def __post_init__(self) -> None:
        v = np.asarray(self.vectors, dtype=float)
        object.__setattr__(self, "vectors", v)
        if v.ndim != 2 or v.shape[0] != len(self.words):
            raise ValueError("vectors must be |W| x d")
        if not np.isfinite(v).all():
            raise DataError("vectors must be finite")
        norms = np.linalg.norm(v, axis=1)
        if (norms == 0).any():
            dead = self.words[int(np.argmax(norms == 0))]
            raise DegenerateError(f"zero-norm vector for word {dead!r}")
        if len(set(self.words)) != len(self.words):
            raise DataError("duplicate words in semantic space")


@dataclass(frozen=True)
class SimilarityMatrix:
    words: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        v = self.values
        if v.shape != (len(self.words), len(self.words)):
            raise ValueError("similarity matrix shape must match word count")
        if not np.allclose(v, v.T, atol=1e-12):
            raise DataError("similarity matrix must be symmetric")
        if (np.diagonal(v) != 1.0).any():
            raise DataError("similarity matrix diagonal must be exactly 1")
        if (np.abs(v) > 1.0 + 1e-9).any():
            raise DataError("similarity values must lie in [-1, 1]")


def topk_responses(scored: dict[str, dict[str, float]], stem_id: str, k: int) -> list[str]:
    """The k highest-scoring unique completions for a stem.

    Ties are broken by (score descending, word ascending); when fewer than k
    completions exist they are all returned.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if stem_id not in scored:
        raise LookupError(f"unknown stem {stem_id!r}")
    ranked = sorted(scored[stem_id].items(), key=lambda kv: (-kv[1], kv[0]))
    return [word for word, _ in ranked[:k]]


def cooccurrence_counts(topk_sets: list[list[str]]) -> CoocCounts:
    """Count unordered within-stem word pairs, symmetrically, zero diagonal."""
    vocab = sorted({w for group in topk_sets for w in group})
    index = {w: i for i, w in enumerate(vocab)}
    m = np.zeros((len(vocab), len(vocab)), dtype=np.int64)
    for group in topk_sets:
        uniq = sorted(set(group))
        for a in range(len(uniq)):
            for b in range(a + 1, len(uniq)):
                i, j = index[uniq[a]], index[uniq[b]]
                m[i, j] += 1
                m[j, i] += 1
    return CoocCounts(words=tuple(vocab), matrix=m, total=int(m.sum()))


def ppmi(cooc: CoocCounts) -> np.ndarray:
    """Positive pointwise mutual information of the pair counts.

    Joint probabilities are cell/total; marginals are row sums over the
    total. Cells with zero counts, and cells at or below independence, map
    to 0.
    """
    if cooc.total <= 0:
        raise DegenerateError("co-occurrence total is zero")
    m = cooc.matrix.astype(float)
    total = float(cooc.total)
    joint = m / total
    marginal = m.sum(axis=1) / total
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = joint / np.outer(marginal, marginal)
        values = np.log(ratio)
    values[~np.isfinite(values)] = 0.0
    np.maximum(values, 0.0, out=values)
    return values


def row_normalize(m: np.ndarray, words: tuple[str, ...] | None = None) -> np.ndarray:
    """Center and scale each row to mean 0 and population sd 1."""
    m = np.asarray(m, dtype=float)
    means = m.mean(axis=1, keepdims=True)
    sds = m.std(axis=1, keepdims=True)
    flat = np.nonzero(sds.ravel() == 0)[0]
    if len(flat):
        which = words[flat[0]] if words is not None else f"row {flat[0]}"
        raise DegenerateError(f"constant row for {which}; cannot normalize")
    return (m - means) / sds


def pca_project(
    m: np.ndarray, d: int, words: tuple[str, ...], source: str = "ppmi-pca"
) -> SemanticSpace:
    """Project rows onto the top-d right singular directions of m.

    No additional column centering is applied (rows are expected to be
    pre-normalized). Components are ordered by decreasing singular value and
    signed so each component's largest-magnitude entry is positive.
    """
    m = np.asarray(m, dtype=float)
    if not 1 <= d <= min(m.shape):
        raise ValueError(f"d must be in 1..{min(m.shape)}, got {d}")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    flip = np.sign(vt[np.arange(len(s)), np.argmax(np.abs(vt), axis=1)])
    flip[flip == 0] = 1.0
    u = u * flip
    projected = u[:, :d] * s[:d]
    return SemanticSpace(words=words, vectors=projected, source=source)


def cosine_similarity_matrix(space: SemanticSpace) -> SimilarityMatrix:
    """Pairwise cosine similarities; diagonal exactly 1."""
    norms = np.linalg.norm(space.vectors, axis=1)
    unit = space.vectors / norms[:, None]
    values = unit @ unit.T
    values = (values + values.T) / 2.0  # enforce exact symmetry
    np.clip(values, -1.0, 1.0, out=values)
    np.fill_diagonal(values, 1.0)
    return SimilarityMatrix(words=space.words, values=values)


def rsa_spearman(a: SimilarityMatrix, b: SimilarityMatrix) -> float:
    """Spearman correlation of the strict upper triangles of two matrices."""
    if a.words != b.words:
        raise CompatibilityError("similarity matrices are over different word sets")
    n = len(a.words)
    if n < MIN_SHARED_WORDS:
        raise InsufficientOverlapError(f"need at least {MIN_SHARED_WORDS} shared words, have {n}")
    iu = np.triu_indices(n, k=1)
    return spearman(PairedSeries(a.values[iu], b.values[iu]))


def intersect_spaces(a: SemanticSpace, b: SemanticSpace) -> tuple[SemanticSpace, SemanticSpace]:
    """Restrict both spaces to their common words (lowercase-folded keys).

    The shared words keep a's order and are relabeled with the folded form,
    so both outputs carry identical word tuples.
    """
    fold_a = _folded_index(a)
    fold_b = _folded_index(b)
    common = [w for w in (wa.lower() for wa in a.words) if w in fold_b]
    # preserve a's order; drop repeats if a had fold-distinct duplicates
    seen: set[str] = set()
    ordered = [w for w in common if not (w in seen or seen.add(w))]
    if len(ordered) < MIN_SHARED_WORDS:
        raise InsufficientOverlapError(
            f"spaces share only {len(ordered)} words; need {MIN_SHARED_WORDS}"
        )
    rows_a = [fold_a[w] for w in ordered]
    rows_b = [fold_b[w] for w in ordered]
    words = tuple(ordered)
    return (
        SemanticSpace(words=words, vectors=a.vectors[rows_a], source=a.source),
        SemanticSpace(words=words, vectors=b.vectors[rows_b], source=b.source),
    )


def _folded_index(space: SemanticSpace) -> dict[str, int]:
    folded: dict[str, int] = {}
    for i, w in enumerate(space.words):
        key = w.lower()
        if key in folded:
            raise DataError(f"space {space.source!r} has case-fold collision on {key!r}")
        folded[key] = i
    return folded


def mean_pool_embeddings(dump, select: dict[str, set[str]] | None = None) -> SemanticSpace:
    """Average each word's contextual embeddings across its occurrences.

    dump is an EmbeddingDump; when select maps stem ids to word sets, only
    occurrences of a selected word in a selected stem are pooled, and every
    selected word must occur at least once.
    """
    sums: dict[str, np.ndarray] = {}
    counts: dict[str, int] = {}
    for record in dump.records:
        if select is not None:
            wanted = select.get(record.stem_id)
            if wanted is None or record.word not in wanted:
                continue
        vec = dump.vector(record).astype(float)
        if record.word in sums:
            sums[record.word] += vec
            counts[record.word] += 1
        else:
            sums[record.word] = vec.copy()
            counts[record.word] = 1
    if select is not None:
        requested = {w for words in select.values() for w in words}
        missing = sorted(requested - set(sums))
        if missing:
            shown = ", ".join(repr(w) for w in missing[:20])
            raise CoverageError(
                f"{len(missing)} selected words have no embedding occurrences: {shown}",
                missing=missing,
            )
    if not sums:
        raise CoverageError("no embedding occurrences matched the selection")
    words = tuple(sorted(sums))
    vectors = np.stack([sums[w] / counts[w] for w in words])
    return SemanticSpace(words=words, vectors=vectors, source=dump.header.dataset)


def knn(sim: SimilarityMatrix, word: str, k: int) -> set[str]:
    """The k most similar words to the pivot, pivot excluded.

    Ties at the cutoff go to the lexicographically smaller word.
    """
    if word not in sim.words:
        raise LookupError(f"unknown word {word!r}")
    if not 1 <= k <= len(sim.words) - 1:
        raise ValueError(f"k must be in 1..{len(sim.words) - 1}, got {k}")
    pivot = sim.words.index(word)
    candidates = [
        (-sim.values[pivot, j], sim.words[j]) for j in range(len(sim.words)) if j != pivot
    ]
    candidates.sort()
    return {w for _, w in candidates[:k]}


def neighborhood_overlap(a: SemanticSpace, b: SemanticSpace, k: int) -> float:
    """Average Jaccard similarity of per-word k-NN sets across two spaces.

    The spaces must already be intersected (identical word tuples).
    """
    if a.words != b.words:
        raise CompatibilityError("spaces must be intersected before computing overlap")
    sim_a = cosine_similarity_matrix(a)
    sim_b = cosine_similarity_matrix(b)
    scores = []
    for word in a.words:
        na = knn(sim_a, word, k)
        nb = knn(sim_b, word, k)
        scores.append(len(na & nb) / len(na | nb))
    # fsum: the mean is correctly rounded, independent of accumulation order
    return math.fsum(scores) / len(scores)
