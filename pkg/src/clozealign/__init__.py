"""Toolkit for measuring alignment between language-model next-token
predictions and human cloze completion norms."""

from .bpe import (
    TokenizerSpec,
    bpe_decode,
    bpe_encode,
    byte_unicode_map,
    first_subword,
    load_tokenizer_spec,
)
from .norms import (
    ClozeNorms,
    ClozeResponse,
    SentenceStem,
    TokenizationMap,
    build_tokenization_map,
    load_cloze_norms,
    load_tokenization_map,
    response_subword_stats,
    save_tokenization_map,
)
from .ngram import (
    BackoffParams,
    NgramCounts,
    count_documents,
    count_ngrams,
    load_counts,
    merge_counts,
    save_counts,
    score_stems,
    stupid_backoff_score,
    unigram_score,
)
from .stats import (
    CalibrationCurve,
    PairedSeries,
    RegressionFit,
    bootstrap_ci,
    calibration_curve,
    logit,
    luce_renormalize,
    ols_fit,
    pearson,
    spearman,
    within_stem_ranks,
)
from .semspace import (
    CoocCounts,
    SemanticSpace,
    SimilarityMatrix,
    cooccurrence_counts,
    cosine_similarity_matrix,
    intersect_spaces,
    knn,
    mean_pool_embeddings,
    neighborhood_overlap,
    pca_project,
    ppmi,
    row_normalize,
    rsa_spearman,
    topk_responses,
)
from .dumps import (
    EmbeddingDump,
    PredictionDump,
    load_embedding_dump,
    load_prediction_dump,
)

__version__ = "0.1.0"
