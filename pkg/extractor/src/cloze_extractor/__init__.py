"""Extraction of prediction dumps, embedding dumps and tokenization maps
from pretrained autoregressive checkpoints."""

from .extract import (
    LoadedModel,
    decode_top_words,
    emit_tokenization_map,
    encode_continuation,
    extract_embeddings,
    extract_predictions,
    full_vocabulary_rank,
    load_model,
    next_token_distribution,
    pooled_embedding,
)
from .formats import (
    NormStem,
    read_norms_csv,
    write_embedding_dump,
    write_prediction_dump,
    write_tokenization_map,
)

__version__ = "0.1.0"
