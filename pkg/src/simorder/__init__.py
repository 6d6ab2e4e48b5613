"""Similarity-order post-processing and evaluation of word embeddings."""

__version__ = "0.1.0"

from .embeddings import (EmbeddingFormatError, EmbeddingMatrix, Vocabulary, load_embeddings,  # noqa: E402
                         lookup, normalize_rows, save_embeddings)
from .transform import (EigenBasis, EigenConvergenceError, TransformSpec, apply_transform,  # noqa: E402
                        gram, make_transform, pairwise_similarity, precompute_rotated,
                        scale_rotated, sym_eig)

__all__ = [
    "EigenBasis", "EigenConvergenceError", "EmbeddingFormatError", "EmbeddingMatrix",
    "TransformSpec", "Vocabulary", "apply_transform", "gram", "load_embeddings", "lookup",
    "make_transform", "normalize_rows", "pairwise_similarity", "precompute_rotated",
    "save_embeddings", "scale_rotated", "sym_eig",
]
