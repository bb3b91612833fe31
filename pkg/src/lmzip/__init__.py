"""Predictor-driven lossless text compression and entropy estimation."""

from .container import compress_bytes, decompress_bytes
from .metrics import estimate_h_ub, measure_stream
from .predictor import PMF_TOTAL, AdaptiveModel, FixedModel, UniformModel, quantize_scores
from .tokenizer import Vocabulary, preprocess_text8, tokenize, detokenize

__all__ = [
    "AdaptiveModel",
    "FixedModel",
    "PMF_TOTAL",
    "UniformModel",
    "Vocabulary",
    "compress_bytes",
    "decompress_bytes",
    "detokenize",
    "estimate_h_ub",
    "measure_stream",
    "preprocess_text8",
    "quantize_scores",
    "tokenize",
]
