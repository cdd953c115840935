"""Metrics, greedy decoding of datasets, and cascaded translation."""
from .decoding import cascade_translate, decode_inputs, decode_samples, translate_texts
from .metrics import (
    TokenLanguageStats,
    bleu,
    bleu_statistics,
    bleu_tokenize,
    edit_distance,
    normalize_for_wer,
    token_language_stats,
    wer,
)
from .report import MetricEntry, MetricsReport, evaluate_cascade, evaluate_model
