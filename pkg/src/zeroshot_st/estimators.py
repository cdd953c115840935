"""scikit-learn style wrapper around multi-task training and greedy decoding.

``fit(X, y)`` takes aligned source and target sentences; the training setting
decides which directions are built from them. ``predict`` decodes text inputs
(strings) or audio inputs (``[F, D]`` frame arrays) under a chosen output tag.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .data.corpus import Lang, Sentence
from .data.datasets import SETTINGS, assemble_training_set, vocab_for_corpus
from .errors import ArgumentError
from .evaluation.decoding import decode_inputs
from .evaluation.metrics import bleu
from .model.config import ModelConfig
from .training.trainer import TrainRun, train


def check_sentences(texts, name="X"):
    """A non-empty list of non-empty strings."""
    if isinstance(texts, str):
        raise ArgumentError(f"{name} must be a sequence of sentences, not one string")
    texts = list(texts)
    if not texts:
        raise ArgumentError(f"{name} is empty")
    for i, t in enumerate(texts):
        if not isinstance(t, str) or not t.strip():
            raise ArgumentError(f"{name}[{i}] is not a non-empty string: {t!r}")
    return texts


def check_pairs(X, y):
    X, y = check_sentences(X, "X"), check_sentences(y, "y")
    if len(X) != len(y):
        raise ArgumentError(f"X has {len(X)} sentences but y has {len(y)}")
    return [(Sentence(a, Lang.SRC), Sentence(b, Lang.TGT)) for a, b in zip(X, y)]


def check_inputs(X, feature_dim):
    """Normalize predict inputs: strings stay strings, frames become float arrays."""
    if isinstance(X, (str, np.ndarray)) and not (isinstance(X, np.ndarray) and X.ndim == 3):
        X = [X]
    X = list(X)
    if not X:
        raise ArgumentError("no inputs to predict")
    kinds = {isinstance(x, str) for x in X}
    if len(kinds) > 1:
        raise ArgumentError("inputs mix text and audio")
    if kinds == {True}:
        return check_sentences(X), "text"
    frames = []
    for i, x in enumerate(X):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != feature_dim or x.shape[0] == 0:
            raise ArgumentError(f"input {i} must be a non-empty [F, {feature_dim}] frame array, "
                                f"got shape {x.shape}")
        if not np.isfinite(x).all():
            raise ArgumentError(f"input {i} has non-finite frames")
        frames.append(x)
    return frames, "audio"


class _PairCorpus:
    def __init__(self, pairs):
        self.pairs = pairs


class ZeroShotTranslator(BaseEstimator):
    """Multi-task seq2seq model with target-language tags.

    Parameters mirror the architecture and optimization knobs; ``setting``
    picks the trained directions (``plain`` trains ASR and MT only).
    """

    def __init__(self, setting="plain", d_model=32, d_inner=64, n_heads=2, audio_layers=4,
                 text_layers=2, decoder_layers=2, dropout=0.1, label_smoothing=0.1,
                 aux_weight=0.0, depi=False, max_epochs=10, batch_size=32, warmup=300,
                 base_factor=1.0, feature_dim=8, noise_sigma=0.1, random_state=0):
        self.setting = setting
        self.d_model = d_model
        self.d_inner = d_inner
        self.n_heads = n_heads
        self.audio_layers = audio_layers
        self.text_layers = text_layers
        self.decoder_layers = decoder_layers
        self.dropout = dropout
        self.label_smoothing = label_smoothing
        self.aux_weight = aux_weight
        self.depi = depi
        self.max_epochs = max_epochs
        self.batch_size = batch_size
        self.warmup = warmup
        self.base_factor = base_factor
        self.feature_dim = feature_dim
        self.noise_sigma = noise_sigma
        self.random_state = random_state

    def _model_config(self, vocab):
        return ModelConfig(vocab_size=len(vocab), audio_layers=self.audio_layers,
                           text_layers=self.text_layers, decoder_layers=self.decoder_layers,
                           d_model=self.d_model, d_inner=self.d_inner, n_heads=self.n_heads,
                           dropout=self.dropout, attn_dropout=0.0, word_dropout=0.0,
                           emb_dropout=0.0, label_smoothing=self.label_smoothing,
                           aux_weight=self.aux_weight, depi=self.depi,
                           feature_dim=self.feature_dim)

    def fit(self, X, y, X_valid=None, y_valid=None):
        if self.setting not in SETTINGS:
            raise ArgumentError(f"unknown setting {self.setting!r}; choose from {sorted(SETTINGS)}")
        pairs = check_pairs(X, y)
        valid = check_pairs(X_valid, y_valid) if X_valid is not None else []
        self.vocab_ = vocab_for_corpus(_PairCorpus(pairs + valid))
        kw = dict(seed=self.random_state, audio_seed=self.random_state,
                  noise_sigma=self.noise_sigma, feature_dim=self.feature_dim)
        datasets = assemble_training_set(pairs, self.setting, self.vocab_, **kw)
        valid_sets = assemble_training_set(valid, self.setting, self.vocab_, **kw) if valid \
            else []
        run = TrainRun(self._model_config(self.vocab_), self.vocab_, datasets, valid_sets,
                       seed=self.random_state, max_epochs=self.max_epochs,
                       batch_size=self.batch_size, base_factor=self.base_factor,
                       warmup=self.warmup)
        self.checkpoint_, self.log_ = train(run)
        self.model_ = self.checkpoint_.to_model(self.random_state)
        return self

    def predict(self, X, target_lang="TGT", max_len=64):
        """Greedy outputs for text or audio inputs, all under ``target_lang``."""
        check_is_fitted(self, "model_")
        inputs, kind = check_inputs(X, self.feature_dim)
        if kind == "text":
            inputs = [self.vocab_.encode(t) for t in inputs]
        return decode_inputs(self.model_, inputs, Lang(target_lang), max_len=max_len)

    def score(self, X, y, target_lang="TGT"):
        """Corpus BLEU of predictions against ``y``."""
        return bleu(check_sentences(y, "y"), self.predict(X, target_lang))
