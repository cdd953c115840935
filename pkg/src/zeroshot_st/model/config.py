"""Architecture hyperparameters."""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass

from ..errors import ArgumentError


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    audio_layers: int = 4
    text_layers: int = 2
    decoder_layers: int = 2
    d_model: int = 32
    d_inner: int = 64
    n_heads: int = 4
    dropout: float = 0.2
    attn_dropout: float = 0.2
    word_dropout: float = 0.1
    emb_dropout: float = 0.1
    label_smoothing: float = 0.1
    aux_weight: float = 0.0
    depi: bool = False
    feature_dim: int = 8
    ln_eps: float = 1e-5

    def __post_init__(self):
        if self.text_layers < 1 or self.decoder_layers < 1:
            raise ArgumentError("need at least one text-encoder and one decoder layer")
        if self.text_layers > self.audio_layers:
            raise ArgumentError(
                f"text layers ({self.text_layers}) exceed audio layers ({self.audio_layers}); "
                "the text stack must be the top of the audio stack")
        if self.aux_weight < 0:
            raise ArgumentError(f"aux weight must be >= 0, got {self.aux_weight}")
        if self.d_model % self.n_heads:
            raise ArgumentError(f"d_model {self.d_model} not divisible by {self.n_heads} heads")
        for name in ("dropout", "attn_dropout", "word_dropout", "emb_dropout", "label_smoothing"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ArgumentError(f"{name} must lie in [0, 1)")

    @property
    def private_audio_layers(self):
        return self.audio_layers - self.text_layers

    @property
    def depi_layer(self):
        """0-based index, within the shared stack, of the layer without residuals.

        The 1-based middle layer ``ceil(text_layers / 2)``: with 12 shared layers
        it is layer 6, leaving 5 shared layers below it.
        """
        return math.ceil(self.text_layers / 2) - 1

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - fields
        if unknown:
            raise ArgumentError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**data)


def full_config(vocab_size):
    """Full-size multi-task configuration (32 audio / 12 shared text / 12 decoder layers)."""
    return ModelConfig(vocab_size=vocab_size, audio_layers=32, text_layers=12, decoder_layers=12,
                       d_model=512, d_inner=2048, n_heads=8)


def micro_config(vocab_size, **overrides):
    """2 private audio + 2 shared + 2 decoder layers at width 16."""
    base = dict(vocab_size=vocab_size, audio_layers=4, text_layers=2, decoder_layers=2,
                d_model=16, d_inner=32, n_heads=2)
    base.update(overrides)
    return ModelConfig(**base)
