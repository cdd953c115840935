"""Desk-scale run configuration: corpus, architecture, and optimization knobs."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass

from ..errors import ArgumentError


@dataclass(frozen=True)
class RunConfig:
    # corpus
    corpus_seed: int = 0
    corpus_size: int = 700
    lexicon_size: int = 24
    length_min: int = 2
    length_max: int = 3
    cognate_fraction: float = 0.1
    noise_sigma: float = 0.1
    feature_dim: int = 8
    # architecture
    audio_layers: int = 4
    text_layers: int = 2
    decoder_layers: int = 2
    d_model: int = 64
    d_inner: int = 128
    n_heads: int = 2
    dropout: float = 0.1
    attn_dropout: float = 0.0
    word_dropout: float = 0.0
    emb_dropout: float = 0.0
    label_smoothing: float = 0.1
    # optimization
    batch_size: int = 32
    max_epochs: int = 20
    max_steps: int = 0  # 0 means no step cap
    base_factor: float = 1.0
    warmup: int = 300
    patience: int = 0  # 0 means train for max_epochs, keep the best
    finetune_max_epochs: int = 30
    finetune_patience: int = 1
    # evaluation
    eval_max_len: int = 64

    def __post_init__(self):
        if self.length_min < 1 or self.length_max < self.length_min:
            raise ArgumentError("need 1 <= length_min <= length_max")
        for name in ("corpus_size", "lexicon_size", "batch_size", "max_epochs",
                     "finetune_max_epochs", "eval_max_len", "feature_dim"):
            if getattr(self, name) < 1:
                raise ArgumentError(f"{name} must be >= 1")

    @classmethod
    def keys(cls):
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_dict(cls, data, complete=False):
        """Build from a mapping. Unknown keys are errors; with ``complete=True``
        every key must be present."""
        known = set(cls.keys())
        unknown = sorted(set(data) - known)
        if unknown:
            raise ArgumentError(f"unknown config keys: {unknown}; valid keys: {sorted(known)}")
        if complete:
            missing = [k for k in cls.keys() if k not in data]
            if missing:
                raise ArgumentError(f"missing config keys: {missing}")
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        clean = {}
        for key, value in data.items():
            want = {"int": int, "float": float}[types[key]]
            if isinstance(value, bool) or not isinstance(value, (int, float)) or (
                    want is int and not float(value).is_integer()):
                raise ArgumentError(f"config key {key!r} needs a {types[key]}, got {value!r}")
            clean[key] = want(value)
        return cls(**clean)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)

    def digest(self):
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


def load_run_config(path, base=None):
    """Read a JSON object of overrides on top of ``base`` (defaults if omitted)."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ArgumentError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ArgumentError(f"{path}: config must be a JSON object")
    merged = (base or RunConfig()).to_dict()
    RunConfig.from_dict(data)  # rejects unknown keys and bad types
    merged.update(data)
    return RunConfig.from_dict(merged, complete=True)
