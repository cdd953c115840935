"""Experiment preset catalog.

A preset fixes the training setting (which directions are trained), the
auxiliary-loss weight, the residual-removal switch, and whether the run is a
fine-tune of an earlier checkpoint.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ArgumentError

DATA_PORTIONS = (0.10, 0.25, 0.33, 1.0)
DEFAULT_AUX_WEIGHT = 5.0

TRAIN, CASCADE, FINETUNE = "train", "cascade", "finetune"


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    kind: str
    setting: str = "plain"
    aux_weight: float = 0.0
    depi: bool = False
    data_portion: float = 1.0
    st_portion: float = 0.10
    seed: int = 0

    @property
    def zero_shot(self):
        """Trained without any audio-to-translation pairs."""
        return self.kind == TRAIN and self.setting not in ("st", "asr+mt+st")

    @property
    def evaluates(self):
        """Tasks scored for this preset."""
        if self.kind == TRAIN and self.setting in ("asr", "mt", "st"):
            return (self.setting.upper(),)
        return ("ASR", "MT", "ST")

    @property
    def analyzable(self):
        return "ASR" in self.evaluates and "MT" in self.evaluates


_BASE = {
    "single-asr": dict(kind=TRAIN, setting="asr"),
    "single-mt": dict(kind=TRAIN, setting="mt"),
    "single-st": dict(kind=TRAIN, setting="st"),
    "cascade": dict(kind=CASCADE),
    "plain-zs": dict(kind=TRAIN, setting="plain"),
    "depi": dict(kind=TRAIN, setting="plain", depi=True),
    "augment-a": dict(kind=TRAIN, setting="augment-a"),
    "augment-b": dict(kind=TRAIN, setting="augment-b"),
    "augment-c": dict(kind=TRAIN, setting="augment-c"),
    "opposite": dict(kind=TRAIN, setting="opposite"),
    "opposite+aux": dict(kind=TRAIN, setting="opposite", aux_weight=DEFAULT_AUX_WEIGHT),
    "augment+aux": dict(kind=TRAIN, setting="augment-c", aux_weight=DEFAULT_AUX_WEIGHT),
    "ft-st": dict(kind=FINETUNE, setting="st"),
    "ft-mix": dict(kind=FINETUNE, setting="asr+mt+st"),
}

CATALOG = {
    "single-asr": "audio -> transcript only",
    "single-mt": "text -> translation only",
    "single-st": "direct end-to-end audio -> translation, trained from scratch",
    "cascade": "separately trained ASR and MT models composed at inference",
    "plain-zs": "multi-task ASR + MT with target-language tags, zero-shot ST",
    "depi": "plain-zs without the self-attention residual of the middle shared layer",
    "aux(<weight>)": "plain-zs plus weighted mean-pooled text/audio distance, e.g. aux(5.0)",
    "augment-a": "plain-zs plus SRC -> SRC-R from audio and from text",
    "augment-b": "plain-zs plus SRC-R -> SRC and SRC-R -> TGT from text",
    "augment-c": "plain-zs plus both augment-a and augment-b directions",
    "opposite": "plain-zs plus TGT audio -> TGT text and TGT text -> SRC text",
    "opposite+aux": "opposite with aux weight 5",
    "augment+aux": "augment-c with aux weight 5 (usually fine-tuned from plain-zs via --init-from)",
    "ft-st": "fine-tune --init-from on the ST portion, early-stopped",
    "ft-mix": "fine-tune --init-from on ASR + MT + ST portions, early-stopped",
}

_AUX = re.compile(r"^aux\((\d+(?:\.\d*)?)\)$")


def catalog_text():
    width = max(map(len, CATALOG))
    return "\n".join(f"  {name:<{width}}  {text}" for name, text in CATALOG.items())


def resolve_preset(name, data_portion=1.0, st_portion=0.10, seed=0):
    """Look up a preset by name; ``aux(w)`` accepts any non-negative weight."""
    m = _AUX.match(name)
    if m:
        spec = dict(kind=TRAIN, setting="plain", aux_weight=float(m.group(1)))
    elif name in _BASE:
        spec = dict(_BASE[name])
    else:
        raise ArgumentError(f"unknown preset {name!r}; available presets:\n{catalog_text()}")
    if not any(abs(data_portion - p) < 1e-9 for p in DATA_PORTIONS):
        raise ArgumentError(f"data portion must be one of {DATA_PORTIONS}, got {data_portion}")
    if not 0 < st_portion <= 1:
        raise ArgumentError(f"ST portion must lie in (0, 1], got {st_portion}")
    return ExperimentPreset(name=name, data_portion=data_portion, st_portion=st_portion,
                            seed=seed, **spec)
