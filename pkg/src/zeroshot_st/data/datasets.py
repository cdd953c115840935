"""Samples, per-direction datasets, and training-set assembly per setting."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ArgumentError
from .audio import default_codebook, render_pseudo_audio, utterance_seed
from .corpus import Lang, reverse_language
from .vocab import build_vocab

TEXT, AUDIO = "text", "audio"


@dataclass(frozen=True)
class Direction:
    input_lang: Lang
    modality: str
    output_lang: Lang

    @property
    def label(self):
        return f"{self.input_lang}-{self.modality}->{self.output_lang}-text"

    @property
    def is_asr(self):
        """Audio in, transcript of that same audio out."""
        return self.modality == AUDIO and self.input_lang == self.output_lang

    @classmethod
    def parse(cls, label):
        try:
            left, right = label.split("->")
            in_lang, modality = left.rsplit("-", 1)
            out_lang = right.rsplit("-", 1)[0]
            return cls(Lang(in_lang), modality, Lang(out_lang))
        except ValueError:
            raise ArgumentError(f"cannot parse direction label {label!r}") from None

    def __str__(self):
        return self.label


ASR = Direction(Lang.SRC, AUDIO, Lang.SRC)
MT = Direction(Lang.SRC, TEXT, Lang.TGT)
ST = Direction(Lang.SRC, AUDIO, Lang.TGT)
AUDIO_TO_REV = Direction(Lang.SRC, AUDIO, Lang.SRC_R)
TEXT_TO_REV = Direction(Lang.SRC, TEXT, Lang.SRC_R)
REV_TO_SRC = Direction(Lang.SRC_R, TEXT, Lang.SRC)
REV_TO_TGT = Direction(Lang.SRC_R, TEXT, Lang.TGT)
TGT_ASR = Direction(Lang.TGT, AUDIO, Lang.TGT)
TGT_MT = Direction(Lang.TGT, TEXT, Lang.SRC)

MAIN = (ASR, MT)
AUGMENT_A = (AUDIO_TO_REV, TEXT_TO_REV)
AUGMENT_B = (REV_TO_SRC, REV_TO_TGT)
OPPOSITE = (TGT_ASR, TGT_MT)

SETTINGS = {
    "plain": (MAIN, ()),
    "augment-a": (MAIN, AUGMENT_A),
    "augment-b": (MAIN, AUGMENT_B),
    "augment-c": (MAIN, AUGMENT_A + AUGMENT_B),
    "opposite": (MAIN, OPPOSITE),
    "asr": ((ASR,), ()),
    "mt": ((MT,), ()),
    "st": ((ST,), ()),
    "asr+mt+st": ((ASR, MT, ST), ()),
}


@dataclass
class Sample:
    """One training pair. The language tag is added by the model encoders."""

    direction: Direction
    target_lang: Lang
    output_ids: np.ndarray
    output_text: str
    input_ids: np.ndarray | None = None
    frames: np.ndarray | None = None
    input_text: str = ""
    transcript_ids: np.ndarray | None = None

    @property
    def modality(self):
        return self.direction.modality

    def tagged_input(self, vocab):
        """Input with its language tag in front: ids for text, (tag id, frames) for audio."""
        tag = vocab.tag_id(self.target_lang)
        if self.modality == TEXT:
            return np.concatenate([[tag], self.input_ids])
        return tag, self.frames


@dataclass
class Dataset:
    direction: Direction
    samples: list = field(default_factory=list)

    @property
    def name(self):
        return self.direction.label

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)


def texts_for(pair):
    src, tgt = pair
    return {Lang.SRC: src.text, Lang.TGT: tgt.text, Lang.SRC_R: reverse_language(src.text)}


def vocab_for_corpus(corpus):
    """Vocabulary covering all three languages of every pair in the corpus."""
    return build_vocab([list(texts_for(p).values()) for p in corpus.pairs])


def make_sample(pair, direction, vocab, audio_seed=0, noise_sigma=0.1, feature_dim=8):
    texts = texts_for(pair)
    in_text = texts[direction.input_lang]
    out_text = texts[direction.output_lang]
    sample = Sample(direction=direction, target_lang=direction.output_lang,
                    output_ids=vocab.encode(out_text), output_text=out_text, input_text=in_text)
    if direction.modality == TEXT:
        sample.input_ids = vocab.encode(in_text)
    else:
        utt = render_pseudo_audio(in_text, utterance_seed(in_text, audio_seed), noise_sigma,
                                  default_codebook(feature_dim))
        sample.frames = utt.frames
        sample.transcript_ids = vocab.encode(in_text)
    return sample


def make_dataset(pairs, direction, vocab, audio_seed=0, noise_sigma=0.1, feature_dim=8):
    return Dataset(direction, [make_sample(p, direction, vocab, audio_seed, noise_sigma, feature_dim)
                               for p in pairs])


def assemble_training_set(pairs, setting, vocab, seed=0, audio_seed=0, noise_sigma=0.1,
                          feature_dim=8):
    """Datasets for one training setting.

    Main directions use every pair. Artificial (augment) and opposite
    directions each use a seeded subset of ``ceil(N / 2)`` pairs.
    """
    if setting not in SETTINGS:
        raise ArgumentError(f"unknown setting {setting!r}; choose from {sorted(SETTINGS)}")
    main, extra = SETTINGS[setting]
    kw = dict(audio_seed=audio_seed, noise_sigma=noise_sigma, feature_dim=feature_dim)
    out = [make_dataset(pairs, d, vocab, **kw) for d in main]
    if extra:
        order = np.random.default_rng([seed, 41]).permutation(len(pairs))
        subset = [pairs[i] for i in sorted(order[: math.ceil(len(pairs) / 2)])]
        out += [make_dataset(subset, d, vocab, **kw) for d in extra]
    return out
