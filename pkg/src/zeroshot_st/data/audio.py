"""Pseudo-audio: text rendered as noisy, variable-rate frame sequences."""
from __future__ import annotations

import string
import zlib
from dataclasses import dataclass

import numpy as np

from ..errors import RenderError

CODEBOOK_CHARS = string.ascii_lowercase + " .,!?'-"
REPEATS = (2, 3, 4)


@dataclass(frozen=True)
class UtteranceFrames:
    frames: np.ndarray
    source_text: str

    @property
    def n_frames(self):
        return self.frames.shape[0]


class Codebook:
    """Fixed random vector per character; case is not audible."""

    def __init__(self, feature_dim=8, seed=1234, chars=CODEBOOK_CHARS):
        rng = np.random.default_rng([seed, feature_dim])
        self.feature_dim = feature_dim
        self.vectors = {ch: rng.standard_normal(feature_dim) for ch in chars}

    def __contains__(self, ch):
        return ch.lower() in self.vectors

    def lookup(self, ch):
        try:
            return self.vectors[ch.lower()]
        except KeyError:
            raise RenderError(f"character {ch!r} has no codebook entry") from None


_default_codebooks = {}


def default_codebook(feature_dim=8):
    if feature_dim not in _default_codebooks:
        _default_codebooks[feature_dim] = Codebook(feature_dim)
    return _default_codebooks[feature_dim]


def utterance_seed(text, seed):
    """Stable per-utterance seed so the same sentence always sounds the same."""
    return [seed, zlib.crc32(text.encode("utf-8"))]


def render_pseudo_audio(sentence, seed, noise_sigma=0.1, codebook=None, feature_dim=8):
    """Render each character as 2-4 repeated codebook frames plus Gaussian noise."""
    text = getattr(sentence, "text", sentence)
    codebook = codebook or default_codebook(feature_dim)
    vectors = [codebook.lookup(ch) for ch in text]
    rng = np.random.default_rng(seed)
    repeats = rng.choice(REPEATS, size=len(text))
    if vectors:
        frames = np.repeat(np.stack(vectors), repeats, axis=0)
    else:
        frames = np.zeros((0, codebook.feature_dim))
    if noise_sigma > 0:
        frames = frames + noise_sigma * rng.standard_normal(frames.shape)
    return UtteranceFrames(frames, text)
