"""Batched greedy decoding of whole datasets, and the cascaded pipeline."""
from __future__ import annotations

import numpy as np

from ..core.tensor import no_grad
from ..data.batching import pad_frames, pad_ids
from ..data.corpus import Lang
from ..errors import CascadeError

DEFAULT_MAX_LEN = 96


def encode_inputs(model, inputs, tag):
    """Encode a list of id arrays (text) or frame arrays (audio)."""
    with no_grad(), model.evaluating():
        if inputs[0].ndim == 2:
            frames, mask = pad_frames(inputs, model.config.feature_dim)
            return model.encode_audio(frames, tag, mask)
        ids, mask = pad_ids(inputs, model.vocab.pad_id)
        return model.encode_text(ids, tag, mask)


def decode_inputs(model, inputs, tag, batch_size=64, max_len=DEFAULT_MAX_LEN):
    """Greedy hypotheses (strings) for raw inputs, all under one output tag."""
    out = []
    for start in range(0, len(inputs), batch_size):
        chunk = inputs[start:start + batch_size]
        enc = encode_inputs(model, chunk, tag)
        out += [model.vocab.decode(ids) for ids in model.greedy_decode(enc, tag, max_len)]
    return out


def sample_inputs(samples):
    return [s.frames if s.modality == "audio" else s.input_ids for s in samples]


def decode_samples(model, samples, tag=None, batch_size=64, max_len=DEFAULT_MAX_LEN):
    """Decode dataset samples; ``tag`` overrides each sample's own target language."""
    if not samples:
        return []
    tag = samples[0].target_lang if tag is None else Lang(tag)
    return decode_inputs(model, sample_inputs(samples), tag, batch_size, max_len)


def cascade_translate(asr_model, mt_model, frames, batch_size=64, max_len=DEFAULT_MAX_LEN,
                      return_transcripts=False):
    """Transcribe audio with one model, then translate the transcripts with another."""
    try:
        transcripts = decode_inputs(asr_model, list(frames), Lang.SRC, batch_size, max_len)
    except Exception as exc:
        raise CascadeError("asr", exc) from exc
    translations = translate_texts(mt_model, transcripts, batch_size, max_len)
    return (translations, transcripts) if return_transcripts else translations


def translate_texts(mt_model, texts, batch_size=64, max_len=DEFAULT_MAX_LEN):
    """Second cascade stage: text in, TGT-tagged greedy translation out."""
    try:
        ids = [mt_model.vocab.encode(t) if t else np.array([mt_model.vocab.unk_id]) for t in texts]
        return decode_inputs(mt_model, ids, Lang.TGT, batch_size, max_len)
    except Exception as exc:
        raise CascadeError("mt", exc) from exc
