"""Padding samples into dense batch arrays."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ArgumentError
from .datasets import AUDIO, TEXT


def pad_ids(seqs, pad_id):
    """Right-pad integer sequences; returns (ids[B, T], mask[B, T])."""
    width = max((len(s) for s in seqs), default=0)
    ids = np.full((len(seqs), width), pad_id, dtype=np.int64)
    mask = np.zeros((len(seqs), width), dtype=bool)
    for i, s in enumerate(seqs):
        ids[i, : len(s)] = s
        mask[i, : len(s)] = True
    return ids, mask


def pad_frames(frame_list, feature_dim):
    width = max((f.shape[0] for f in frame_list), default=0)
    out = np.zeros((len(frame_list), width, feature_dim))
    mask = np.zeros((len(frame_list), width), dtype=bool)
    for i, f in enumerate(frame_list):
        out[i, : f.shape[0]] = f
        mask[i, : f.shape[0]] = True
    return out, mask


@dataclass
class Batch:
    direction: object
    modality: str
    tags: np.ndarray
    inputs: np.ndarray  # token ids [B, T] or frames [B, F, D]
    input_mask: np.ndarray
    decoder_in: np.ndarray  # <bos> + output
    targets: np.ndarray  # output + <eos>
    transcript_ids: np.ndarray | None = None
    transcript_mask: np.ndarray | None = None

    @property
    def size(self):
        return len(self.tags)

    @property
    def n_target_tokens(self):
        return int((self.targets != 0).sum())  # pad id is 0


def collate(samples, vocab, feature_dim=8):
    if not samples:
        raise ArgumentError("cannot collate an empty batch")
    modality = samples[0].modality
    if any(s.modality != modality for s in samples):
        raise ArgumentError("a batch must not mix input modalities")
    tags = np.array([vocab.tag_id(s.target_lang) for s in samples], dtype=np.int64)
    if modality == TEXT:
        inputs, mask = pad_ids([s.input_ids for s in samples], vocab.pad_id)
    else:
        inputs, mask = pad_frames([s.frames for s in samples], feature_dim)
    dec_in, _ = pad_ids([np.concatenate([[vocab.bos_id], s.output_ids]) for s in samples],
                        vocab.pad_id)
    targets, _ = pad_ids([np.concatenate([s.output_ids, [vocab.eos_id]]) for s in samples],
                         vocab.pad_id)
    batch = Batch(samples[0].direction, modality, tags, inputs, mask, dec_in, targets)
    if modality == AUDIO and all(s.transcript_ids is not None for s in samples):
        batch.transcript_ids, batch.transcript_mask = pad_ids(
            [s.transcript_ids for s in samples], vocab.pad_id)
    return batch
