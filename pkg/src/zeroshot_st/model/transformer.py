"""Dual-encoder transformer with target-language tags.

Audio passes through private layers and then the shared stack; text passes
through the shared stack only, so both modalities share every text-encoder
parameter. The decoder concatenates the target-language embedding to every
input embedding and projects back to model width. All blocks are pre-norm.
"""
from __future__ import annotations

import contextlib
import logging
import math
from dataclasses import dataclass

import numpy as np

from ..core import tensor as T
from ..core.tensor import Tensor, no_grad
from ..data.corpus import Lang
from ..errors import ArgumentError, ContractError, DimensionError
from .params import init_parameters

log = logging.getLogger(__name__)


@dataclass
class EncoderOutput:
    states: Tensor  # [B, T, d]
    mask: np.ndarray  # [B, T], true at real positions

    @property
    def lengths(self):
        return self.mask.sum(axis=1)


_pe_cache = {}


def sinusoidal_positions(length, d):
    key = (length, d)
    if key not in _pe_cache:
        pos = np.arange(length)[:, None]
        i = np.arange(d)[None, :]
        angle = pos / np.power(10000.0, (2 * (i // 2)) / d)
        _pe_cache[key] = np.where(i % 2 == 0, np.sin(angle), np.cos(angle))
    return _pe_cache[key]


class Seq2SeqModel:
    """Parameters plus the forward computations of the multi-task model."""

    def __init__(self, config, vocab, params=None, seed=0):
        if len(vocab) != config.vocab_size:
            raise ArgumentError(f"vocab has {len(vocab)} tokens, config says {config.vocab_size}")
        self.config = config
        self.vocab = vocab
        self.params = params if params is not None else init_parameters(config, seed)
        self.training = False
        self.rng = np.random.default_rng([seed, 3])

    # ------------------------------------------------------------- helpers

    def train(self, mode=True):
        self.training = mode
        return self

    def eval(self):
        return self.train(False)

    @contextlib.contextmanager
    def evaluating(self):
        previous = self.training
        self.training = False
        try:
            yield self
        finally:
            self.training = previous

    def reseed(self, seed):
        self.rng = np.random.default_rng([seed, 3])

    def _p(self, name):
        return self.params[name]

    def _tag_ids(self, tags, batch):
        if isinstance(tags, (Lang, str)):
            tags = self.vocab.tag_id(tags)
        tags = np.asarray(tags, dtype=np.int64).reshape(-1)
        if tags.size == 1 and batch > 1:
            tags = np.repeat(tags, batch)
        if tags.size != batch:
            raise ArgumentError(f"{tags.size} language tags for a batch of {batch}")
        valid = set(self.vocab.tag_ids.values())
        if not set(tags.tolist()) <= valid:
            raise ArgumentError(f"not a language tag id: {sorted(set(tags.tolist()) - valid)}")
        return tags

    def _drop(self, x, rate):
        return T.dropout(x, rate, self.rng, self.training)

    def _linear(self, x, name):
        return T.linear(x, self._p(f"{name}.w"), self._p(f"{name}.b"))

    def _norm(self, x, name):
        return T.layer_norm(x, self._p(f"{name}.g"), self._p(f"{name}.b"), self.config.ln_eps)

    def _attend(self, q, k, v, blocked):
        h = self.config.n_heads
        out = T.attention(T.split_heads(q, h), T.split_heads(k, h), T.split_heads(v, h), blocked,
                          self.config.attn_dropout, self.rng, self.training)
        return T.merge_heads(out)

    def _self_attention(self, x, blocked, name):
        qkv = self._linear(x, f"{name}.qkv")
        d = self.config.d_model
        q, k, v = (T.getitem(qkv, (Ellipsis, slice(i * d, (i + 1) * d))) for i in range(3))
        return self._linear(self._attend(q, k, v, blocked), f"{name}.o")

    def _cross_attention(self, x, memory, blocked, name):
        q = self._linear(x, f"{name}.q")
        kv = self._linear(memory, f"{name}.kv")
        d = self.config.d_model
        k = T.getitem(kv, (Ellipsis, slice(0, d)))
        v = T.getitem(kv, (Ellipsis, slice(d, 2 * d)))
        return self._linear(self._attend(q, k, v, blocked), f"{name}.o")

    def _ffn(self, x, name):
        h = T.relu(self._linear(x, f"{name}.w1"))
        return self._linear(self._drop(h, self.config.dropout), f"{name}.w2")

    def encoder_layer(self, x, blocked, name, keep_residual=True):
        """One pre-norm encoder layer. ``keep_residual=False`` drops the
        residual around self-attention (the DEPI variant)."""
        a = self._drop(self._self_attention(self._norm(x, f"{name}.ln1"), blocked, f"{name}.attn"),
                       self.config.dropout)
        x = depi_transform(x, a, keep_residual)
        f = self._drop(self._ffn(self._norm(x, f"{name}.ln2"), f"{name}.ffn"), self.config.dropout)
        return T.add(x, f)

    def _shared_stack(self, x, mask):
        blocked = ~mask[:, None, None, :]
        cfg = self.config
        for j in range(cfg.text_layers):
            keep = not (cfg.depi and j == cfg.depi_layer)
            x = self.encoder_layer(x, blocked, f"shared.layers.{j}", keep_residual=keep)
        return self._norm(x, "shared.norm")

    def _embed_tokens(self, ids):
        d = self.config.d_model
        x = T.embedding(self._p("embed.tokens"), ids) * math.sqrt(d)
        return T.token_dropout(x, self.config.word_dropout, self.rng, self.training)

    def _add_positions(self, x):
        pe = sinusoidal_positions(x.shape[1], self.config.d_model)
        return self._drop(T.add(x, pe), self.config.emb_dropout)

    # ------------------------------------------------------------ encoders

    def encode_text(self, ids, tags, mask=None):
        """Encode token ids [B, T] (or one 1-D sequence) with a tag in front."""
        ids = np.asarray(ids, dtype=np.int64)
        if ids.ndim == 1:
            ids = ids[None, :]
        if ids.shape[1] == 0:
            raise ArgumentError("cannot encode an empty text sequence")
        if mask is None:
            mask = np.ones(ids.shape, dtype=bool)
        tags = self._tag_ids(tags, ids.shape[0])
        ids = np.where(mask, ids, self.vocab.pad_id)
        mask = np.concatenate([np.ones((ids.shape[0], 1), dtype=bool), mask], axis=1)
        # the tag itself is exempt from word dropout
        tag = T.embedding(self._p("embed.tokens"), tags[:, None]) * math.sqrt(self.config.d_model)
        x = self._add_positions(T.concat([tag, self._embed_tokens(ids)], axis=1))
        return EncoderOutput(self._shared_stack(x, mask), mask)

    def encode_audio(self, frames, tags, mask=None):
        """Encode frames [B, F, D] (or one [F, D] utterance) with a tag frame in front."""
        frames = np.asarray(frames, dtype=np.float64)
        if frames.ndim == 2:
            frames = frames[None]
        if frames.ndim != 3 or frames.shape[-1] != self.config.feature_dim:
            raise ArgumentError(
                f"audio frames must have feature dim {self.config.feature_dim}, got {frames.shape}")
        bsz = frames.shape[0]
        if mask is None:
            mask = np.ones(frames.shape[:2], dtype=bool)
        tags = self._tag_ids(tags, bsz)
        lang_index = tags - self.vocab.tag_id(Lang.SRC)
        tag_frames = T.reshape(T.embedding(self._p("audio.tags"), lang_index),
                               (bsz, 1, self.config.feature_dim))
        x = T.concat([tag_frames, Tensor(np.where(mask[..., None], frames, 0.0))], axis=1)
        mask = np.concatenate([np.ones((bsz, 1), dtype=bool), mask], axis=1)
        x = self._add_positions(self._linear(x, "audio.proj"))
        blocked = ~mask[:, None, None, :]
        for i in range(self.config.private_audio_layers):
            x = self.encoder_layer(x, blocked, f"audio.layers.{i}")
        return EncoderOutput(self._shared_stack(x, mask), mask)

    def encode_batch(self, batch):
        if batch.modality == "audio":
            return self.encode_audio(batch.inputs, batch.tags, batch.input_mask)
        return self.encode_text(batch.inputs, batch.tags, batch.input_mask)

    # ------------------------------------------------------------- decoder

    def decode(self, enc, prefix_ids, tags):
        """Teacher-forced logits [B, L, V] for every prefix position."""
        prefix = np.asarray(prefix_ids, dtype=np.int64)
        if prefix.ndim == 1:
            prefix = prefix[None, :]
        bsz, length = prefix.shape
        tags = self._tag_ids(tags, bsz)
        d = self.config.d_model
        x = self._embed_tokens(prefix)
        lang = T.embedding(self._p("embed.tokens"), np.repeat(tags[:, None], length, axis=1))
        x = self._linear(T.concat([x, lang * math.sqrt(d)], axis=-1), "dec.lang_proj")
        x = self._add_positions(x)
        causal = np.triu(np.ones((length, length), dtype=bool), k=1)
        self_blocked = causal[None, None] | (prefix == self.vocab.pad_id)[:, None, None, :]
        cross_blocked = ~enc.mask[:, None, None, :]
        for k in range(self.config.decoder_layers):
            name = f"dec.layers.{k}"
            a = self._self_attention(self._norm(x, f"{name}.ln1"), self_blocked, f"{name}.self")
            x = T.add(x, self._drop(a, self.config.dropout))
            c = self._cross_attention(self._norm(x, f"{name}.ln2"), enc.states, cross_blocked,
                                      f"{name}.cross")
            x = T.add(x, self._drop(c, self.config.dropout))
            f = self._ffn(self._norm(x, f"{name}.ln3"), f"{name}.ffn")
            x = T.add(x, self._drop(f, self.config.dropout))
        x = self._norm(x, "dec.norm")
        emb = self._p("embed.tokens")
        return T.add(T.matmul(x, T.transpose(emb)), self._p("out.bias"))

    def greedy_decode(self, enc, tags, max_len=64):
        """Argmax decoding from ``<bos>`` until ``<eos>`` or ``max_len`` tokens."""
        bsz = enc.states.shape[0]
        tags = self._tag_ids(tags, bsz)
        v = self.vocab
        prefix = np.full((bsz, 1), v.bos_id, dtype=np.int64)
        done = np.zeros(bsz, dtype=bool)
        with no_grad(), self.evaluating():
            for _ in range(max_len):
                logits = self.decode(enc, prefix, tags).data[:, -1]
                nxt = logits.argmax(axis=-1)
                nxt = np.where(done, v.pad_id, nxt)
                done |= nxt == v.eos_id
                prefix = np.concatenate([prefix, nxt[:, None]], axis=1)
                if done.all():
                    break
        out = []
        for row in prefix[:, 1:]:
            stop = np.flatnonzero((row == v.eos_id) | (row == v.pad_id))
            out.append(row[: stop[0]] if stop.size else row)
        return out


def depi_transform(layer_input, sublayer_output, keep_residual=True):
    """Residual join of one sublayer; without the residual only the sublayer output remains."""
    if keep_residual:
        return T.add(sublayer_output, layer_input)
    return sublayer_output


def mean_pool(enc):
    """Average encoder states over real positions: [B, d]."""
    counts = enc.mask.sum(axis=1)
    if (counts == 0).any():
        raise ArgumentError("mean_pool over a sequence with no unmasked positions")
    weights = enc.mask[..., None] / counts[:, None, None]
    return T.tsum(T.mul(enc.states, weights), axis=1)


def aux_loss(text_out, audio_out):
    """Mean over dimensions of the squared difference of mean-pooled states,
    averaged over the batch."""
    a, b = mean_pool(text_out), mean_pool(audio_out)
    if a.shape != b.shape:
        raise ContractError(f"pooled shapes differ: {a.shape} vs {b.shape}")
    diff = T.sub(a, b)
    return T.mean(T.mul(diff, diff))


def pooled_squared_error(text_out, audio_out):
    """Per-pair aux distance as a plain array (no graph)."""
    with no_grad():
        a, b = mean_pool(text_out).data, mean_pool(audio_out).data
    return ((a - b) ** 2).mean(axis=-1)


_notified = set()


def forward_loss(model, batch, compute_aux=None):
    """(total, ce, aux) for one batch; ``total = ce + aux_weight * aux``.

    The auxiliary term is taken on ASR batches, pairing each utterance with its
    own transcript encoded as text under the same tag.
    """
    cfg = model.config
    enc = model.encode_batch(batch)
    logits = model.decode(enc, batch.decoder_in, batch.tags)
    ce = T.cross_entropy_label_smoothed(logits, batch.targets, cfg.label_smoothing,
                                        model.vocab.pad_id)
    want_aux = cfg.aux_weight > 0 if compute_aux is None else compute_aux
    aux = Tensor(0.0)
    if want_aux:
        if batch.direction.is_asr and batch.transcript_ids is not None:
            text_enc = model.encode_text(batch.transcript_ids, batch.tags, batch.transcript_mask)
            aux = aux_loss(text_enc, enc)
        elif cfg.aux_weight > 0 and batch.direction.label not in _notified:
            _notified.add(batch.direction.label)
            log.info("no aligned text/audio pair in %s batches; aux loss is 0 there",
                     batch.direction.label)
    total = T.add(ce, T.mul(aux, cfg.aux_weight)) if cfg.aux_weight > 0 else ce
    return total, ce, aux
