"""Named parameter storage and initialization."""
from __future__ import annotations

import numpy as np

from ..core.tensor import Tensor

N_LANG_TAGS = 3


class ParameterStore(dict):
    """Name -> Tensor. Shared layers live under a single ``shared.*`` name."""

    def zero_grad(self):
        for p in self.values():
            p.grad = np.zeros_like(p.data)

    def state(self):
        return {k: p.data.copy() for k, p in self.items()}

    def load_state(self, state):
        missing = set(self) ^ set(state)
        if missing:
            raise KeyError(f"parameter names differ: {sorted(missing)}")
        for k, arr in state.items():
            if arr.shape != self[k].shape:
                raise ValueError(f"{k}: shape {arr.shape} != {self[k].shape}")
            self[k].data = np.array(arr, dtype=np.float64)

    def n_values(self):
        return sum(p.size for p in self.values())

    def round_to_float32(self):
        for p in self.values():
            p.data = p.data.astype(np.float32).astype(np.float64)


def _uniform(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def _add_linear(store, rng, name, fan_in, fan_out):
    store[f"{name}.w"] = Tensor(_uniform(rng, fan_in, fan_out), True, f"{name}.w")
    store[f"{name}.b"] = Tensor(np.zeros(fan_out), True, f"{name}.b")


def _add_norm(store, name, d):
    store[f"{name}.g"] = Tensor(np.ones(d), True, f"{name}.g")
    store[f"{name}.b"] = Tensor(np.zeros(d), True, f"{name}.b")


def _add_attention(store, rng, name, d, cross):
    if cross:
        _add_linear(store, rng, f"{name}.q", d, d)
        _add_linear(store, rng, f"{name}.kv", d, 2 * d)
    else:
        _add_linear(store, rng, f"{name}.qkv", d, 3 * d)
    _add_linear(store, rng, f"{name}.o", d, d)


def _add_ffn(store, rng, name, d, inner):
    _add_linear(store, rng, f"{name}.w1", d, inner)
    _add_linear(store, rng, f"{name}.w2", inner, d)


def _add_encoder_layer(store, rng, name, cfg):
    _add_norm(store, f"{name}.ln1", cfg.d_model)
    _add_attention(store, rng, f"{name}.attn", cfg.d_model, cross=False)
    _add_norm(store, f"{name}.ln2", cfg.d_model)
    _add_ffn(store, rng, f"{name}.ffn", cfg.d_model, cfg.d_inner)


def init_parameters(cfg, seed=0):
    """Xavier-uniform matrices, zero biases, N(0, d^-0.5) embeddings."""
    rng = np.random.default_rng([seed, 7])
    d = cfg.d_model
    store = ParameterStore()
    store["embed.tokens"] = Tensor(rng.normal(0.0, d ** -0.5, size=(cfg.vocab_size, d)), True,
                                   "embed.tokens")
    store["out.bias"] = Tensor(np.zeros(cfg.vocab_size), True, "out.bias")
    store["audio.tags"] = Tensor(rng.normal(0.0, 1.0, size=(N_LANG_TAGS, cfg.feature_dim)), True,
                                 "audio.tags")
    _add_linear(store, rng, "audio.proj", cfg.feature_dim, d)
    for i in range(cfg.private_audio_layers):
        _add_encoder_layer(store, rng, f"audio.layers.{i}", cfg)
    for j in range(cfg.text_layers):
        _add_encoder_layer(store, rng, f"shared.layers.{j}", cfg)
    _add_norm(store, "shared.norm", d)
    _add_linear(store, rng, "dec.lang_proj", 2 * d, d)
    for k in range(cfg.decoder_layers):
        name = f"dec.layers.{k}"
        _add_norm(store, f"{name}.ln1", d)
        _add_attention(store, rng, f"{name}.self", d, cross=False)
        _add_norm(store, f"{name}.ln2", d)
        _add_attention(store, rng, f"{name}.cross", d, cross=True)
        _add_norm(store, f"{name}.ln3", d)
        _add_ffn(store, rng, f"{name}.ffn", d, cfg.d_inner)
    _add_norm(store, "dec.norm", d)
    return store
