"""Adam with an inverse-square-root warmup schedule."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ArgumentError, ContractError


def noam_rate(step, base_factor, model_dim, warmup):
    """Learning rate at optimizer step ``step`` (1-based).

    ``base_factor * model_dim**-0.5 * min(step**-0.5, step * warmup**-1.5)``
    """
    if step < 1:
        raise ArgumentError(f"schedule is defined for step >= 1, got {step}")
    return base_factor * model_dim ** -0.5 * min(step ** -0.5, step * warmup ** -1.5)


@dataclass
class AdamState:
    model_dim: int
    base_factor: float = 0.01
    warmup: int = 8000
    beta1: float = 0.9
    beta2: float = 0.98
    eps: float = 1e-9
    step: int = 0
    first: dict = field(default_factory=dict)
    second: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.warmup < 1 or self.model_dim < 1:
            raise ArgumentError("warmup and model_dim must be positive")
        if self.base_factor <= 0:
            raise ArgumentError("base_factor must be positive")

    def rate(self, step=None):
        return noam_rate(self.step if step is None else step,
                         self.base_factor, self.model_dim, self.warmup)


def adam_step(params, state):
    """Apply one bias-corrected Adam update to every parameter with a gradient.

    ``params`` maps names to tensors; parameters whose ``grad`` is ``None`` are
    treated as having zero gradient.
    """
    state.step += 1
    lr = state.rate()
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for name, p in params.items():
        g = p.grad
        if g is None:
            g = np.zeros_like(p.data)
        m = state.first.get(name)
        v = state.second.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
        if m.shape != p.data.shape or v.shape != p.data.shape or g.shape != p.data.shape:
            raise ContractError(
                f"moment buffers for {name!r} have shape {m.shape}, parameter has {p.data.shape}")
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        state.first[name] = m
        state.second[name] = v
        p.data = p.data - lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


def clip_grad_norm(params, max_norm):
    """Rescale all gradients jointly so their global L2 norm is at most ``max_norm``."""
    grads = [p.grad for p in params.values() if p.grad is not None]
    total = float(np.sqrt(sum(float((g * g).sum()) for g in grads)))
    if max_norm is not None and total > max_norm:
        scale = max_norm / (total + 1e-12)
        for p in params.values():
            if p.grad is not None:
                p.grad = p.grad * scale
    return total
