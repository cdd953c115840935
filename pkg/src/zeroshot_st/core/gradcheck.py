"""Central finite-difference gradient checks."""
from __future__ import annotations

import numpy as np

from .tensor import no_grad


def numerical_gradient(fn, tensor, h=1e-5):
    """Central differences of the scalar ``fn()`` with respect to ``tensor.data``."""
    grad = np.zeros_like(tensor.data)
    flat = tensor.data.reshape(-1)
    out = grad.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            plus = float(fn().data)
            flat[i] = orig - h
            minus = float(fn().data)
            flat[i] = orig
            out[i] = (plus - minus) / (2 * h)
    return grad


def relative_error(analytic, numeric):
    """Max-norm relative error, guarded for near-zero gradients."""
    scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0), 1e-8)
    return float(np.abs(analytic - numeric).max(initial=0.0) / scale)


def check_gradients(fn, tensors, h=1e-5):
    """Return the worst relative error of analytic vs numeric gradients.

    ``fn`` rebuilds the scalar loss from scratch on each call and must be
    deterministic.
    """
    for t in tensors:
        t.grad = None
    loss = fn()
    loss.backward()
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in tensors]
    worst = 0.0
    for t, a in zip(tensors, analytic):
        worst = max(worst, relative_error(a, numerical_gradient(fn, t, h)))
    return worst
