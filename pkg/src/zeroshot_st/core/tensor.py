"""Dense float64 tensors with reverse-mode differentiation.

Every op builds its output through :func:`_node`, which records the parents and a
closure mapping the output gradient to one gradient per parent. ``backward``
walks the recorded graph in reverse topological order.

Gradients are never updated in place, so a closure may hand the same array to
several parents without aliasing problems.
"""
from __future__ import annotations

import contextlib
import math

import numpy as np

from ..errors import ContractError, DimensionError, NonFiniteError, TokenIndexError

CHECK_FINITE = True
_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block."""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


def is_grad_enabled():
    return _grad_enabled


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_op", "name")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None
        self._op = "leaf"
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else self.data.item()

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{flag}{label})"

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        return transpose(self, axes or None)

    def backward(self):
        backward(self)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _check_finite(arr, op):
    # a single reduction: any NaN/Inf makes the sum non-finite
    if CHECK_FINITE and not math.isfinite(float(np.sum(arr))):
        if not np.isfinite(arr).all():
            raise NonFiniteError(f"non-finite values produced by {op}")


def _node(data, parents, backward_fn, op):
    _check_finite(data, op)
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.name = None
    out._op = op
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    else:
        out.requires_grad = False
        out._parents = ()
        out._backward = None
    return out


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _topo_order(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss):
    """Populate ``.grad`` on every tensor reachable from the scalar ``loss``.

    Leaf gradients accumulate onto whatever the leaf already holds; callers clear
    them first (``ParameterStore.zero_grad``). Intermediate gradients are reset.
    """
    if not isinstance(loss, Tensor) or loss.data.size != 1:
        shape = loss.shape if isinstance(loss, Tensor) else type(loss).__name__
        raise ContractError(f"backward() needs a scalar loss, got shape {shape}")
    if not loss.requires_grad:
        return
    order = _topo_order(loss)
    for node in order:
        if node._backward is not None:
            node.grad = None
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward is None or node.grad is None:
            continue
        grads = node._backward(node.grad)
        for parent, g in zip(node._parents, grads):
            if g is None or not parent.requires_grad:
                continue
            _check_finite(g, f"backward of {node._op}")
            parent.grad = g if parent.grad is None else parent.grad + g


# ---------------------------------------------------------------- elementwise

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return _node(a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)), "add")


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return _node(a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)), "sub")


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    return _node(ad * bd, (a, b),
                 lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)),
                 "mul")


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    out = ad / bd
    return _node(out, (a, b),
                 lambda g: (_unbroadcast(g / bd, ad.shape),
                            _unbroadcast(-g * out / bd, bd.shape)),
                 "div")


def neg(a):
    return _node(-a.data, (a,), lambda g: (-g,), "neg")


def relu(a):
    out = np.maximum(a.data, 0.0)
    return _node(out, (a,), lambda g: (g * (out > 0),), "relu")


def exp(a):
    out = np.exp(a.data)
    return _node(out, (a,), lambda g: (g * out,), "exp")


def log(a):
    ad = a.data
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(ad)
    return _node(out, (a,), lambda g: (g / ad,), "log")


def masked_fill(a, mask, value):
    """Replace entries where ``mask`` is true by the constant ``value``."""
    mask = np.asarray(mask, dtype=bool)
    keep = ~mask
    shape = a.shape
    return _node(np.where(mask, value, a.data), (a,),
                 lambda g: (_unbroadcast(g * keep, shape),), "masked_fill")


# -------------------------------------------------------------------- shapes

def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    if ad.ndim < 2 or bd.ndim < 2 or ad.shape[-1] != bd.shape[-2]:
        raise DimensionError(f"matmul shape mismatch: {ad.shape} x {bd.shape}")

    def grad_fn(g):
        if bd.ndim == 2:
            ga = g @ bd.T
            k, n = bd.shape
            gb = ad.reshape(-1, k).T @ g.reshape(-1, n)
        else:
            ga = _unbroadcast(g @ np.swapaxes(bd, -1, -2), ad.shape)
            gb = _unbroadcast(np.swapaxes(ad, -1, -2) @ g, bd.shape)
        return ga, gb

    return _node(ad @ bd, (a, b), grad_fn, "matmul")


def reshape(a, shape):
    old = a.shape
    return _node(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),), "reshape")


def transpose(a, axes=None):
    axes = tuple(reversed(range(a.ndim))) if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))
    return _node(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),), "transpose")


def swapaxes(a, i, j):
    return _node(np.swapaxes(a.data, i, j), (a,), lambda g: (np.swapaxes(g, i, j),), "swapaxes")


def broadcast_to(a, shape):
    old = a.shape
    return _node(np.broadcast_to(a.data, shape).copy(), (a,),
                 lambda g: (_unbroadcast(g, old),), "broadcast_to")


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    cuts = np.cumsum(sizes)[:-1]
    return _node(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors),
                 lambda g: tuple(np.split(g, cuts, axis=axis)), "concat")


def getitem(a, index):
    shape = a.shape

    def grad_fn(g):
        full = np.zeros(shape)
        full[index] = g
        return (full,)

    return _node(a.data[index], (a,), grad_fn, "getitem")


# --------------------------------------------------------------- reductions

def tsum(a, axis=None, keepdims=False):
    shape = a.shape

    def grad_fn(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape),)

    return _node(np.asarray(a.data.sum(axis=axis, keepdims=keepdims)), (a,), grad_fn, "sum")


def mean(a, axis=None, keepdims=False):
    count = a.data.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return tsum(a, axis, keepdims) * (1.0 / count)


# ------------------------------------------------------------------- fused

def softmax(a, axis=-1):
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)
    return _node(out, (a,),
                 lambda g: (out * (g - (g * out).sum(axis=axis, keepdims=True)),), "softmax")


def log_softmax(a, axis=-1):
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    probs = np.exp(out)
    return _node(out, (a,),
                 lambda g: (g - probs * g.sum(axis=axis, keepdims=True),), "log_softmax")


def layer_norm(x, gain, bias, eps=1e-5):
    """Normalize over the last axis, then apply ``gain`` and ``bias``."""
    if eps <= 0:
        raise ContractError("layer_norm eps must be positive")
    xd = x.data
    mu = xd.mean(axis=-1, keepdims=True)
    centered = xd - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    gd = gain.data
    n = xd.shape[-1]

    def grad_fn(g):
        gx_hat = g * gd
        gx = inv_std * (gx_hat - gx_hat.mean(axis=-1, keepdims=True)
                        - xhat * (gx_hat * xhat).mean(axis=-1, keepdims=True))
        flat_g = g.reshape(-1, n)
        return (gx,
                (flat_g * xhat.reshape(-1, n)).sum(axis=0),
                flat_g.sum(axis=0))

    return _node(xhat * gd + bias.data, (x, gain, bias), grad_fn, "layer_norm")


def embedding(weight, ids):
    """Gather rows of ``weight`` for the integer array ``ids``."""
    ids = np.asarray(ids)
    vocab = weight.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= vocab):
        raise TokenIndexError(f"token id out of range [0, {vocab}): {ids.min()}..{ids.max()}")
    dim = weight.shape[1]

    def grad_fn(g):
        full = np.zeros((vocab, dim))
        np.add.at(full, ids.reshape(-1), g.reshape(-1, dim))
        return (full,)

    return _node(weight.data[ids], (weight,), grad_fn, "embedding")


def dropout(x, rate, rng, training=True):
    """Inverted dropout; identity when ``rate`` is 0 or outside training."""
    if not training or rate <= 0.0:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return _node(x.data * keep, (x,), lambda g: (g * keep,), "dropout")


def token_dropout(x, rate, rng, training=True):
    """Zero whole vectors along the last axis (word dropout)."""
    if not training or rate <= 0.0:
        return x
    keep = (rng.random(x.shape[:-1] + (1,)) >= rate) / (1.0 - rate)
    return _node(x.data * keep, (x,), lambda g: (g * keep,), "token_dropout")


def cross_entropy_label_smoothed(logits, targets, smoothing=0.0, pad_id=None):
    """Mean over non-pad positions of the smoothed cross-entropy.

    The target distribution puts ``1 - smoothing`` on the gold token and
    ``smoothing / (V - 1)`` on every other token.
    """
    if not 0.0 <= smoothing < 1.0:
        raise ContractError(f"smoothing must lie in [0, 1), got {smoothing}")
    targets = np.asarray(targets)
    vocab = logits.shape[-1]
    if targets.shape != logits.shape[:-1]:
        raise DimensionError(f"targets {targets.shape} do not match logits {logits.shape}")
    if targets.size and (targets.min() < 0 or targets.max() >= vocab):
        raise TokenIndexError(f"target id out of range [0, {vocab})")
    valid = np.ones(targets.shape, dtype=bool) if pad_id is None else targets != pad_id
    count = int(valid.sum())
    if count == 0:
        raise ContractError("cross-entropy over an all-padding batch")

    z = logits.data
    shifted = z - z.max(axis=-1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    off = smoothing / (vocab - 1) if vocab > 1 else 0.0
    q = np.full(z.shape, off)
    np.put_along_axis(q, targets[..., None], 1.0 - smoothing, axis=-1)
    per_pos = -(q * logp).sum(axis=-1)
    loss = float((per_pos * valid).sum() / count)
    weight = valid[..., None] / count

    def grad_fn(g):
        # sum(q) = 1, so d/dz of -sum(q log softmax(z)) is softmax(z) - q
        return ((np.exp(logp) - q) * weight * g,)

    return _node(np.asarray(loss), (logits,), grad_fn, "cross_entropy")


def linear(x, w, b=None):
    """``x @ w + b`` for ``x`` of shape [..., k] and ``w`` of shape [k, n]."""
    xd, wd = x.data, w.data
    if wd.ndim != 2 or xd.shape[-1] != wd.shape[0]:
        raise DimensionError(f"linear shape mismatch: {xd.shape} x {wd.shape}")
    k, n = wd.shape
    out = xd @ wd
    if b is not None:
        out = out + b.data

    def grad_fn(g):
        flat = g.reshape(-1, n)
        grads = (g @ wd.T, xd.reshape(-1, k).T @ flat)
        return grads + (flat.sum(axis=0),) if b is not None else grads

    parents = (x, w) if b is None else (x, w, b)
    return _node(out, parents, grad_fn, "linear")


def split_heads(x, n_heads):
    """[B, T, H*dk] -> [B, H, T, dk]."""
    bsz, t, d = x.shape
    dk = d // n_heads
    out = x.data.reshape(bsz, t, n_heads, dk).transpose(0, 2, 1, 3)
    return _node(out, (x,), lambda g: (g.transpose(0, 2, 1, 3).reshape(bsz, t, d),), "split_heads")


def merge_heads(x):
    """[B, H, T, dk] -> [B, T, H*dk]."""
    bsz, h, t, dk = x.shape
    out = x.data.transpose(0, 2, 1, 3).reshape(bsz, t, h * dk)
    return _node(out, (x,), lambda g: (g.reshape(bsz, t, h, dk).transpose(0, 2, 1, 3),),
                 "merge_heads")


NEG_LARGE = -1e9


def attention(q, k, v, blocked=None, dropout_rate=0.0, rng=None, training=False):
    """Scaled dot-product attention over the last two axes.

    ``blocked`` broadcasts to the score shape [..., Tq, Tk]; true entries get
    zero weight. Masked scores are set to a large finite negative number so
    their weights underflow to exactly zero.
    """
    qd, kd, vd = q.data, k.data, v.data
    scale = 1.0 / math.sqrt(qd.shape[-1])
    scores = (qd @ np.swapaxes(kd, -1, -2)) * scale
    if blocked is not None:
        # additive bias on the (small) mask shape is much cheaper than a full where()
        scores = scores + np.where(blocked, NEG_LARGE, 0.0)
    scores -= scores.max(axis=-1, keepdims=True)
    probs = np.exp(scores)
    probs /= probs.sum(axis=-1, keepdims=True)
    if training and dropout_rate > 0.0:
        keep = (rng.random(probs.shape) >= dropout_rate) / (1.0 - dropout_rate)
        dropped = probs * keep
    else:
        keep = None
        dropped = probs

    def grad_fn(g):
        gv = _unbroadcast(np.swapaxes(dropped, -1, -2) @ g, vd.shape)
        gp = g @ np.swapaxes(vd, -1, -2)
        if keep is not None:
            gp = gp * keep
        # blocked entries have probs == 0 exactly, so their score gradient vanishes
        gs = probs * (gp - (gp * probs).sum(axis=-1, keepdims=True))
        gs *= scale
        return gs @ kd, _unbroadcast(np.swapaxes(gs, -1, -2) @ qd, kd.shape), gv

    return _node(dropped @ vd, (q, k, v), grad_fn, "attention")
