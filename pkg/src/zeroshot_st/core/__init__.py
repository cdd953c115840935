"""Tensor engine, optimizer, and gradient checks."""
from .gradcheck import check_gradients, numerical_gradient, relative_error
from .optim import AdamState, adam_step, clip_grad_norm, noam_rate
from .tensor import (
    Tensor,
    backward,
    concat,
    cross_entropy_label_smoothed,
    dropout,
    embedding,
    layer_norm,
    log_softmax,
    masked_fill,
    matmul,
    no_grad,
    relu,
    softmax,
    token_dropout,
)

__all__ = [
    "AdamState", "Tensor", "adam_step", "backward", "check_gradients", "clip_grad_norm",
    "concat", "cross_entropy_label_smoothed", "dropout", "embedding", "layer_norm",
    "log_softmax", "masked_fill", "matmul", "no_grad", "noam_rate", "numerical_gradient",
    "relative_error", "relu", "softmax", "token_dropout",
]
