"""Dual-encoder multi-task transformer."""
from .config import ModelConfig, full_config, micro_config
from .params import ParameterStore, init_parameters
from .transformer import (
    EncoderOutput,
    Seq2SeqModel,
    aux_loss,
    depi_transform,
    forward_loss,
    mean_pool,
    pooled_squared_error,
    sinusoidal_positions,
)
