"""Siamese recurrent pair classifier: parameters, forward/backward, optimizer,
and checkpoint persistence."""

from .adam import AdamState
from .checkpoint import ModelCheckpoint, load_checkpoint, save_checkpoint
from .config import ModelConfig
from .network import (
    EVAL_BATCH,
    ModelParameters,
    backward_and_step,
    classify_pair,
    classify_pairs,
    combine,
    count_params,
    encode_string,
    encode_strings,
    init_model,
    loss_bce,
    pair_loss_and_grads,
)

__all__ = [
    "AdamState",
    "EVAL_BATCH",
    "ModelCheckpoint",
    "ModelConfig",
    "ModelParameters",
    "backward_and_step",
    "classify_pair",
    "classify_pairs",
    "combine",
    "count_params",
    "encode_string",
    "encode_strings",
    "init_model",
    "load_checkpoint",
    "loss_bce",
    "pair_loss_and_grads",
    "save_checkpoint",
]
