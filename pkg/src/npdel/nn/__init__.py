from .layers import ShapeError, conv1d_apply, dense_apply, embedding_lookup, init_dense
from .params import (AdamState, CheckpointError, ParameterSet, adam_step, checkpoint_bytes,
                     checkpoint_from_bytes, checkpoint_load, checkpoint_save)
from .tensor import GraphError, Tensor, as_tensor, clamp, concat, mean, relu, softplus, stack

__all__ = [
    "AdamState", "CheckpointError", "GraphError", "ParameterSet", "ShapeError", "Tensor",
    "adam_step", "as_tensor", "checkpoint_bytes", "checkpoint_from_bytes", "checkpoint_load",
    "checkpoint_save", "clamp", "concat", "conv1d_apply", "dense_apply", "embedding_lookup",
    "init_dense", "mean", "relu", "softplus", "stack",
]
