"""Minimal neural toolkit: recurrent forecaster with exact manual gradients.

The sequence kernels have two interchangeable implementations (compiled
extension and pure numpy); see :mod:`parkfed.neural.backend`.
"""
from .backend import HAVE_COMPILED, active_backend, set_backend
from .model import (
    CellState,
    DimensionError,
    ForwardTape,
    GateRecord,
    evaluate_mse,
    forward,
    forward_batch,
    loss_and_grad,
    lstm_step,
    sgd_step,
    zero_state,
)
from .weights import (
    GATE_ORDER,
    LstmWeights,
    MlpHead,
    ModelWeights,
    add_scaled,
    flatten,
    from_bytes,
    init_model,
    param_count,
    to_bytes,
    unflatten,
    zeros_like_model,
)

__all__ = [
    "HAVE_COMPILED",
    "active_backend",
    "set_backend",
    "CellState",
    "DimensionError",
    "ForwardTape",
    "GateRecord",
    "evaluate_mse",
    "forward",
    "forward_batch",
    "loss_and_grad",
    "lstm_step",
    "sgd_step",
    "zero_state",
    "GATE_ORDER",
    "LstmWeights",
    "MlpHead",
    "ModelWeights",
    "add_scaled",
    "flatten",
    "from_bytes",
    "init_model",
    "param_count",
    "to_bytes",
    "unflatten",
    "zeros_like_model",
]
