"""Forecaster forward/backward passes, losses and the SGD step.

The model runs the recurrent cell over a window of ``z`` occupancy values
from the all-zero state and feeds the final output-gate activation through a
small perceptron to produce the next-step prediction. Gradients are exact and
computed by backpropagation through time; there is no autodiff framework
underneath, which keeps the federation's weight exchange format transparent.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import backend
from .lstm_numpy import _sigmoid
from .weights import LstmWeights, MlpHead, ModelWeights, zeros_like_model


class DimensionError(ValueError):
    """Shapes of weights and inputs do not line up."""


@dataclass(frozen=True)
class CellState:
    """Hidden and cell vectors carried between recurrent steps."""

    h: np.ndarray
    c: np.ndarray

    def __post_init__(self) -> None:
        if self.h.shape != self.c.shape or self.h.ndim != 1:
            raise DimensionError("h and c must be 1-d vectors of equal length")


class GateRecord(NamedTuple):
    """Post-activation gate values retained for backprop."""

    forget: np.ndarray
    update: np.ndarray
    candidate: np.ndarray
    output: np.ndarray


@dataclass
class ForwardTape:
    """Cached activations from one batched forward pass."""

    xs: np.ndarray  # (B, z, In)
    gates: np.ndarray  # (z, B, 4H)
    cell: np.ndarray  # (z, B, H)
    tanh_cell: np.ndarray  # (z, B, H)
    hidden: np.ndarray  # (z, B, H)
    head_in: np.ndarray  # (B, H) final output-gate activation
    head_a1: np.ndarray  # (B, head_hidden)
    preds: np.ndarray  # (B,)


def _stacked(lstm: LstmWeights) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    h4 = 4 * lstm.hidden_size
    return (
        np.ascontiguousarray(lstm.w_h.reshape(h4, lstm.hidden_size)),
        np.ascontiguousarray(lstm.w_x.reshape(h4, lstm.input_size)),
        np.ascontiguousarray(lstm.b.reshape(h4)),
    )


def lstm_step(
    w: LstmWeights, x: np.ndarray, prev: CellState
) -> tuple[CellState, GateRecord]:
    """One recurrent step on a single sample.

    Gate pre-activations combine the previous hidden state, the input and the
    bias; forget/update/output pass through a sigmoid, the candidate through
    tanh. The new cell state blends the old one (scaled by the forget gate)
    with the candidate (scaled by the update gate).
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape[0] != w.input_size:
        raise DimensionError(f"input has size {x.shape[0]}, expected {w.input_size}")
    if prev.h.shape[0] != w.hidden_size:
        raise DimensionError(
            f"state has size {prev.h.shape[0]}, expected {w.hidden_size}"
        )
    pre = w.w_h @ prev.h + w.w_x @ x + w.b  # (4, H)
    forget = _sigmoid(pre[0])
    update = _sigmoid(pre[1])
    candidate = np.tanh(pre[2])
    output = _sigmoid(pre[3])
    c = forget * prev.c + update * candidate
    h = output * np.tanh(c)
    return CellState(h=h, c=c), GateRecord(forget, update, candidate, output)


def zero_state(w: LstmWeights) -> CellState:
    return CellState(h=np.zeros(w.hidden_size), c=np.zeros(w.hidden_size))


def _as_batch(windows: np.ndarray, input_size: int) -> np.ndarray:
    xs = np.asarray(windows, dtype=np.float64)
    if xs.ndim == 1:
        xs = xs[None, :]
    if xs.ndim == 2:
        if input_size != 1:
            raise DimensionError("scalar windows require input_size == 1")
        xs = xs[:, :, None]
    if xs.shape[2] != input_size:
        raise DimensionError(
            f"window feature size {xs.shape[2]} != model input size {input_size}"
        )
    return np.ascontiguousarray(xs)


def forward_batch(model: ModelWeights, windows: np.ndarray) -> ForwardTape:
    """Predict for a batch of windows, caching everything backprop needs."""
    xs = _as_batch(windows, model.input_size)
    w_h2, w_x2, b2 = _stacked(model.lstm)
    gates, cell, tanh_cell, hidden = backend.seq_forward(w_h2, w_x2, b2, xs)
    H = model.hidden_size
    head_in = gates[-1, :, 3 * H :]
    head = model.head
    a1 = np.tanh(head_in @ head.w1.T + head.b1)
    preds = (a1 @ head.w2.T + head.b2).ravel()
    return ForwardTape(
        xs=xs,
        gates=gates,
        cell=cell,
        tanh_cell=tanh_cell,
        hidden=hidden,
        head_in=head_in,
        head_a1=a1,
        preds=preds,
    )


def forward(model: ModelWeights, window: np.ndarray) -> tuple[float, ForwardTape]:
    """Single-window prediction; returns the scalar and the activation tape."""
    tape = forward_batch(model, np.asarray(window, dtype=np.float64)[None, :])
    return float(tape.preds[0]), tape


def _unpack_batch(
    batch: Sequence[tuple[np.ndarray, float]] | tuple[np.ndarray, np.ndarray],
    targets: np.ndarray | None,
) -> tuple[np.ndarray, np.ndarray]:
    if targets is not None:
        return np.asarray(batch, dtype=np.float64), np.asarray(
            targets, dtype=np.float64
        )
    pairs = list(batch)
    if not pairs:
        raise ValueError("batch must be nonempty")
    windows = np.asarray([p[0] for p in pairs], dtype=np.float64)
    ys = np.asarray([p[1] for p in pairs], dtype=np.float64)
    return windows, ys


def loss_and_grad(
    model: ModelWeights,
    batch,
    targets: np.ndarray | None = None,
) -> tuple[float, ModelWeights]:
    """Mean squared error over the batch and its exact gradient.

    Accepts either ``(windows, targets)`` arrays or a list of
    ``(window, target)`` pairs.
    """
    windows, ys = _unpack_batch(batch, targets)
    if windows.shape[0] == 0:
        raise ValueError("batch must be nonempty")
    tape = forward_batch(model, windows)
    B = windows.shape[0]
    residuals = tape.preds - ys
    loss = float(residuals @ residuals / B)

    d_pred = (2.0 / B) * residuals  # (B,)
    head = model.head
    a1 = tape.head_a1
    d_w2 = d_pred[None, :] @ a1  # (1, Hh)
    d_b2 = np.array([d_pred.sum()])
    d_a1 = (d_pred[:, None] * head.w2) * (1.0 - a1 * a1)  # (B, Hh)
    d_w1 = d_a1.T @ tape.head_in
    d_b1 = d_a1.sum(axis=0)
    d_out_final = d_a1 @ head.w1  # (B, H)

    w_h2, w_x2, _ = _stacked(model.lstm)
    d_wh2, d_wx2, d_b_flat = backend.seq_backward(
        w_h2,
        w_x2,
        tape.xs,
        tape.gates,
        tape.cell,
        tape.tanh_cell,
        tape.hidden,
        np.ascontiguousarray(d_out_final),
    )
    H = model.hidden_size
    grad = zeros_like_model(model)
    grad.lstm.w_h[:] = d_wh2.reshape(4, H, H)
    grad.lstm.w_x[:] = d_wx2.reshape(4, H, model.input_size)
    grad.lstm.b[:] = d_b_flat.reshape(4, H)
    grad.head.w1[:] = d_w1
    grad.head.b1[:] = d_b1
    grad.head.w2[:] = d_w2
    grad.head.b2[:] = d_b2
    return loss, grad


def sgd_step(model: ModelWeights, grad: ModelWeights, lr: float) -> ModelWeights:
    """Plain gradient descent: every parameter moves by ``-lr`` times its grad."""
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    out = model.copy()
    for dst, g in zip(out.arrays(), grad.arrays()):
        dst -= lr * g
    return out


def evaluate_mse(model: ModelWeights, batch, targets: np.ndarray | None = None) -> float:
    """Mean squared error without gradients."""
    windows, ys = _unpack_batch(batch, targets)
    if windows.shape[0] == 0:
        raise ValueError("evaluation set must be nonempty")
    tape = forward_batch(model, windows)
    residuals = tape.preds - ys
    return float(residuals @ residuals / windows.shape[0])
