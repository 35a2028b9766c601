"""Pure-numpy sequence kernels for the recurrent cell.

These are the reference implementation of the hot loops; the compiled
extension in ``_lstm_cy`` mirrors them operation for operation. Gate
parameters arrive stacked as single matrices: ``w_h2`` is (4H, H), ``w_x2``
is (4H, In) and ``b2`` is (4H,), with rows ordered forget / update /
candidate / output in blocks of H.
"""
from __future__ import annotations

import numpy as np


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # Split by sign to stay overflow-free for large |x|.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def lstm_seq_forward(
    w_h2: np.ndarray, w_x2: np.ndarray, b2: np.ndarray, xs: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Run the cell over a batch of sequences from the all-zero state.

    ``xs`` is (B, z, In). Returns per-step caches needed for the backward
    pass: post-activation gates (z, B, 4H), cell state (z, B, H), its tanh
    (z, B, H) and hidden state (z, B, H).
    """
    B, z, _ = xs.shape
    H4 = w_h2.shape[0]
    H = H4 // 4
    gates = np.empty((z, B, H4))
    cell = np.empty((z, B, H))
    tanh_cell = np.empty((z, B, H))
    hidden = np.empty((z, B, H))
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    for t in range(z):
        pre = h @ w_h2.T + xs[:, t, :] @ w_x2.T + b2
        f = _sigmoid(pre[:, :H])
        u = _sigmoid(pre[:, H : 2 * H])
        cand = np.tanh(pre[:, 2 * H : 3 * H])
        o = _sigmoid(pre[:, 3 * H :])
        c = f * c + u * cand
        tc = np.tanh(c)
        h = o * tc
        g = gates[t]
        g[:, :H] = f
        g[:, H : 2 * H] = u
        g[:, 2 * H : 3 * H] = cand
        g[:, 3 * H :] = o
        cell[t] = c
        tanh_cell[t] = tc
        hidden[t] = h
    return gates, cell, tanh_cell, hidden


def lstm_seq_backward(
    w_h2: np.ndarray,
    w_x2: np.ndarray,
    xs: np.ndarray,
    gates: np.ndarray,
    cell: np.ndarray,
    tanh_cell: np.ndarray,
    hidden: np.ndarray,
    d_out_final: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Backpropagate through time given the gradient at the final output gate.

    The prediction head consumes only the last step's output-gate activation,
    so the seed gradient ``d_out_final`` (B, H) enters there; everything
    earlier receives gradient through the hidden-state recurrence. Returns
    parameter gradients (d_wh (4H, H), d_wx (4H, In), d_b (4H,)) summed over
    the batch.
    """
    z, B, H4 = gates.shape
    H = H4 // 4
    d_wh = np.zeros_like(w_h2)
    d_wx = np.zeros_like(w_x2)
    d_b = np.zeros(H4)
    dh = np.zeros((B, H))
    dc = np.zeros((B, H))
    da = np.empty((B, H4))
    for t in range(z - 1, -1, -1):
        g = gates[t]
        f = g[:, :H]
        u = g[:, H : 2 * H]
        cand = g[:, 2 * H : 3 * H]
        o = g[:, 3 * H :]
        tc = tanh_cell[t]
        do = dh * tc
        if t == z - 1:
            do = do + d_out_final
        dc = dc + dh * o * (1.0 - tc * tc)
        if t > 0:
            da[:, :H] = dc * cell[t - 1] * f * (1.0 - f)
        else:
            da[:, :H] = 0.0  # zero initial cell state
        da[:, H : 2 * H] = dc * cand * u * (1.0 - u)
        da[:, 2 * H : 3 * H] = dc * u * (1.0 - cand * cand)
        da[:, 3 * H :] = do * o * (1.0 - o)
        if t > 0:
            d_wh += da.T @ hidden[t - 1]
        d_wx += da.T @ xs[:, t, :]
        d_b += da.sum(axis=0)
        dh = da @ w_h2
        dc = dc * f
    return d_wh, d_wx, d_b
