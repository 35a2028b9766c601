"""Selects the sequence-kernel implementation at import time.

The compiled extension is used when it imported cleanly; otherwise the numpy
reference takes over. ``PARKFED_BACKEND=numpy|compiled`` forces the choice
(the benchmark and the equivalence tests use this).
"""
from __future__ import annotations

import os

from . import lstm_numpy

try:
    from . import _lstm_cy  # type: ignore[attr-defined]

    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - depends on the build
    _lstm_cy = None
    HAVE_COMPILED = False

_BACKENDS = {"numpy": lstm_numpy}
if HAVE_COMPILED:
    _BACKENDS["compiled"] = _lstm_cy


def _initial_choice() -> str:
    forced = os.environ.get("PARKFED_BACKEND", "").strip().lower()
    if forced:
        if forced not in _BACKENDS:
            raise ImportError(
                f"PARKFED_BACKEND={forced!r} unavailable; "
                f"choices: {sorted(_BACKENDS)}"
            )
        return forced
    return "compiled" if HAVE_COMPILED else "numpy"


_active = _initial_choice()


def active_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choices: {sorted(_BACKENDS)}")
    global _active
    _active = name


def seq_forward(w_h2, w_x2, b2, xs):
    return _BACKENDS[_active].lstm_seq_forward(w_h2, w_x2, b2, xs)


def seq_backward(w_h2, w_x2, xs, gates, cell, tanh_cell, hidden, d_out_final):
    return _BACKENDS[_active].lstm_seq_backward(
        w_h2, w_x2, xs, gates, cell, tanh_cell, hidden, d_out_final
    )
