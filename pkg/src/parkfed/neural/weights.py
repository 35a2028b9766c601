"""Parameter containers for the recurrent forecaster and their canonical layout.

The recurrent cell keeps four gates (forget, update, candidate, output), each
with a hidden-to-hidden matrix, an input-to-hidden matrix and a bias. Gate
parameters are stored stacked along a leading gate axis so the compute kernels
can treat them as single matrices. The scalar prediction head is a one-hidden-
layer perceptron with tanh activation.

Canonical flat layout (the order used by ``flatten`` and the byte format):
gate-stacked ``w_h`` (4, H, H) row-major, then ``w_x`` (4, H, In), then ``b``
(4, H), then head ``w1`` (Hh, H), ``b1`` (Hh,), ``w2`` (1, Hh), ``b2`` (1,).
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

GATE_ORDER = ("forget", "update", "candidate", "output")

_MAGIC = b"PFW1"


class GateView(NamedTuple):
    w_h: np.ndarray  # (hidden, hidden)
    w_x: np.ndarray  # (hidden, input)
    b: np.ndarray  # (hidden,)


@dataclass
class LstmWeights:
    """Gate parameters, stacked as (4, ...) in :data:`GATE_ORDER`."""

    w_h: np.ndarray  # (4, hidden, hidden)
    w_x: np.ndarray  # (4, hidden, input)
    b: np.ndarray  # (4, hidden)

    def __post_init__(self) -> None:
        h = self.w_h.shape[1]
        if self.w_h.shape != (4, h, h):
            raise ValueError(f"w_h must be (4, H, H), got {self.w_h.shape}")
        if self.w_x.shape[:2] != (4, h):
            raise ValueError(f"w_x must be (4, H, In), got {self.w_x.shape}")
        if self.b.shape != (4, h):
            raise ValueError(f"b must be (4, H), got {self.b.shape}")
        for arr in (self.w_h, self.w_x, self.b):
            if not np.all(np.isfinite(arr)):
                raise ValueError("gate weights must be finite")

    @property
    def hidden_size(self) -> int:
        return self.w_h.shape[1]

    @property
    def input_size(self) -> int:
        return self.w_x.shape[2]

    def gate(self, name: str) -> GateView:
        idx = GATE_ORDER.index(name)
        return GateView(self.w_h[idx], self.w_x[idx], self.b[idx])


@dataclass
class MlpHead:
    """tanh hidden layer followed by a linear scalar output."""

    w1: np.ndarray  # (head_hidden, hidden)
    b1: np.ndarray  # (head_hidden,)
    w2: np.ndarray  # (1, head_hidden)
    b2: np.ndarray  # (1,)

    @property
    def width(self) -> int:
        return self.w1.shape[0]


@dataclass
class ModelWeights:
    """Full parameter bundle: recurrent gates plus the prediction head."""

    lstm: LstmWeights
    head: MlpHead

    @property
    def hidden_size(self) -> int:
        return self.lstm.hidden_size

    @property
    def input_size(self) -> int:
        return self.lstm.input_size

    def arrays(self) -> tuple[np.ndarray, ...]:
        """All parameter arrays in canonical flat order."""
        return (
            self.lstm.w_h,
            self.lstm.w_x,
            self.lstm.b,
            self.head.w1,
            self.head.b1,
            self.head.w2,
            self.head.b2,
        )

    def copy(self) -> "ModelWeights":
        return ModelWeights(
            lstm=LstmWeights(
                self.lstm.w_h.copy(), self.lstm.w_x.copy(), self.lstm.b.copy()
            ),
            head=MlpHead(
                self.head.w1.copy(),
                self.head.b1.copy(),
                self.head.w2.copy(),
                self.head.b2.copy(),
            ),
        )


def param_count(input_size: int, hidden_size: int, head_hidden: int) -> int:
    """Total parameter count as a pure function of the layer sizes."""
    gates = 4 * (hidden_size * hidden_size + hidden_size * input_size + hidden_size)
    head = head_hidden * hidden_size + head_hidden + head_hidden + 1
    return gates + head


def init_model(
    seed: int,
    hidden_size: int = 256,
    input_size: int = 1,
    head_hidden: int = 32,
) -> ModelWeights:
    """Seeded uniform init in [-1/sqrt(hidden), +1/sqrt(hidden)].

    Keeps gate pre-activations small so the sigmoids start away from
    saturation.
    """
    rng = np.random.default_rng(seed)
    s = 1.0 / np.sqrt(hidden_size)
    lstm = LstmWeights(
        w_h=rng.uniform(-s, s, size=(4, hidden_size, hidden_size)),
        w_x=rng.uniform(-s, s, size=(4, hidden_size, input_size)),
        b=rng.uniform(-s, s, size=(4, hidden_size)),
    )
    sh = 1.0 / np.sqrt(max(head_hidden, 1))
    head = MlpHead(
        w1=rng.uniform(-s, s, size=(head_hidden, hidden_size)),
        b1=rng.uniform(-s, s, size=head_hidden),
        w2=rng.uniform(-sh, sh, size=(1, head_hidden)),
        b2=rng.uniform(-sh, sh, size=1),
    )
    return ModelWeights(lstm=lstm, head=head)


def zeros_like_model(model: ModelWeights) -> ModelWeights:
    return ModelWeights(
        lstm=LstmWeights(
            np.zeros_like(model.lstm.w_h),
            np.zeros_like(model.lstm.w_x),
            np.zeros_like(model.lstm.b),
        ),
        head=MlpHead(
            np.zeros_like(model.head.w1),
            np.zeros_like(model.head.b1),
            np.zeros_like(model.head.w2),
            np.zeros_like(model.head.b2),
        ),
    )


def flatten(model: ModelWeights) -> np.ndarray:
    """Concatenate all parameters into one float64 vector (canonical order)."""
    return np.concatenate([a.ravel() for a in model.arrays()])


def unflatten(flat: np.ndarray, like: ModelWeights) -> ModelWeights:
    """Inverse of :func:`flatten` for a model with the shapes of ``like``."""
    flat = np.asarray(flat, dtype=np.float64)
    out_arrays = []
    offset = 0
    for arr in like.arrays():
        n = arr.size
        out_arrays.append(flat[offset : offset + n].reshape(arr.shape).copy())
        offset += n
    if offset != flat.size:
        raise ValueError(f"flat vector has {flat.size} entries, expected {offset}")
    w_h, w_x, b, w1, b1, w2, b2 = out_arrays
    return ModelWeights(lstm=LstmWeights(w_h, w_x, b), head=MlpHead(w1, b1, w2, b2))


def add_scaled(model: ModelWeights, other: ModelWeights, scale: float) -> ModelWeights:
    """Return ``model + scale * other`` without touching the inputs."""
    out = model.copy()
    for dst, src in zip(out.arrays(), other.arrays()):
        dst += scale * src
    return out


def to_bytes(model: ModelWeights) -> bytes:
    """Canonical serialization: magic, little-endian int64 dims, float64 payload."""
    header = _MAGIC + struct.pack(
        "<3q", model.input_size, model.hidden_size, model.head.width
    )
    payload = flatten(model).astype("<f8").tobytes()
    return header + payload


def from_bytes(blob: bytes) -> ModelWeights:
    if blob[:4] != _MAGIC:
        raise ValueError("not a serialized model (bad magic)")
    input_size, hidden_size, head_hidden = struct.unpack("<3q", blob[4:28])
    flat = np.frombuffer(blob[28:], dtype="<f8").astype(np.float64)
    expected = param_count(input_size, hidden_size, head_hidden)
    if flat.size != expected:
        raise ValueError(f"payload has {flat.size} floats, expected {expected}")
    template = init_model(0, hidden_size, input_size, head_hidden)
    return unflatten(flat, template)
