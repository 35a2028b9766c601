"""Small dense networks with manual gradients, plus Adam.

The actor maps a flattened observation to the mean of a scalar Gaussian in
normalized action space (sigmoid-squashed into [0, 1]) with a learned,
state-independent log standard deviation. The critic maps the same
observation to a scalar value estimate. Everything is float64 numpy; the
networks are tiny, so per-sample matmuls are cheap and the whole training
loop stays deterministic under seeded generators.
"""
from __future__ import annotations

import numpy as np

LOG_2PI = float(np.log(2.0 * np.pi))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class Mlp:
    """Fully connected layers, tanh activations, linear output."""

    def __init__(self, sizes: tuple[int, ...], rng: np.random.Generator):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.sizes = tuple(sizes)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            s = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-s, s, size=(fan_out, fan_in)))
            self.biases.append(rng.uniform(-s, s, size=fan_out))

    def param_arrays(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Returns the raw (pre-squash) output (B, out) and layer activations."""
        a = np.atleast_2d(np.asarray(x, dtype=np.float64))
        cache = [a]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w.T + b
            a = z if i == last else np.tanh(z)
            cache.append(a)
        return a, cache

    def backward(
        self, cache: list[np.ndarray], d_out: np.ndarray
    ) -> tuple[list[np.ndarray], np.ndarray]:
        """Gradients in param_arrays() order plus the input gradient."""
        grads: list[np.ndarray] = [None] * (2 * len(self.weights))  # type: ignore
        d = np.atleast_2d(d_out)
        for i in range(len(self.weights) - 1, -1, -1):
            a_in = cache[i]
            if i < len(self.weights) - 1:
                a_out = cache[i + 1]
                d = d * (1.0 - a_out * a_out)
            grads[2 * i] = d.T @ a_in
            grads[2 * i + 1] = d.sum(axis=0)
            d = d @ self.weights[i]
        return grads, d


class Adam:
    """Per-array adaptive moment updates; state lives with the optimizer."""

    def __init__(
        self,
        arrays: list[np.ndarray],
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(a) for a in arrays]
        self.v = [np.zeros_like(a) for a in arrays]

    def step(self, arrays: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for a, g, m, v in zip(arrays, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            a -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


class GaussianPolicy:
    """Sigmoid-squashed Gaussian over the normalized action interval [0, 1]."""

    def __init__(
        self,
        state_dim: int,
        rng: np.random.Generator,
        hidden: tuple[int, ...] = (200, 50),
        init_log_std: float = -1.0,
        log_std_bounds: tuple[float, float] = (-5.0, 1.0),
        state_offset: np.ndarray | None = None,
        state_scale: np.ndarray | None = None,
    ):
        self.mlp = Mlp((state_dim, *hidden, 1), rng)
        self.log_std = np.array([float(init_log_std)])
        self.log_std_bounds = log_std_bounds
        self.state_offset = (
            np.zeros(state_dim) if state_offset is None else np.asarray(state_offset)
        )
        self.state_scale = (
            np.ones(state_dim) if state_scale is None else np.asarray(state_scale)
        )

    def param_arrays(self) -> list[np.ndarray]:
        return self.mlp.param_arrays() + [self.log_std]

    def _scaled(self, states: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(states) - self.state_offset) / self.state_scale

    def mean(self, states: np.ndarray) -> np.ndarray:
        raw, _ = self.mlp.forward(self._scaled(states))
        return _sigmoid(raw).ravel()

    def std(self) -> float:
        return float(np.exp(self.log_std[0]))

    def sample(self, state: np.ndarray, rng: np.random.Generator) -> tuple[float, float]:
        """Draw a clamped action and its log-density under the Gaussian."""
        mean = float(self.mean(state)[0])
        sigma = self.std()
        action = float(np.clip(mean + sigma * rng.standard_normal(), 0.0, 1.0))
        return action, self._log_pdf(action, mean, sigma)

    @staticmethod
    def _log_pdf(action: float, mean: float, sigma: float) -> float:
        zscore = (action - mean) / sigma
        return -0.5 * zscore * zscore - np.log(sigma) - 0.5 * LOG_2PI

    def log_prob(
        self, states: np.ndarray, actions: np.ndarray
    ) -> tuple[np.ndarray, dict]:
        """Batched log-densities plus the cache needed for the backward pass."""
        scaled = self._scaled(states)
        raw, cache = self.mlp.forward(scaled)
        mean = _sigmoid(raw).ravel()
        sigma = self.std()
        zscore = (np.asarray(actions) - mean) / sigma
        logp = -0.5 * zscore * zscore - np.log(sigma) - 0.5 * LOG_2PI
        return logp, {"cache": cache, "mean": mean, "z": zscore, "sigma": sigma}

    def backward_logp(self, ctx: dict, d_logp: np.ndarray) -> list[np.ndarray]:
        """Gradients of sum(d_logp * logp) in param_arrays() order."""
        mean, z, sigma = ctx["mean"], ctx["z"], ctx["sigma"]
        d_mean = d_logp * z / sigma
        d_raw = (d_mean * mean * (1.0 - mean))[:, None]
        grads, _ = self.mlp.backward(ctx["cache"], d_raw)
        d_log_std = float(np.sum(d_logp * (z * z - 1.0)))
        return grads + [np.array([d_log_std])]

    def clamp_log_std(self) -> None:
        lo, hi = self.log_std_bounds
        self.log_std[0] = float(np.clip(self.log_std[0], lo, hi))


class ValueFunction:
    """Critic: dense net from a feature vector to a scalar value estimate."""

    def __init__(
        self,
        state_dim: int,
        rng: np.random.Generator,
        hidden: tuple[int, ...] = (128, 64),
        state_offset: np.ndarray | None = None,
        state_scale: np.ndarray | None = None,
    ):
        self.mlp = Mlp((state_dim, *hidden, 1), rng)
        self.state_offset = (
            np.zeros(state_dim) if state_offset is None else np.asarray(state_offset)
        )
        self.state_scale = (
            np.ones(state_dim) if state_scale is None else np.asarray(state_scale)
        )

    def param_arrays(self) -> list[np.ndarray]:
        return self.mlp.param_arrays()

    def _scaled(self, states: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(states) - self.state_offset) / self.state_scale

    def value(self, states: np.ndarray) -> np.ndarray:
        out, _ = self.mlp.forward(self._scaled(states))
        return out.ravel()

    def value_with_cache(self, states: np.ndarray) -> tuple[np.ndarray, list]:
        out, cache = self.mlp.forward(self._scaled(states))
        return out.ravel(), cache

    def backward(self, cache: list, d_value: np.ndarray) -> list[np.ndarray]:
        grads, _ = self.mlp.backward(cache, d_value[:, None])
        return grads
